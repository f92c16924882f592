#pragma once

#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "scbfgs/errors.hpp"

namespace scbfgs {

/// Dense symmetric matrix with value semantics. Construction symmetrizes the
/// input, so entries(i,j) == entries(j,i) holds exactly afterwards. Positive
/// definiteness is not checked here; it is established by factorize().
class SpdMatrix {
public:
    explicit SpdMatrix(const Eigen::MatrixXd& a) {
        if (a.rows() != a.cols())
            throw DimensionMismatch("SpdMatrix: input is not square");
        m_ = 0.5 * (a + a.transpose());
    }

    static SpdMatrix identity(int d) {
        return SpdMatrix(Eigen::MatrixXd::Identity(d, d));
    }

    static SpdMatrix scaled_identity(int d, double a) {
        return SpdMatrix(a * Eigen::MatrixXd::Identity(d, d));
    }

    int dim() const { return static_cast<int>(m_.rows()); }
    const Eigen::MatrixXd& mat() const { return m_; }
    double operator()(int i, int j) const { return m_(i, j); }

private:
    Eigen::MatrixXd m_;
};

/// Cholesky-type factorization A = L L' with cached log-determinant.
class SpdFactorization {
public:
    SpdFactorization(Eigen::MatrixXd lower, double log_det)
        : l_(std::move(lower)), log_det_(log_det) {}

    int dim() const { return static_cast<int>(l_.rows()); }
    const Eigen::MatrixXd& lower() const { return l_; }
    double log_det() const { return log_det_; }

private:
    Eigen::MatrixXd l_;
    double log_det_;
};

/// Cholesky factorization with a relative pivot test: any pivot at or below
/// eps_p = 1e-14 * max diagonal entry means the matrix is treated as not
/// positive definite. No regularization is applied.
inline SpdFactorization factorize(const SpdMatrix& a) {
    const Eigen::MatrixXd& m = a.mat();
    const int n = a.dim();
    const double eps_p = 1e-14 * m.diagonal().maxCoeff();

    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
    double log_det = 0.0;
    for (int j = 0; j < n; ++j) {
        const double pivot = m(j, j) - l.row(j).head(j).squaredNorm();
        if (!(pivot > eps_p))
            throw NotPositiveDefinite("factorize: pivot " + std::to_string(pivot) +
                                      " at index " + std::to_string(j));
        l(j, j) = std::sqrt(pivot);
        log_det += 2.0 * std::log(l(j, j));
        for (int i = j + 1; i < n; ++i)
            l(i, j) = (m(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
    }
    return SpdFactorization(std::move(l), log_det);
}

inline Eigen::VectorXd solve_spd(const SpdFactorization& f, const Eigen::VectorXd& b) {
    if (b.size() != f.dim())
        throw DimensionMismatch("solve_spd: rhs has size " + std::to_string(b.size()) +
                                ", factorization has dim " + std::to_string(f.dim()));
    Eigen::VectorXd y = f.lower().triangularView<Eigen::Lower>().solve(b);
    return f.lower().transpose().triangularView<Eigen::Upper>().solve(y);
}

/// Psi(A) = Tr(A) - d - log Det(A), the divergence of an SPD matrix from the
/// identity. Nonnegative, zero iff A = I.
inline double potential_psi(const SpdMatrix& a) {
    const SpdFactorization f = factorize(a);
    return a.mat().trace() - a.dim() - f.log_det();
}

namespace detail {

inline Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> spd_eigen(const SpdMatrix& a,
                                                                const char* who) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.mat());
    if (es.info() != Eigen::Success)
        throw Error(std::string(who) + ": eigendecomposition failed");
    const double lmax = es.eigenvalues().maxCoeff();
    const double lmin = es.eigenvalues().minCoeff();
    if (!(lmin > 1e-14 * lmax) || !(lmax > 0.0))
        throw NotPositiveDefinite(std::string(who) + ": eigenvalue " + std::to_string(lmin));
    return es;
}

}  // namespace detail

/// Symmetric square root via eigendecomposition: returns S with S S = A.
inline SpdMatrix sqrt_spd(const SpdMatrix& a) {
    auto es = detail::spd_eigen(a, "sqrt_spd");
    const Eigen::VectorXd r = es.eigenvalues().array().sqrt();
    return SpdMatrix(es.eigenvectors() * r.asDiagonal() * es.eigenvectors().transpose());
}

/// Symmetric inverse square root: returns S with S S = A^-1.
inline SpdMatrix inv_sqrt_spd(const SpdMatrix& a) {
    auto es = detail::spd_eigen(a, "inv_sqrt_spd");
    const Eigen::VectorXd r = es.eigenvalues().array().rsqrt();
    return SpdMatrix(es.eigenvectors() * r.asDiagonal() * es.eigenvectors().transpose());
}

/// P^-1/2 B P^-1/2 given the already-formed inverse square root of the weight.
inline SpdMatrix congruence(const SpdMatrix& p_inv_sqrt, const SpdMatrix& b) {
    if (p_inv_sqrt.dim() != b.dim())
        throw DimensionMismatch("congruence: dims " + std::to_string(p_inv_sqrt.dim()) +
                                " vs " + std::to_string(b.dim()));
    // SpdMatrix construction re-symmetrizes, killing roundoff asymmetry.
    return SpdMatrix(p_inv_sqrt.mat() * b.mat() * p_inv_sqrt.mat());
}

inline Eigen::MatrixXd inverse_spd(const SpdMatrix& a) {
    const SpdFactorization f = factorize(a);
    const int n = a.dim();
    Eigen::MatrixXd inv(n, n);
    for (int j = 0; j < n; ++j)
        inv.col(j) = solve_spd(f, Eigen::VectorXd::Unit(n, j));
    return 0.5 * (inv + inv.transpose());
}

}  // namespace scbfgs
