#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>

#include <Eigen/Dense>
#include <json.hpp>

#include "scbfgs/errors.hpp"
#include "scbfgs/matrix.hpp"
#include "scbfgs/rng.hpp"

namespace scbfgs {

/// Strong self-concordance metadata. M is optional: the test problems from
/// the benchmark suite come without a numeric constant, and anything that
/// needs one refuses to guess (see theory module).
struct SelfConcordanceInfo {
    std::optional<double> M;
    std::string domain_note;
    bool constant_hessian = false;
};

/// Evaluation contract: f, grad, optional hess, plus metadata. Instances are
/// immutable after construction and evaluations are pure, so objectives can be
/// shared freely across threads.
class Objective {
public:
    using ValueFn = std::function<double(const Eigen::VectorXd&)>;
    using GradFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
    using HessFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

    Objective(int dim, ValueFn f, GradFn g, HessFn h, SelfConcordanceInfo info,
              nlohmann::json descriptor)
        : dim_(dim),
          f_(std::move(f)),
          g_(std::move(g)),
          h_(std::move(h)),
          info_(std::move(info)),
          descriptor_(std::move(descriptor)) {}

    int dim() const { return dim_; }

    double value(const Eigen::VectorXd& x) const {
        check_dim(x);
        return f_(x);
    }

    Eigen::VectorXd gradient(const Eigen::VectorXd& x) const {
        check_dim(x);
        return g_(x);
    }

    bool has_hessian() const { return static_cast<bool>(h_); }

    SpdMatrix hessian(const Eigen::VectorXd& x) const {
        check_dim(x);
        if (!h_) throw Error("objective provides no Hessian");
        return SpdMatrix(h_(x));
    }

    const SelfConcordanceInfo& info() const { return info_; }

    /// Problem kind, parameters and seed; enough to rebuild the instance.
    const nlohmann::json& descriptor() const { return descriptor_; }

private:
    void check_dim(const Eigen::VectorXd& x) const {
        if (x.size() != dim_)
            throw DimensionMismatch("objective dim " + std::to_string(dim_) +
                                    ", point dim " + std::to_string(x.size()));
    }

    int dim_;
    ValueFn f_;
    GradFn g_;
    HessFn h_;
    SelfConcordanceInfo info_;
    nlohmann::json descriptor_;
};

// ---------------------------------------------------------------------------
// Problem data
// ---------------------------------------------------------------------------

struct HardCubicParams {
    double omega1 = 4.0;
    double omega2 = 3.0;
    double delta = 1.0;
    int dim = 2;
};

struct LogisticData {
    Eigen::MatrixXd z;   // N x d features
    Eigen::VectorXd y;   // labels in {-1, +1}
    std::uint64_t seed = 0;

    /// N x d standard-normal features, uniform +-1 labels; N defaults to d.
    static LogisticData generate(int dim, std::uint64_t seed, int n = -1) {
        if (n < 0) n = dim;
        SplitMix64 rng(seed);
        LogisticData d;
        d.z = rng.normal_matrix(n, dim);
        d.y.resize(n);
        for (int i = 0; i < n; ++i) d.y[i] = rng.next_sign();
        d.seed = seed;
        return d;
    }
};

struct LogSumExpData {
    Eigen::MatrixXd c;   // n x d directions
    Eigen::VectorXd b;   // n offsets
    std::uint64_t seed = 0;

    static LogSumExpData generate(int dim, int n, std::uint64_t seed) {
        SplitMix64 rng(seed);
        LogSumExpData d;
        d.c = rng.normal_matrix(n, dim);
        d.b = rng.normal_vector(n);
        d.seed = seed;
        return d;
    }
};

namespace detail {

/// log(1 + e^u) without overflow.
inline double softplus(double u) {
    return std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u)));
}

/// 1 / (1 + e^-u) evaluated from the safe side.
inline double sigmoid(double u) {
    if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
    const double e = std::exp(u);
    return e / (1.0 + e);
}

// Piecewise cubic g and derivatives for the hard chain problem.
inline double hard_g(double u, double delta) {
    const double a = std::abs(u);
    if (a <= delta) return a * a * a / 3.0;
    return delta * u * u - delta * delta * a + delta * delta * delta / 3.0;
}

inline double hard_g1(double u, double delta) {
    if (std::abs(u) <= delta) return u * std::abs(u);
    const double sign = u > 0 ? 1.0 : -1.0;
    return 2.0 * delta * u - delta * delta * sign;
}

inline double hard_g2(double u, double delta) {
    const double a = std::abs(u);
    return a <= delta ? 2.0 * a : 2.0 * delta;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Problem factories
// ---------------------------------------------------------------------------

/// Chained piecewise-cubic benchmark: a 1-D convex kernel g applied to
/// consecutive coordinate differences plus a linear tilt on the first
/// coordinate. The published formula omits an anchor on the last coordinate,
/// which leaves grad f . 1 = -omega1*omega2/12 at every point, so the function
/// has no minimizer; the g(x_d) chain terminator used here restores the unique
/// minimizer x*_i = (d - i + 1) u* with g'(u*) = omega2 that the convergence
/// experiments require.
inline Objective make_hard_cubic(const HardCubicParams& p) {
    if (p.dim < 2) throw Error("hard_cubic: dim must be >= 2");
    const double s = p.omega1 / 12.0;
    const double w2 = p.omega2;
    const double delta = p.delta;
    const int d = p.dim;

    auto f = [=](const Eigen::VectorXd& x) {
        double acc = 0.0;
        for (int i = 0; i + 1 < d; ++i) acc += detail::hard_g(x[i] - x[i + 1], delta);
        acc += detail::hard_g(x[d - 1], delta);
        return s * (acc - w2 * x[0]);
    };
    auto g = [=](const Eigen::VectorXd& x) {
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(d);
        for (int i = 0; i + 1 < d; ++i) {
            const double gp = detail::hard_g1(x[i] - x[i + 1], delta);
            grad[i] += gp;
            grad[i + 1] -= gp;
        }
        grad[d - 1] += detail::hard_g1(x[d - 1], delta);
        grad[0] -= w2;
        return (s * grad).eval();
    };
    auto h = [=](const Eigen::VectorXd& x) {
        Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(d, d);
        for (int i = 0; i + 1 < d; ++i) {
            const double gpp = detail::hard_g2(x[i] - x[i + 1], delta);
            hess(i, i) += gpp;
            hess(i + 1, i + 1) += gpp;
            hess(i, i + 1) -= gpp;
            hess(i + 1, i) -= gpp;
        }
        hess(d - 1, d - 1) += detail::hard_g2(x[d - 1], delta);
        return (s * hess).eval();
    };

    nlohmann::json desc = {{"kind", "hard_cubic"}, {"dim", d},      {"omega1", p.omega1},
                           {"omega2", p.omega2},   {"delta", delta}};
    return Objective(d, f, g, h, SelfConcordanceInfo{}, desc);
}

/// Mean logistic loss over the stored dataset; analytic gradient and Hessian.
inline Objective make_logistic(const LogisticData& data) {
    const Eigen::MatrixXd z = data.z;
    const Eigen::VectorXd y = data.y;
    const int n = static_cast<int>(z.rows());
    const int d = static_cast<int>(z.cols());
    if (y.size() != n) throw DimensionMismatch("logistic: labels/features mismatch");

    auto f = [=](const Eigen::VectorXd& x) {
        const Eigen::VectorXd m = y.cwiseProduct(z * x);
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += detail::softplus(-m[i]);
        return acc / n;
    };
    auto g = [=](const Eigen::VectorXd& x) {
        const Eigen::VectorXd m = y.cwiseProduct(z * x);
        Eigen::VectorXd w(n);
        for (int i = 0; i < n; ++i) w[i] = -y[i] * detail::sigmoid(-m[i]) / n;
        return (z.transpose() * w).eval();
    };
    auto h = [=](const Eigen::VectorXd& x) {
        const Eigen::VectorXd m = y.cwiseProduct(z * x);
        Eigen::VectorXd w(n);
        for (int i = 0; i < n; ++i) {
            const double s = detail::sigmoid(-m[i]);
            w[i] = s * (1.0 - s) / n;
        }
        return (z.transpose() * w.asDiagonal() * z).eval();
    };

    nlohmann::json desc = {{"kind", "logistic"}, {"dim", d}, {"n", n}, {"seed", data.seed}};
    return Objective(d, f, g, h, SelfConcordanceInfo{}, desc);
}

/// log-sum-exp with a quadratic term: f(x) = log sum_i exp(c_i'x - b_i)
/// + 1/2 sum_i (c_i'x)^2. The 1/2 coefficient matches the stated gradient
/// sum_i pi_i c_i + sum_i (c_i'x) c_i; the softmax is evaluated with the
/// max-subtraction trick.
inline Objective make_log_sum_exp(const LogSumExpData& data) {
    const Eigen::MatrixXd c = data.c;
    const Eigen::VectorXd b = data.b;
    const int n = static_cast<int>(c.rows());
    const int d = static_cast<int>(c.cols());
    if (n < 1) throw Error("log_sum_exp: need n >= 1");
    if (b.size() != n) throw DimensionMismatch("log_sum_exp: offsets/directions mismatch");

    auto softmax = [=](const Eigen::VectorXd& u) {
        const double umax = u.maxCoeff();
        Eigen::VectorXd p = (u.array() - umax).exp();
        p /= p.sum();
        return p;
    };
    auto f = [=](const Eigen::VectorXd& x) {
        const Eigen::VectorXd u = c * x - b;
        const double umax = u.maxCoeff();
        const double lse = umax + std::log((u.array() - umax).exp().sum());
        return lse + 0.5 * (c * x).squaredNorm();
    };
    auto g = [=](const Eigen::VectorXd& x) {
        const Eigen::VectorXd pi = softmax(c * x - b);
        return (c.transpose() * pi + c.transpose() * (c * x)).eval();
    };
    auto h = [=](const Eigen::VectorXd& x) {
        const Eigen::VectorXd pi = softmax(c * x - b);
        const Eigen::VectorXd mu = c.transpose() * pi;
        Eigen::MatrixXd hess = c.transpose() * (pi.array() + 1.0).matrix().asDiagonal() * c;
        hess -= mu * mu.transpose();
        return hess;
    };

    nlohmann::json desc = {{"kind", "log_sum_exp"}, {"dim", d}, {"n", n}, {"seed", data.seed}};
    return Objective(d, f, g, h, SelfConcordanceInfo{}, desc);
}

/// 1-D log barrier f(x) = -log(1 - x^2) on |x| < 1. Strongly self-concordant
/// with M = 4 for |x - y| <= 1/2; the only stock problem with a numeric M, so
/// it anchors the end-to-end theory-bound checks.
inline Objective make_log_barrier_1d() {
    auto check = [](const Eigen::VectorXd& x) {
        if (std::abs(x[0]) >= 1.0)
            throw DomainViolation("log_barrier: |x| >= 1 (x = " + std::to_string(x[0]) + ")");
    };
    auto f = [=](const Eigen::VectorXd& x) {
        check(x);
        return -std::log1p(-x[0] * x[0]);
    };
    auto g = [=](const Eigen::VectorXd& x) {
        check(x);
        Eigen::VectorXd grad(1);
        grad[0] = 2.0 * x[0] / (1.0 - x[0] * x[0]);
        return grad;
    };
    auto h = [=](const Eigen::VectorXd& x) {
        check(x);
        const double den = 1.0 - x[0] * x[0];
        Eigen::MatrixXd hess(1, 1);
        hess(0, 0) = (2.0 + 2.0 * x[0] * x[0]) / (den * den);
        return hess;
    };

    SelfConcordanceInfo info;
    info.M = 4.0;
    info.domain_note = "domain |x| < 1; M = 4 valid for |x - y| <= 1/2";
    nlohmann::json desc = {{"kind", "log_barrier"}, {"dim", 1}};
    return Objective(1, f, g, h, info, desc);
}

/// f(x) = 1/2 x'Qx. Constant Hessian, so strongly self-concordant for every
/// M > 0; metadata leaves M absent and sets constant_hessian instead.
inline Objective make_quadratic(const SpdMatrix& q) {
    const Eigen::MatrixXd Q = q.mat();
    const int d = q.dim();

    auto f = [=](const Eigen::VectorXd& x) { return 0.5 * x.dot(Q * x); };
    auto g = [=](const Eigen::VectorXd& x) { return (Q * x).eval(); };
    auto h = [=](const Eigen::VectorXd&) { return Q; };

    SelfConcordanceInfo info;
    info.constant_hessian = true;
    nlohmann::json entries = nlohmann::json::array();
    for (int i = 0; i < d; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < d; ++j) row.push_back(Q(i, j));
        entries.push_back(row);
    }
    nlohmann::json desc = {{"kind", "quadratic"}, {"dim", d}, {"q", entries}};
    return Objective(d, f, g, h, info, desc);
}

/// Rebuild a problem instance from its descriptor.
inline Objective objective_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "hard_cubic") {
        HardCubicParams p;
        p.dim = j.at("dim").get<int>();
        p.omega1 = j.value("omega1", 4.0);
        p.omega2 = j.value("omega2", 3.0);
        p.delta = j.value("delta", 1.0);
        return make_hard_cubic(p);
    }
    if (kind == "logistic") {
        return make_logistic(LogisticData::generate(j.at("dim").get<int>(),
                                                    j.at("seed").get<std::uint64_t>(),
                                                    j.value("n", -1)));
    }
    if (kind == "log_sum_exp") {
        return make_log_sum_exp(LogSumExpData::generate(j.at("dim").get<int>(),
                                                        j.at("n").get<int>(),
                                                        j.at("seed").get<std::uint64_t>()));
    }
    if (kind == "log_barrier") return make_log_barrier_1d();
    if (kind == "quadratic") {
        const auto& rows = j.at("q");
        const int d = static_cast<int>(rows.size());
        Eigen::MatrixXd Q(d, d);
        for (int i = 0; i < d; ++i)
            for (int jj = 0; jj < d; ++jj) Q(i, jj) = rows[i][jj].get<double>();
        return make_quadratic(SpdMatrix(Q));
    }
    throw Error("objective_from_json: unknown kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Finite-difference verification
// ---------------------------------------------------------------------------

struct FdCheckResult {
    double grad_rel_err = 0.0;
    std::optional<double> hess_rel_err;
};

/// Central-difference check of the analytic gradient (and Hessian when
/// provided). Errors are max componentwise relative deviations with
/// denominator max(1, |analytic component|).
inline FdCheckResult fd_check(const Objective& obj, const Eigen::VectorXd& x, double h) {
    const int d = obj.dim();
    const Eigen::VectorXd g_an = obj.gradient(x);

    FdCheckResult out;
    for (int i = 0; i < d; ++i) {
        Eigen::VectorXd xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        const double g_fd = (obj.value(xp) - obj.value(xm)) / (2.0 * h);
        out.grad_rel_err = std::max(out.grad_rel_err,
                                    std::abs(g_fd - g_an[i]) / std::max(1.0, std::abs(g_an[i])));
    }

    if (obj.has_hessian()) {
        const Eigen::MatrixXd h_an = obj.hessian(x).mat();
        Eigen::MatrixXd h_fd(d, d);
        for (int j = 0; j < d; ++j) {
            Eigen::VectorXd xp = x, xm = x;
            xp[j] += h;
            xm[j] -= h;
            h_fd.col(j) = (obj.gradient(xp) - obj.gradient(xm)) / (2.0 * h);
        }
        h_fd = 0.5 * (h_fd + h_fd.transpose());
        double err = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                err = std::max(err, std::abs(h_fd(i, j) - h_an(i, j)) /
                                        std::max(1.0, std::abs(h_an(i, j))));
        out.hess_rel_err = err;
    }
    return out;
}

}  // namespace scbfgs
