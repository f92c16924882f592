#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "scbfgs/errors.hpp"
#include "scbfgs/matrix.hpp"
#include "scbfgs/objective.hpp"
#include "scbfgs/rng.hpp"
#include "scbfgs/wolfe.hpp"

namespace scbfgs {

enum class UpdateMode { direct_B, inverse_H, both };

/// Initial Hessian approximation policy.
struct B0Policy {
    enum class Kind { identity, scaled_identity, heuristic, explicit_matrix };
    Kind kind = Kind::identity;
    double scale = 1.0;          // scaled_identity
    std::uint64_t seed = 0;      // heuristic
    std::optional<SpdMatrix> matrix;

    static B0Policy identity() { return {}; }
    static B0Policy scaled(double a) {
        B0Policy p;
        p.kind = Kind::scaled_identity;
        p.scale = a;
        return p;
    }
    static B0Policy heuristic(std::uint64_t seed) {
        B0Policy p;
        p.kind = Kind::heuristic;
        p.seed = seed;
        return p;
    }
    static B0Policy explicit_matrix(SpdMatrix m) {
        B0Policy p;
        p.kind = Kind::explicit_matrix;
        p.matrix = std::move(m);
        return p;
    }
};

struct SolverConfig {
    double grad_tol = 1e-10;
    int max_iter = 1000;
    UpdateMode mode = UpdateMode::inverse_H;
    LineSearchParams ls;
    B0Policy b0;
    int ls_max_loops = 60;
    bool record_matrices = false;       // keep B_t (and H_t) per iteration; small dims only
    std::vector<double> eta_schedule;   // when non-empty, replay these step sizes
};

/// One accepted step. Keeps the incoming iterate and gradient so certificates
/// can be re-verified from the trace alone.
struct StepRecord {
    int t = 0;
    double eta = 0.0;
    Eigen::VectorXd x;   // x_t
    Eigen::VectorXd g;   // grad f(x_t)
    Eigen::VectorXd s;   // x_{t+1} - x_t
    Eigen::VectorXd y;   // grad f(x_{t+1}) - grad f(x_t)
    double f0 = 0.0;     // f(x_t)
    double f1 = 0.0;     // f(x_{t+1})
    int evals = 0;       // lambda_t, line-search loop count
    double sy = 0.0;     // s'y
    double gs = 0.0;     // g's
};

struct BfgsState {
    Eigen::VectorXd x;
    Eigen::VectorXd g;
    std::optional<SpdMatrix> B;
    std::optional<SpdMatrix> H;
    int t = 0;
};

struct BfgsResult {
    BfgsState state;
    std::vector<StepRecord> steps;
    SpdMatrix B0 = SpdMatrix(Eigen::MatrixXd::Identity(1, 1));
    std::vector<Eigen::MatrixXd> B_history;   // filled when record_matrices is set
    std::vector<Eigen::MatrixXd> H_history;
};

namespace detail {

inline void require_curvature(const Eigen::VectorXd& s, const Eigen::VectorXd& y) {
    const double sy = s.dot(y);
    if (!(sy > 1e-14 * s.norm() * y.norm()))
        throw CurvatureViolation("s'y = " + std::to_string(sy) + " below curvature threshold");
}

}  // namespace detail

/// Rank-two direct update B - (Bs s'B)/(s'Bs) + (y y')/(s'y). Satisfies the
/// secant condition B' s = y up to roundoff.
inline SpdMatrix bfgs_update_B(const SpdMatrix& b, const Eigen::VectorXd& s,
                               const Eigen::VectorXd& y) {
    detail::require_curvature(s, y);
    const Eigen::VectorXd bs = b.mat() * s;
    const double sbs = s.dot(bs);
    if (!(sbs > 0.0)) throw NotPositiveDefinite("bfgs_update_B: s'Bs = " + std::to_string(sbs));
    return SpdMatrix(b.mat() - (bs * bs.transpose()) / sbs + (y * y.transpose()) / s.dot(y));
}

/// Rank-two inverse update (I - sy'/y's) H (I - ys'/s'y) + ss'/y's.
inline SpdMatrix bfgs_update_H(const SpdMatrix& h, const Eigen::VectorXd& s,
                               const Eigen::VectorXd& y) {
    detail::require_curvature(s, y);
    const double sy = s.dot(y);
    const int d = static_cast<int>(s.size());
    const Eigen::MatrixXd v = Eigen::MatrixXd::Identity(d, d) - (s * y.transpose()) / sy;
    return SpdMatrix(v * h.mat() * v.transpose() + (s * s.transpose()) / sy);
}

/// d = -B^-1 g (direct form) or d = -H g (inverse form). Returns zero when the
/// gradient is zero; the caller should have stopped already.
inline Eigen::VectorXd bfgs_direction(const BfgsState& state) {
    if (state.g.isZero(0.0)) return Eigen::VectorXd::Zero(state.g.size());
    if (state.B) return -solve_spd(factorize(*state.B), state.g);
    if (state.H) return -(state.H->mat() * state.g);
    throw Error("bfgs_direction: state holds neither B nor H");
}

/// B0 = cI with c = s'y/|s|^2 from two seeded standard-normal draws. Retries
/// with fresh draws (at most 10) when s'y <= 0 or a draw lands outside the
/// domain; both are impossible for convex objectives on R^d.
inline SpdMatrix b0_heuristic(const Objective& obj, std::uint64_t seed) {
    SplitMix64 rng(seed);
    for (int attempt = 0; attempt < 10; ++attempt) {
        const Eigen::VectorXd x1 = rng.normal_vector(obj.dim());
        const Eigen::VectorXd x2 = rng.normal_vector(obj.dim());
        try {
            const Eigen::VectorXd s = x2 - x1;
            const Eigen::VectorXd y = obj.gradient(x2) - obj.gradient(x1);
            const double c = s.dot(y) / s.squaredNorm();
            if (c > 0.0) return SpdMatrix::scaled_identity(obj.dim(), c);
        } catch (const DomainViolation&) {
        }
    }
    throw HeuristicFailed("b0_heuristic: no positive curvature pair in 10 draws");
}

namespace detail {

inline SpdMatrix resolve_b0(const B0Policy& policy, const Objective& obj) {
    switch (policy.kind) {
        case B0Policy::Kind::identity:
            return SpdMatrix::identity(obj.dim());
        case B0Policy::Kind::scaled_identity:
            if (!(policy.scale > 0.0)) throw Error("B0 scale must be positive");
            return SpdMatrix::scaled_identity(obj.dim(), policy.scale);
        case B0Policy::Kind::heuristic:
            return b0_heuristic(obj, policy.seed);
        case B0Policy::Kind::explicit_matrix:
            if (!policy.matrix) throw Error("explicit B0 policy without matrix");
            return *policy.matrix;
    }
    throw Error("unreachable B0 policy");
}

inline void require_finite(double f, const Eigen::VectorXd& g, const char* where) {
    if (!std::isfinite(f) || !g.allFinite())
        throw NonFiniteValue(std::string(where) + ": f or grad is not finite");
}

}  // namespace detail

/// BFGS with the log-bisection weak-Wolfe line search. Stops at
/// |g_t| <= grad_tol or max_iter; f decreases strictly at every accepted step.
inline BfgsResult bfgs_minimize(const Objective& obj, const Eigen::VectorXd& x0,
                                const SolverConfig& cfg) {
    cfg.ls.validate();
    if (!(cfg.grad_tol > 0.0)) throw Error("grad_tol must be positive");

    BfgsResult res;
    res.B0 = detail::resolve_b0(cfg.b0, obj);

    Eigen::VectorXd x = x0;
    double f = obj.value(x);
    Eigen::VectorXd g = obj.gradient(x);
    detail::require_finite(f, g, "bfgs_minimize at x0");

    const bool want_B = cfg.mode != UpdateMode::inverse_H;
    const bool want_H = cfg.mode != UpdateMode::direct_B;
    std::optional<SpdMatrix> B, H;
    if (want_B) B = res.B0;
    if (want_H) H = SpdMatrix(inverse_spd(res.B0));
    auto record_mats = [&] {
        if (!cfg.record_matrices) return;
        if (B) res.B_history.push_back(B->mat());
        if (H) res.H_history.push_back(H->mat());
    };
    record_mats();

    for (int t = 0; t < cfg.max_iter; ++t) {
        if (g.norm() <= cfg.grad_tol) break;

        Eigen::VectorXd d;
        if (B)
            d = -solve_spd(factorize(*B), g);
        else
            d = -(H->mat() * g);
        const double gd = g.dot(d);

        double eta;
        int evals = 0;
        if (t < static_cast<int>(cfg.eta_schedule.size())) {
            eta = cfg.eta_schedule[t];
        } else {
            const LineSearchOutcome ls = log_bisection(obj, x, d, cfg.ls, cfg.ls_max_loops, f, gd);
            eta = ls.eta;
            evals = ls.evals;
        }

        const Eigen::VectorXd x_new = x + eta * d;
        const double f_new = obj.value(x_new);
        const Eigen::VectorXd g_new = obj.gradient(x_new);
        detail::require_finite(f_new, g_new, "bfgs_minimize");
        // accepted steps decrease f strictly; a tie means the remaining
        // decrease is below float resolution, so stop here
        if (!(f_new < f)) break;

        StepRecord rec;
        rec.t = t;
        rec.eta = eta;
        rec.x = x;
        rec.g = g;
        rec.s = x_new - x;
        rec.y = g_new - g;
        rec.f0 = f;
        rec.f1 = f_new;
        rec.evals = evals;
        rec.sy = rec.s.dot(rec.y);
        rec.gs = g.dot(rec.s);
        res.steps.push_back(rec);

        if (B) B = bfgs_update_B(*B, rec.s, rec.y);
        if (H) H = bfgs_update_H(*H, rec.s, rec.y);
        record_mats();

        x = x_new;
        f = f_new;
        g = g_new;
    }

    res.state = BfgsState{x, g, B, H, static_cast<int>(res.steps.size())};
    return res;
}

// ---------------------------------------------------------------------------
// First-order baselines
// ---------------------------------------------------------------------------

struct FirstOrderConfig {
    double grad_tol = 1e-10;
    int max_iter = 10000;
    double armijo_alpha = 0.1;
    double shrink = 0.5;
    int ls_max_loops = 200;
    // Optional warm start: begin each search at twice the last accepted step
    // instead of 1. Off by default: on minimizer-free instances (separable
    // logistic) the doubling cascade makes the baselines super-exponential,
    // which no published first-order trace shows.
    bool warm_start = false;
    double eta_cap = 1e6;
};

struct FirstOrderResult {
    Eigen::VectorXd x;
    double f = 0.0;
    Eigen::VectorXd g;
    std::vector<StepRecord> steps;
};

/// Gradient descent with Armijo backtracking.
inline FirstOrderResult gd_minimize(const Objective& obj, const Eigen::VectorXd& x0,
                                    const FirstOrderConfig& cfg = {}) {
    Eigen::VectorXd x = x0;
    double f = obj.value(x);
    Eigen::VectorXd g = obj.gradient(x);
    detail::require_finite(f, g, "gd_minimize at x0");

    FirstOrderResult res;
    double eta_warm = 1.0;
    for (int t = 0; t < cfg.max_iter; ++t) {
        if (g.norm() <= cfg.grad_tol) break;
        const Eigen::VectorXd d = -g;
        const LineSearchOutcome ls = backtracking(obj, x, d, cfg.armijo_alpha, cfg.shrink,
                                                  cfg.ls_max_loops, eta_warm, f, g.dot(d));
        eta_warm = cfg.warm_start ? std::min(2.0 * ls.eta, cfg.eta_cap) : 1.0;

        const Eigen::VectorXd x_new = x + ls.eta * d;
        const double f_new = obj.value(x_new);
        const Eigen::VectorXd g_new = obj.gradient(x_new);
        detail::require_finite(f_new, g_new, "gd_minimize");
        if (!(f_new < f)) break;

        StepRecord rec;
        rec.t = t;
        rec.eta = ls.eta;
        rec.x = x;
        rec.g = g;
        rec.s = x_new - x;
        rec.y = g_new - g;
        rec.f0 = f;
        rec.f1 = f_new;
        rec.evals = ls.evals;
        rec.sy = rec.s.dot(rec.y);
        rec.gs = g.dot(rec.s);
        res.steps.push_back(rec);

        x = x_new;
        f = f_new;
        g = g_new;
    }
    res.x = x;
    res.f = f;
    res.g = g;
    return res;
}

/// Nesterov accelerated gradient with the same backtracking on the gradient
/// step and a function-value restart: whenever the momentum step would
/// increase f, momentum resets and a plain descent step is taken instead, so
/// the recorded trace is monotone.
inline FirstOrderResult agd_minimize(const Objective& obj, const Eigen::VectorXd& x0,
                                     const FirstOrderConfig& cfg = {}) {
    Eigen::VectorXd x = x0;
    Eigen::VectorXd x_prev = x0;
    double f = obj.value(x);
    Eigen::VectorXd g = obj.gradient(x);
    detail::require_finite(f, g, "agd_minimize at x0");

    FirstOrderResult res;
    double eta_warm = 1.0;
    int k = 0;
    for (int t = 0; t < cfg.max_iter; ++t) {
        if (g.norm() <= cfg.grad_tol) break;

        Eigen::VectorXd yv = x + (static_cast<double>(k) / (k + 3)) * (x - x_prev);
        double fy;
        Eigen::VectorXd gy;
        try {
            fy = obj.value(yv);
            gy = obj.gradient(yv);
        } catch (const DomainViolation&) {
            k = 0;
            yv = x;
            fy = f;
            gy = g;
        }

        auto take_step = [&](const Eigen::VectorXd& base, double fb, const Eigen::VectorXd& gb) {
            const Eigen::VectorXd dir = -gb;
            const LineSearchOutcome ls = backtracking(obj, base, dir, cfg.armijo_alpha,
                                                      cfg.shrink, cfg.ls_max_loops, eta_warm, fb,
                                                      gb.dot(dir));
            eta_warm = cfg.warm_start ? std::min(2.0 * ls.eta, cfg.eta_cap) : 1.0;
            return std::make_pair(Eigen::VectorXd(base + ls.eta * dir), ls);
        };

        auto [x_new, ls] = take_step(yv, fy, gy);
        double f_new = obj.value(x_new);
        if (f_new > f) {
            // momentum overshoot: restart and step from x instead
            k = 0;
            std::tie(x_new, ls) = take_step(x, f, g);
            f_new = obj.value(x_new);
        } else {
            ++k;
        }
        const Eigen::VectorXd g_new = obj.gradient(x_new);
        detail::require_finite(f_new, g_new, "agd_minimize");
        if (!(f_new < f)) break;

        StepRecord rec;
        rec.t = t;
        rec.eta = ls.eta;
        rec.x = x;
        rec.g = g;
        rec.s = x_new - x;
        rec.y = g_new - g;
        rec.f0 = f;
        rec.f1 = f_new;
        rec.evals = ls.evals;
        rec.sy = rec.s.dot(rec.y);
        rec.gs = g.dot(rec.s);
        res.steps.push_back(rec);

        x_prev = x;
        x = x_new;
        f = f_new;
        g = g_new;
    }
    res.x = x;
    res.f = f;
    res.g = g;
    return res;
}

/// phi(x) = f(Ax) with chain-rule gradient and Hessian. Rejects transforms
/// whose condition estimate exceeds 1e8.
inline Objective affine_transform_problem(const Objective& obj, const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols() || a.rows() != obj.dim())
        throw DimensionMismatch("affine_transform_problem: bad transform shape");
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    if (!(smin > 0.0) || smax / smin > 1e8)
        throw SingularTransform("affine_transform_problem: condition estimate " +
                                std::to_string(smax / smin));

    const Eigen::MatrixXd A = a;
    const Objective base = obj;
    auto f = [=](const Eigen::VectorXd& x) { return base.value(A * x); };
    auto g = [=](const Eigen::VectorXd& x) {
        return (A.transpose() * base.gradient(A * x)).eval();
    };
    Objective::HessFn h;
    if (base.has_hessian())
        h = [=](const Eigen::VectorXd& x) {
            return (A.transpose() * base.hessian(A * x).mat() * A).eval();
        };

    nlohmann::json desc = {{"kind", "affine_transform"}, {"base", base.descriptor()}};
    return Objective(obj.dim(), f, g, h, base.info(), desc);
}

}  // namespace scbfgs
