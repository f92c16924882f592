#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "scbfgs/errors.hpp"
#include "scbfgs/objective.hpp"

namespace scbfgs {

/// Weak Wolfe parameters, 0 < alpha < beta < 1 and alpha < 1/2.
struct LineSearchParams {
    double alpha = 0.1;
    double beta = 0.9;

    void validate() const {
        if (!(0.0 < alpha && alpha < beta && beta < 1.0 && alpha < 0.5))
            throw Error("line search params need 0 < alpha < beta < 1 and alpha < 1/2");
    }
};

/// Bracket maintained by the log-bisection search; eta_max = +inf until the
/// first sufficient-decrease failure.
struct BracketState {
    double eta = 1.0;
    double eta_min = 0.0;
    double eta_max = std::numeric_limits<double>::infinity();
    int loop_index = 0;
};

struct LineSearchOutcome {
    double eta = 0.0;
    int evals = 0;                    // loop count; one (f, grad) pair per loop
    std::vector<double> trajectory;   // every eta tried, accepted one last
};

/// Sufficient decrease: f_trial <= f_t + alpha * eta * g'd (non-strict).
inline bool sufficient_decrease(double f_t, double f_trial, double g_dot_d, double eta,
                                const LineSearchParams& p) {
    if (!(g_dot_d < 0.0))
        throw NotDescentDirection("sufficient_decrease: g'd = " + std::to_string(g_dot_d));
    return f_trial <= f_t + p.alpha * eta * g_dot_d;
}

/// Curvature: g_trial'd >= beta * g'd (non-strict).
inline bool curvature(double g_trial_dot_d, double g_dot_d, const LineSearchParams& p) {
    if (!(g_dot_d < 0.0))
        throw NotDescentDirection("curvature: g'd = " + std::to_string(g_dot_d));
    return g_trial_dot_d >= p.beta * g_dot_d;
}

namespace detail {

/// Trial value with the barrier policy: a point outside the domain counts as
/// f = +inf, which reads as a sufficient-decrease failure and shrinks the
/// bracket.
inline double trial_value(const Objective& obj, const Eigen::VectorXd& x) {
    try {
        return obj.value(x);
    } catch (const DomainViolation&) {
        return std::numeric_limits<double>::infinity();
    }
}

}  // namespace detail

/// Step-size search for the weak Wolfe conditions: probe eta = 1, then shrink
/// with the doubly-exponential schedule (1/2)^(2^(i+1)-1) while no lower
/// bracket edge exists (grow with 2^(2^(i+1)-1) while no upper edge exists),
/// and geometric-mean bisection once both edges are known. Sufficient decrease
/// is tested before curvature at every trial.
inline LineSearchOutcome log_bisection(const Objective& obj, const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& d, const LineSearchParams& p,
                                       int max_loops = 60,
                                       std::optional<double> f0 = std::nullopt,
                                       std::optional<double> g0_dot_d = std::nullopt) {
    p.validate();
    if (max_loops < 1) throw Error("log_bisection: max_loops must be >= 1");
    const double f_x = f0 ? *f0 : obj.value(x);
    const double gd = g0_dot_d ? *g0_dot_d : obj.gradient(x).dot(d);
    if (!(gd < 0.0))
        throw NotDescentDirection("log_bisection: g'd = " + std::to_string(gd));

    BracketState br;
    LineSearchOutcome out;
    for (br.loop_index = 0; br.loop_index < max_loops; ++br.loop_index) {
        const int i = br.loop_index;
        out.trajectory.push_back(br.eta);
        ++out.evals;

        const double f_trial = detail::trial_value(obj, x + br.eta * d);
        if (!(f_trial <= f_x + p.alpha * br.eta * gd)) {
            br.eta_max = br.eta;
            br.eta = (br.eta_min == 0.0) ? std::exp2(-(std::exp2(i + 1) - 1.0))
                                         : std::sqrt(br.eta_max * br.eta_min);
        } else {
            const double g_trial_dot_d = obj.gradient(x + br.eta * d).dot(d);
            if (g_trial_dot_d < p.beta * gd) {
                br.eta_min = br.eta;
                br.eta = std::isinf(br.eta_max) ? std::exp2(std::exp2(i + 1) - 1.0)
                                                : std::sqrt(br.eta_max * br.eta_min);
            } else {
                out.eta = out.trajectory.back();
                return out;
            }
        }
        // bracket invariant eta_min < eta <= eta_max; a collapsed bracket
        // means the requested decrease sits below float resolution of f, so
        // give up rather than spin to the loop cap
        if (!(br.eta_min < br.eta && br.eta <= br.eta_max))
            throw MaxLoopsExceeded("log_bisection: bracket collapsed after " +
                                       std::to_string(i + 1) + " loops",
                                   br.eta_min, br.eta_max, i + 1);
    }
    throw MaxLoopsExceeded("log_bisection: no Wolfe step within " +
                               std::to_string(max_loops) + " loops",
                           br.eta_min, br.eta_max, max_loops);
}

/// Armijo-only backtracking: largest eta in {eta_init * shrink^k} satisfying
/// sufficient decrease. Used by the first-order baselines.
inline LineSearchOutcome backtracking(const Objective& obj, const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& d, double alpha, double shrink,
                                      int max_loops, double eta_init = 1.0,
                                      std::optional<double> f0 = std::nullopt,
                                      std::optional<double> g0_dot_d = std::nullopt) {
    if (!(0.0 < shrink && shrink < 1.0)) throw Error("backtracking: need 0 < shrink < 1");
    const double f_x = f0 ? *f0 : obj.value(x);
    const double gd = g0_dot_d ? *g0_dot_d : obj.gradient(x).dot(d);
    if (!(gd < 0.0))
        throw NotDescentDirection("backtracking: g'd = " + std::to_string(gd));

    LineSearchOutcome out;
    double eta = eta_init;
    for (int i = 0; i < max_loops; ++i) {
        out.trajectory.push_back(eta);
        ++out.evals;
        const double f_trial = detail::trial_value(obj, x + eta * d);
        if (f_trial <= f_x + alpha * eta * gd) {
            out.eta = eta;
            return out;
        }
        eta *= shrink;
    }
    throw MaxLoopsExceeded("backtracking: no Armijo step within " +
                               std::to_string(max_loops) + " loops",
                           0.0, eta / shrink, max_loops);
}

}  // namespace scbfgs
