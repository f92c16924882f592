#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>

#include <json.hpp>

#include "scbfgs/errors.hpp"
#include "scbfgs/matrix.hpp"
#include "scbfgs/wolfe.hpp"

namespace scbfgs {

/// omega(x) = x - log(1 + x) for x > -1. Nonnegative, zero only at x = 0.
inline double omega(double x) {
    if (!(x > -1.0)) throw DomainViolation("omega: x must exceed -1");
    return x - std::log1p(x);
}

/// omega*(x) = -x - log(1 - x) for x < 1.
inline double omega_star(double x) {
    if (!(x < 1.0)) throw DomainViolation("omega_star: x must be below 1");
    return -x - std::log1p(-x);
}

/// Inverse of omega on x >= 0: the unique x >= 0 with omega(x) = a. Bisection
/// seeded by the bracket sqrt(2a) + 2a/3 <= x <= sqrt(2a) + a, then Newton
/// polish; residual <= 1e-13 * max(1, a).
inline double omega_inv(double a) {
    if (a < 0.0) throw DomainViolation("omega_inv: argument must be >= 0");
    if (a == 0.0) return 0.0;

    double lo = std::sqrt(2.0 * a) + 2.0 * a / 3.0;
    double hi = std::sqrt(2.0 * a) + a;
    const double tol = 1e-13 * std::max(1.0, a);

    // widen defensively against roundoff at the bracket edges
    if (omega(lo) > a) lo = 0.0;
    if (omega(hi) < a) hi *= 2.0;

    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 80; ++it) {
        const double r = omega(x) - a;
        if (std::abs(r) <= tol) return x;
        (r > 0.0 ? hi : lo) = x;
        const double newton = x - r * (1.0 + x) / x;   // omega'(x) = x/(1+x)
        x = (newton > lo && newton < hi) ? newton : 0.5 * (lo + hi);
    }
    return x;
}

/// Function-value gap C and its self-concordant transform D = 2 w^-1(M^2 C/4).
struct SuboptimalityPoint {
    double C = 0.0;
    double D = 0.0;
    double M = 0.0;
};

inline SuboptimalityPoint suboptimality(double c, double m) {
    if (c < 0.0) throw DomainViolation("suboptimality: C must be >= 0");
    if (!(m > 0.0)) throw DomainViolation("suboptimality: M must be > 0");
    return {c, 2.0 * omega_inv(m * m * c / 4.0), m};
}

/// The eight line-search/self-concordance constants. Ordering
/// 0 < delta1 < delta2 < 1 < delta3 holds for every admissible (alpha, beta).
struct DeltaConstants {
    double delta1, delta2, delta3, delta4, delta5, delta6, delta7, delta8;
    double alpha, beta, M;
};

inline DeltaConstants delta_constants(const LineSearchParams& p, double m) {
    p.validate();
    if (!(m > 0.0)) throw DomainViolation("delta_constants: M must be > 0");
    const double a = p.alpha, b = p.beta;
    const double k = 4.0 / (m * m);

    DeltaConstants d{};
    d.alpha = a;
    d.beta = b;
    d.M = m;
    d.delta1 = std::min({1.0 / 16.0, k * omega(1.0 / 32.0),
                         k * omega((std::sqrt(2.0 * (1.0 - a)) - 1.0) / 2.0),
                         k * omega(0.5 * (1.0 / std::sqrt(1.0 - b) - 1.0))});
    d.delta2 = std::max(15.0 / 16.0, 1.0 / std::sqrt(2.0 * (1.0 - a)));
    d.delta3 = 1.0 / std::sqrt(1.0 - b);
    d.delta4 = 1.0 / std::min(omega(d.delta2 - 1.0), omega(d.delta3 - 1.0));
    const double den = 2.0 * d.delta2 - 17.0 / 16.0;
    d.delta5 = std::max((2.0 + 2.0 / d.delta2) / den, 4.0 * d.delta3 / den);
    d.delta6 = std::log(1.0 / (2.0 * a * (1.0 - b)));
    d.delta7 = 1.0 + d.delta4 * d.delta6 + d.delta5;
    d.delta8 = 2.0 + 2.0 * d.delta4 * d.delta6 + 2.0 * d.delta5 +
               (2.0 * d.delta2 - 1.0 / 16.0 - std::log(d.delta2)) / den;
    return d;
}

/// Potentials of the two weighted initializations: psi_tilde for
/// P = hess(x*), psi_bar for P = (1 + D0) hess(x*). For B0 = a I the
/// closed forms Delta1/Delta2 (trace and log-det of a hess(x*)^-1) coincide
/// with the congruence route and are filled in as well.
struct InitPotentials {
    double psi_bar = 0.0;
    double psi_tilde = 0.0;
    std::optional<double> delta1_cap;   // Delta_1, B0 = aI only
    std::optional<double> delta2_cap;   // Delta_2, B0 = aI only
};

inline InitPotentials init_potentials(const SpdMatrix& b0, const SpdMatrix& hess_star,
                                      double d0) {
    if (b0.dim() != hess_star.dim())
        throw DimensionMismatch("init_potentials: B0 and hess(x*) dims differ");
    if (d0 < 0.0) throw DomainViolation("init_potentials: D0 must be >= 0");

    const SpdMatrix w = inv_sqrt_spd(hess_star);
    const SpdMatrix b_tilde = congruence(w, b0);

    InitPotentials out;
    out.psi_tilde = potential_psi(b_tilde);
    out.psi_bar = potential_psi(SpdMatrix(b_tilde.mat() / (1.0 + d0)));

    // detect B0 = aI exactly
    const int d = b0.dim();
    const double a = b0(0, 0);
    bool scaled_identity = a > 0.0;
    for (int i = 0; i < d && scaled_identity; ++i)
        for (int j = 0; j < d && scaled_identity; ++j)
            scaled_identity = (b0(i, j) == (i == j ? a : 0.0));
    if (scaled_identity) {
        const SpdMatrix hinv(inverse_spd(hess_star));
        out.delta2_cap = potential_psi(SpdMatrix(a * hinv.mat()));
        out.delta1_cap = potential_psi(SpdMatrix(a / (1.0 + d0) * hinv.mat()));
    }
    return out;
}

/// Linear-rate bound (1 - alpha(1-beta) e^{-psi_bar/t} / (1+D0)^2)^t, with a
/// flag marking when the simplified e^{-psi_bar/t} >= 1/3 form applies.
struct Thm1Bound {
    double value = 1.0;
    bool simplified_applies = false;   // t >= psi_bar
};

inline Thm1Bound bound_thm1(int t, const InitPotentials& ip, double d0,
                            const LineSearchParams& p) {
    if (t < 1) throw DomainViolation("bound_thm1: t must be >= 1");
    const double rate = 1.0 - p.alpha * (1.0 - p.beta) * std::exp(-ip.psi_bar / t) /
                                  ((1.0 + d0) * (1.0 + d0));
    return {std::pow(rate, t), static_cast<double>(t) >= ip.psi_bar};
}

/// Simplified linear rate (1 - alpha(1-beta)/(3(1+D0)^2))^t, valid for
/// t >= psi_bar.
inline double bound_thm1_simplified(int t, double d0, const LineSearchParams& p) {
    if (t < 1) throw DomainViolation("bound_thm1_simplified: t must be >= 1");
    return std::pow(1.0 - p.alpha * (1.0 - p.beta) / (3.0 * (1.0 + d0) * (1.0 + d0)), t);
}

inline double thm2_threshold(const InitPotentials& ip, double d0, const LineSearchParams& p) {
    return ip.psi_tilde +
           3.0 * d0 * (ip.psi_bar + 3.0 * (1.0 + d0) * (1.0 + d0) / (p.alpha * (1.0 - p.beta)));
}

/// D0-free linear rate (1 - 2 alpha(1-beta)/3)^t; absent below its threshold.
inline std::optional<double> bound_thm2(int t, const InitPotentials& ip, double d0,
                                        const LineSearchParams& p) {
    if (t < 1) throw DomainViolation("bound_thm2: t must be >= 1");
    if (static_cast<double>(t) < thm2_threshold(ip, d0, p)) return std::nullopt;
    return std::pow(1.0 - 2.0 * p.alpha * (1.0 - p.beta) / 3.0, t);
}

/// t0 = max{psi_bar, 3(1+D0)^2/(alpha(1-beta)) log(C0/delta1)}: beyond it
/// C_t <= delta1 is guaranteed.
inline double compute_t0(const InitPotentials& ip, double d0, double c0,
                         const DeltaConstants& dc, const LineSearchParams& p) {
    if (!(c0 > 0.0)) return ip.psi_bar;
    return std::max(ip.psi_bar, 3.0 * (1.0 + d0) * (1.0 + d0) / (p.alpha * (1.0 - p.beta)) *
                                    std::log(c0 / dc.delta1));
}

/// Superlinear numerator delta6 t0 + delta7 psi_tilde
/// + delta8 D0 (psi_bar + 3(1+D0)^2/(alpha(1-beta))).
inline double thm3_numerator(double t0, const InitPotentials& ip, double d0,
                             const DeltaConstants& dc, const LineSearchParams& p) {
    return dc.delta6 * t0 + dc.delta7 * ip.psi_tilde +
           dc.delta8 * d0 *
               (ip.psi_bar + 3.0 * (1.0 + d0) * (1.0 + d0) / (p.alpha * (1.0 - p.beta)));
}

/// Superlinear bound (N/t)^t, clamped at 1 for reporting.
inline double bound_thm3(int t, double t0, const InitPotentials& ip, double d0,
                         const DeltaConstants& dc, const LineSearchParams& p) {
    if (t < 1) throw DomainViolation("bound_thm3: t must be >= 1");
    const double n = thm3_numerator(t0, ip, d0, dc, p);
    if (!(n < t)) return 1.0;
    return std::min(1.0, std::pow(n / t, t));
}

/// Upper bound on the number of iterations with rho_t outside [delta2, delta3]
/// after t0.
inline double bad_set_bound(const InitPotentials& ip, double d0, const DeltaConstants& dc,
                            const LineSearchParams& p) {
    return dc.delta4 *
           (ip.psi_tilde + 2.0 * d0 * (ip.psi_bar + 3.0 * (1.0 + d0) * (1.0 + d0) /
                                                        (p.alpha * (1.0 - p.beta))));
}

/// Iteration-count order estimates with unit implied constants; reporting
/// only, never asserted against trajectories.
struct ComplexityEstimates {
    double t1 = 0.0;
    double t2 = 0.0;
    double t3 = 0.0;
    double t_min = 0.0;
};

inline ComplexityEstimates complexity_estimates(double eps, const InitPotentials& ip,
                                                double d0) {
    if (!(eps > 0.0 && eps < 1.0)) throw DomainViolation("complexity_estimates: eps in (0,1)");
    const double le = std::log(1.0 / eps);
    const double omega_cap =
        ip.psi_tilde + (ip.psi_bar + (1.0 + d0) * (1.0 + d0)) * d0;

    ComplexityEstimates out;
    out.t1 = ip.psi_bar + (1.0 + d0) * (1.0 + d0) * le;
    out.t2 = omega_cap + le;
    out.t3 = omega_cap > 0.0 ? le / std::log(0.5 + std::sqrt(0.25 + le / omega_cap)) : 0.0;
    out.t_min = std::min({out.t1, out.t2, out.t3});
    return out;
}

/// Per-iteration loop bound for the log-bisection search:
/// 2 + log2(1 + (1-b)(1+2D)/(b-a)) + 2 log2(1 + log2(2(1-a)(1+D))
/// + max{log2 rho, log2 1/rho}).
inline double linesearch_bound(double d, double rho, const LineSearchParams& p) {
    if (d < 0.0) throw DomainViolation("linesearch_bound: D must be >= 0");
    if (!(rho > 0.0)) throw DomainViolation("linesearch_bound: rho must be > 0");
    const double a = p.alpha, b = p.beta;
    return 2.0 + std::log2(1.0 + (1.0 - b) * (1.0 + 2.0 * d) / (b - a)) +
           2.0 * std::log2(1.0 + std::log2(2.0 * (1.0 - a) * (1.0 + d)) +
                           std::max(std::log2(rho), std::log2(1.0 / rho)));
}

// ---------------------------------------------------------------------------
// Bound curves and the bundle for reporting
// ---------------------------------------------------------------------------

/// A rate curve t -> bound on (f(x_t) - f*)/(f(x_0) - f*), clamped at 1
/// (a relative-suboptimality bound above 1 is vacuous). t_min is the first
/// iteration at which the curve is meaningful; evaluations below it return 1.
/// The cor1/cor3 kinds are the B0 = aI specializations, which reuse the same
/// displays with the closed-form Delta potentials.
struct BoundCurve {
    enum class Kind { thm1, thm1_simplified, thm2, thm3, cor1, cor3 };
    Kind kind;
    double t_min = 1.0;
    std::function<double(int)> value;
};

/// Everything the closed-form analysis yields for one run, serializable next
/// to the experiment output for replay.
struct TheoryBundle {
    LineSearchParams ls;
    double M = 0.0;
    double C0 = 0.0;
    double D0 = 0.0;
    InitPotentials potentials;
    DeltaConstants deltas{};
    double t0 = 0.0;
    double thm2_valid_from = 0.0;
    double thm3_numerator_value = 0.0;
    double bad_set = 0.0;
    ComplexityEstimates complexity;   // at eps = 1e-8, order estimates
};

inline TheoryBundle make_theory_bundle(const SpdMatrix& b0, const SpdMatrix& hess_star,
                                       double c0, double m, const LineSearchParams& p,
                                       double eps = 1e-8) {
    TheoryBundle tb;
    tb.ls = p;
    tb.M = m;
    tb.C0 = c0;
    tb.D0 = suboptimality(c0, m).D;
    tb.potentials = init_potentials(b0, hess_star, tb.D0);
    tb.deltas = delta_constants(p, m);
    tb.t0 = compute_t0(tb.potentials, tb.D0, c0, tb.deltas, p);
    tb.thm2_valid_from = thm2_threshold(tb.potentials, tb.D0, p);
    tb.thm3_numerator_value = thm3_numerator(tb.t0, tb.potentials, tb.D0, tb.deltas, p);
    tb.bad_set = bad_set_bound(tb.potentials, tb.D0, tb.deltas, p);
    tb.complexity = complexity_estimates(eps, tb.potentials, tb.D0);
    return tb;
}

inline BoundCurve make_bound_curve(BoundCurve::Kind kind, const TheoryBundle& tb) {
    BoundCurve c;
    c.kind = kind;
    const LineSearchParams p = tb.ls;
    const double d0 = tb.D0;

    InitPotentials ip = tb.potentials;
    if (kind == BoundCurve::Kind::cor1 || kind == BoundCurve::Kind::cor3) {
        if (!ip.delta1_cap || !ip.delta2_cap)
            throw Error("make_bound_curve: corollary curves need B0 = aI potentials");
        ip.psi_bar = *ip.delta1_cap;
        ip.psi_tilde = *ip.delta2_cap;
    }

    switch (kind) {
        case BoundCurve::Kind::thm1:
        case BoundCurve::Kind::cor1:
            c.t_min = 1.0;
            c.value = [=](int t) {
                return t < 1 ? 1.0 : std::min(1.0, bound_thm1(t, ip, d0, p).value);
            };
            break;
        case BoundCurve::Kind::thm1_simplified:
            c.t_min = std::max(1.0, ip.psi_bar);
            c.value = [=, t_min = c.t_min](int t) {
                return t < t_min ? 1.0 : std::min(1.0, bound_thm1_simplified(t, d0, p));
            };
            break;
        case BoundCurve::Kind::thm2:
            c.t_min = std::max(1.0, thm2_threshold(ip, d0, p));
            c.value = [=](int t) {
                return t < 1 ? 1.0 : bound_thm2(t, ip, d0, p).value_or(1.0);
            };
            break;
        case BoundCurve::Kind::thm3:
        case BoundCurve::Kind::cor3: {
            const DeltaConstants dc = tb.deltas;
            const double t0 = compute_t0(ip, d0, tb.C0, dc, p);
            c.t_min = std::max(1.0, thm3_numerator(t0, ip, d0, dc, p));
            c.value = [=](int t) {
                return t < 1 ? 1.0 : bound_thm3(t, t0, ip, d0, dc, p);
            };
            break;
        }
    }
    return c;
}

inline nlohmann::json to_json(const TheoryBundle& tb) {
    nlohmann::json j;
    j["alpha"] = tb.ls.alpha;
    j["beta"] = tb.ls.beta;
    j["M"] = tb.M;
    j["C0"] = tb.C0;
    j["D0"] = tb.D0;
    j["psi_bar"] = tb.potentials.psi_bar;
    j["psi_tilde"] = tb.potentials.psi_tilde;
    if (tb.potentials.delta1_cap) j["Delta1"] = *tb.potentials.delta1_cap;
    if (tb.potentials.delta2_cap) j["Delta2"] = *tb.potentials.delta2_cap;
    j["delta"] = {tb.deltas.delta1, tb.deltas.delta2, tb.deltas.delta3, tb.deltas.delta4,
                  tb.deltas.delta5, tb.deltas.delta6, tb.deltas.delta7, tb.deltas.delta8};
    j["t0"] = tb.t0;
    j["thm2_valid_from"] = tb.thm2_valid_from;
    j["thm3_numerator"] = tb.thm3_numerator_value;
    j["bad_set_bound"] = tb.bad_set;
    j["complexity_order_estimates"] = {{"T1", tb.complexity.t1},
                                       {"T2", tb.complexity.t2},
                                       {"T3", tb.complexity.t3},
                                       {"T_min", tb.complexity.t_min}};
    return j;
}

}  // namespace scbfgs
