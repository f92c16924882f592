#include <cmath>

#include <gtest/gtest.h>

#include "scbfgs/diagnostics.hpp"

using namespace scbfgs;

namespace {

const LineSearchParams kP{0.1, 0.9};

Objective diag_quadratic(std::initializer_list<double> diag) {
    Eigen::VectorXd d(static_cast<int>(diag.size()));
    int i = 0;
    for (double v : diag) d[i++] = v;
    return make_quadratic(SpdMatrix(Eigen::MatrixXd(d.asDiagonal())));
}

Eigen::VectorXd vec1(double v) {
    Eigen::VectorXd x(1);
    x[0] = v;
    return x;
}

}  // namespace

TEST(PolishReference, QuadraticIsExactAfterOneNewtonStep) {
    const Objective f = diag_quadratic({2.0, 5.0});
    Eigen::VectorXd warm(2);
    warm << 3.0, -4.0;
    const ReferenceSolution ref = polish_reference(f, warm);
    EXPECT_LE(ref.x_star.norm(), 1e-12);
    EXPECT_NEAR(ref.f_star, 0.0, 1e-24);
    EXPECT_EQ(ref.polish_method, PolishMethod::newton);
    EXPECT_TRUE(ref.hess_star.mat().isApprox(f.hessian(warm).mat()));
}

TEST(PolishReference, LogBarrierLandsAtOrigin) {
    const Objective f = make_log_barrier_1d();
    const ReferenceSolution ref = polish_reference(f, vec1(0.35));
    EXPECT_LE(std::abs(ref.x_star[0]), 1e-12);
    EXPECT_NEAR(ref.f_star, 0.0, 1e-20);
    EXPECT_NEAR(ref.hess_star(0, 0), 2.0, 1e-10);
}

TEST(PolishReference, LogisticReachesTinyGradient) {
    // N = 5d keeps the data non-separable, so the minimizer is interior and
    // the Hessian there is positive definite
    const Objective f = make_logistic(LogisticData::generate(10, 5, 50));
    SolverConfig cfg;
    cfg.grad_tol = 1e-8;
    cfg.max_iter = 200;
    const BfgsResult run = bfgs_minimize(f, Eigen::VectorXd::Zero(10), cfg);
    const ReferenceSolution ref = polish_reference(f, run.state.x);
    EXPECT_LE(ref.grad_norm_at_star, 1e-13 * (1.0 + std::abs(ref.f_star)));
}

TEST(PolishReference, FdHessianFallbackWhenNoAnalyticHessian) {
    // quadratic with the Hessian callback stripped
    const Objective base = diag_quadratic({1.0, 3.0});
    const Objective no_hess(
        base.dim(), [base](const Eigen::VectorXd& x) { return base.value(x); },
        [base](const Eigen::VectorXd& x) { return base.gradient(x); }, nullptr,
        SelfConcordanceInfo{}, base.descriptor());
    Eigen::VectorXd warm(2);
    warm << 0.5, 0.5;
    const ReferenceSolution ref = polish_reference(no_hess, warm);
    EXPECT_EQ(ref.polish_method, PolishMethod::bfgs_deep);
    EXPECT_LE(ref.x_star.norm(), 1e-9);
    EXPECT_NEAR(ref.hess_star(0, 0), 1.0, 1e-4);
    EXPECT_NEAR(ref.hess_star(1, 1), 3.0, 1e-4);
}

TEST(ComputeDiagnostics, RhoIsOneWhenBMatchesHessianStar) {
    // B0 = Q keeps B_t = Q (secant fixed point), and rho_t = 1 identically
    Eigen::MatrixXd q(2, 2);
    q << 3.0, 1.0, 1.0, 2.0;
    const Objective f = make_quadratic(SpdMatrix(q));
    SolverConfig cfg;
    cfg.b0 = B0Policy::explicit_matrix(SpdMatrix(q));
    cfg.mode = UpdateMode::direct_B;
    cfg.grad_tol = 1e-12;
    Eigen::VectorXd x0(2);
    x0 << 2.0, -1.0;
    const BfgsResult run = bfgs_minimize(f, x0, cfg);
    ASSERT_GE(run.steps.size(), 1u);
    const ReferenceSolution ref = polish_reference(f, run.state.x);
    const auto diags =
        compute_diagnostics(run.steps, run.B0, ref, WeightChoice::tilde, std::nullopt, kP);
    for (const auto& d : diags) EXPECT_NEAR(d.rho, 1.0, 1e-9);
    // perfect initialization: Psi(B_hat_0) = 0 under the tilde weight
    EXPECT_NEAR(diags.front().psi_bhat, 0.0, 1e-9);
}

TEST(ComputeDiagnostics, WeightIndependentRatiosAgreeAcrossWeights) {
    const Objective f = diag_quadratic({1.0, 4.0, 9.0});
    SolverConfig cfg;
    cfg.grad_tol = 1e-11;
    Eigen::VectorXd x0(3);
    x0 << 1.0, 1.0, 1.0;
    const BfgsResult run = bfgs_minimize(f, x0, cfg);
    const ReferenceSolution ref = polish_reference(f, run.state.x);

    const auto tilde =
        compute_diagnostics(run.steps, run.B0, ref, WeightChoice::tilde, 1e-6, kP);
    const auto bar = compute_diagnostics(run.steps, run.B0, ref, WeightChoice::bar, 1e-6, kP);
    ASSERT_EQ(tilde.size(), bar.size());
    for (std::size_t i = 0; i < tilde.size(); ++i) {
        EXPECT_NEAR(tilde[i].p_hat, bar[i].p_hat, 1e-14);
        EXPECT_NEAR(tilde[i].n_hat, bar[i].n_hat, 1e-14);
    }

    // q_hat under the bar weight stays above 1/(1+D0)^2; on a quadratic with
    // the exact reference Hessian it equals 2/(1+D0)
    const double c0 = run.steps.front().f0 - ref.f_star;
    const double d0 = suboptimality(c0, 1e-6).D;
    for (const auto& d : bar)
        if (d.q_hat) {
            EXPECT_GE(*d.q_hat, 1.0 / ((1.0 + d0) * (1.0 + d0)) - 1e-10);
            EXPECT_NEAR(*d.q_hat, 2.0 / (1.0 + d0), 1e-6);
        }
}

TEST(ComputeDiagnostics, BarWeightWithoutMThrows) {
    const Objective f = diag_quadratic({1.0, 4.0});
    SolverConfig cfg;
    const BfgsResult run = bfgs_minimize(f, Eigen::VectorXd::Ones(2), cfg);
    const ReferenceSolution ref = polish_reference(f, run.state.x);
    EXPECT_THROW(
        compute_diagnostics(run.steps, run.B0, ref, WeightChoice::bar, std::nullopt, kP),
        MissingM);
}

TEST(CheckCertificates, CleanRunPasses) {
    const Objective f = diag_quadratic({1.0, 4.0, 16.0});
    SolverConfig cfg;
    cfg.grad_tol = 1e-12;
    cfg.max_iter = 60;
    Eigen::VectorXd x0(3);
    x0 << 1.0, -2.0, 0.5;
    const BfgsResult run = bfgs_minimize(f, x0, cfg);
    const ReferenceSolution ref = polish_reference(f, run.state.x);
    const auto diags =
        compute_diagnostics(run.steps, run.B0, ref, WeightChoice::tilde, std::nullopt, kP);
    const CertificateReport rep = check_certificates(diags, run.steps, kP);
    EXPECT_EQ(rep.steps_checked, static_cast<int>(run.steps.size()));
    EXPECT_GE(rep.min_p_slack, -1e-10);
    EXPECT_GE(rep.min_n_slack, -1e-10);
    EXPECT_GE(rep.min_propB2_slack, -1e-8);
    for (const auto& d : diags) EXPECT_TRUE(d.lemmaB1_ok);
}

TEST(CheckCertificates, CorruptedStepIsCaught) {
    // rebuild one record with an eta that violates the Armijo threshold
    const Objective f = diag_quadratic({1.0, 4.0});
    SolverConfig cfg;
    cfg.grad_tol = 1e-10;
    const BfgsResult run = bfgs_minimize(f, Eigen::VectorXd::Ones(2), cfg);
    ASSERT_GE(run.steps.size(), 2u);

    std::vector<StepRecord> corrupted = run.steps;
    StepRecord& r = corrupted[1];
    const Eigen::VectorXd d = r.s / r.eta;
    const double bad_eta = 1e3;   // gross overshoot on a quadratic
    r.eta = bad_eta;
    r.s = bad_eta * d;
    r.y = f.gradient(r.x + r.s) - r.g;
    r.f1 = f.value(r.x + r.s);
    r.sy = r.s.dot(r.y);
    r.gs = r.g.dot(r.s);

    const ReferenceSolution ref = polish_reference(f, run.state.x);
    const auto diags =
        compute_diagnostics(corrupted, run.B0, ref, WeightChoice::tilde, std::nullopt, kP);
    try {
        check_certificates(diags, corrupted, kP);
        FAIL() << "expected CertificateViolation";
    } catch (const CertificateViolation& e) {
        EXPECT_EQ(e.t, 1);
    }
}

TEST(Diagnostics, RhoPositiveAndUnitStepsDominateLate) {
    const Objective f = make_logistic(LogisticData::generate(20, 31, 100));
    SolverConfig cfg;
    cfg.grad_tol = 1e-8;
    cfg.max_iter = 200;
    const BfgsResult run = bfgs_minimize(f, Eigen::VectorXd::Zero(20), cfg);
    ASSERT_GE(run.steps.size(), 8u);

    const std::size_t n = run.steps.size();
    const double frac = unit_step_fraction(run.steps, n - n / 4, n);
    EXPECT_GE(frac, 0.9);

    const ReferenceSolution ref = polish_reference(f, run.state.x);
    const auto diags =
        compute_diagnostics(run.steps, run.B0, ref, WeightChoice::tilde, std::nullopt, kP);
    for (const auto& d : diags) EXPECT_GT(d.rho, 0.0);
}

TEST(Diagnostics, LogBarrierBadSetAndBarWeightLowerBound) {
    const Objective f = make_log_barrier_1d();
    SolverConfig cfg;
    cfg.grad_tol = 1e-12;
    cfg.max_iter = 80;
    const BfgsResult run = bfgs_minimize(f, vec1(0.5), cfg);
    const ReferenceSolution ref = polish_reference(f, run.state.x);
    const double m = *f.info().M;

    const auto dc = delta_constants(kP, m);
    const auto bar = compute_diagnostics(run.steps, run.B0, ref, WeightChoice::bar, m, kP);

    // q_hat under the bar weight >= 1/(1+D0)^2 wherever reported
    const double c0 = run.steps.front().f0 - ref.f_star;
    const double d0 = suboptimality(c0, m).D;
    for (const auto& d : bar)
        if (d.q_hat) {
            EXPECT_GE(*d.q_hat, 1.0 / ((1.0 + d0) * (1.0 + d0)) - 1e-12);
        }

    // terminal quarter: rho_t inside [delta2, delta3] except for at most the
    // bad-set bound
    const auto ip = init_potentials(run.B0, ref.hess_star, d0);
    const double allowed = bad_set_bound(ip, d0, dc, kP);
    const std::size_t n = bar.size();
    int outside = 0;
    for (std::size_t i = n - n / 4; i < n; ++i)
        if (bar[i].rho < dc.delta2 || bar[i].rho > dc.delta3) ++outside;
    EXPECT_LE(static_cast<double>(outside), allowed);
}

TEST(Diagnostics, QhatAbsentWhenGapUnderflows) {
    const Objective f = diag_quadratic({1.0, 2.0});
    SolverConfig cfg;
    cfg.grad_tol = 1e-14;
    cfg.max_iter = 60;
    const BfgsResult run = bfgs_minimize(f, Eigen::VectorXd::Ones(2), cfg);
    const ReferenceSolution ref = polish_reference(f, run.state.x);
    const auto diags =
        compute_diagnostics(run.steps, run.B0, ref, WeightChoice::tilde, std::nullopt, kP);
    // last couple of steps sit at the float floor; their q_hat must be absent
    EXPECT_FALSE(diags.back().q_hat.has_value());
    EXPECT_TRUE(diags.front().q_hat.has_value());
}
