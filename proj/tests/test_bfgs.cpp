#include <cmath>

#include <gtest/gtest.h>

#include "scbfgs/bfgs.hpp"

using namespace scbfgs;

namespace {

Eigen::VectorXd vec2(double a, double b) {
    Eigen::VectorXd v(2);
    v << a, b;
    return v;
}

SpdMatrix random_spd(SplitMix64& rng, int d) {
    const Eigen::MatrixXd m = rng.normal_matrix(d, d);
    return SpdMatrix(m.transpose() * m + Eigen::MatrixXd::Identity(d, d));
}

Objective diag_quadratic(std::initializer_list<double> diag) {
    Eigen::VectorXd d(static_cast<int>(diag.size()));
    int i = 0;
    for (double v : diag) d[i++] = v;
    return make_quadratic(SpdMatrix(Eigen::MatrixXd(d.asDiagonal())));
}

}  // namespace

TEST(UpdateB, FixedPointWhenSecantAlreadyHolds) {
    const SpdMatrix b = bfgs_update_B(SpdMatrix::identity(3), Eigen::VectorXd::Unit(3, 0),
                                      Eigen::VectorXd::Unit(3, 0));
    EXPECT_TRUE(b.mat().isApprox(Eigen::MatrixXd::Identity(3, 3)));
}

TEST(UpdateB, HandEvaluatedRankTwo) {
    const SpdMatrix b =
        bfgs_update_B(SpdMatrix::identity(2), vec2(1.0, 0.0), vec2(2.0, 0.0));
    Eigen::MatrixXd expected(2, 2);
    expected << 2.0, 0.0, 0.0, 1.0;
    EXPECT_TRUE(b.mat().isApprox(expected));
    // secant condition
    EXPECT_TRUE((b.mat() * vec2(1.0, 0.0)).isApprox(vec2(2.0, 0.0)));
}

TEST(UpdateB, ZeroCurvatureThrows) {
    EXPECT_THROW(
        bfgs_update_B(SpdMatrix::identity(2), vec2(1.0, 0.0), vec2(0.0, 1.0)),
        CurvatureViolation);
}

TEST(UpdateH, HandEvaluatedInverse) {
    const SpdMatrix h =
        bfgs_update_H(SpdMatrix::identity(2), vec2(1.0, 0.0), vec2(2.0, 0.0));
    Eigen::MatrixXd expected(2, 2);
    expected << 0.5, 0.0, 0.0, 1.0;
    EXPECT_TRUE(h.mat().isApprox(expected));
}

TEST(UpdateH, InverseConsistencyOnSeededTriples) {
    // brute-force inversion oracle over 50 seeded SPD triples, d <= 6
    SplitMix64 rng(606);
    for (int rep = 0; rep < 50; ++rep) {
        const int d = 2 + static_cast<int>(rng.next_u64() % 5);
        const SpdMatrix b = random_spd(rng, d);
        const Eigen::VectorXd s = rng.normal_vector(d);
        Eigen::VectorXd y = rng.normal_vector(d);
        if (s.dot(y) <= 0.0) y = -y;
        if (s.dot(y) < 1e-6) y += s;

        const SpdMatrix b_next = bfgs_update_B(b, s, y);
        const SpdMatrix h = SpdMatrix(b.mat().inverse());
        const SpdMatrix h_next = bfgs_update_H(h, s, y);
        const Eigen::MatrixXd h_ref = b_next.mat().inverse();
        EXPECT_LE((h_next.mat() - h_ref).norm() / h_ref.norm(), 1e-8);
    }
}

TEST(Direction, IdentityAndDiagonalCases) {
    BfgsState st;
    st.g = vec2(2.0, 3.0);
    st.B = SpdMatrix::identity(2);
    EXPECT_TRUE(bfgs_direction(st).isApprox(vec2(-2.0, -3.0)));

    st.B = SpdMatrix(Eigen::MatrixXd(vec2(2.0, 1.0).asDiagonal()));
    EXPECT_TRUE(bfgs_direction(st).isApprox(vec2(-1.0, -3.0)));

    st.g = vec2(0.0, 0.0);
    EXPECT_TRUE(bfgs_direction(st).isZero());
}

TEST(Minimize, QuadraticConvergesMonotonically) {
    const Objective f = diag_quadratic({1.0, 4.0});
    SolverConfig cfg;
    cfg.grad_tol = 1e-8;
    cfg.max_iter = 50;
    const BfgsResult res = bfgs_minimize(f, vec2(1.0, 1.0), cfg);
    EXPECT_LE(res.state.x.norm(), 1e-7);
    EXPECT_LE(res.steps.size(), 50u);
    for (const StepRecord& r : res.steps) EXPECT_LT(r.f1, r.f0);
}

TEST(Minimize, AlreadyConvergedReturnsImmediately) {
    const Objective f = diag_quadratic({1.0, 4.0});
    SolverConfig cfg;
    const BfgsResult res = bfgs_minimize(f, vec2(0.0, 0.0), cfg);
    EXPECT_EQ(res.steps.size(), 0u);
}

TEST(Minimize, LogBarrierStaysInDomain) {
    const Objective f = make_log_barrier_1d();
    Eigen::VectorXd x0(1);
    x0[0] = 0.9;
    SolverConfig cfg;
    cfg.grad_tol = 1e-10;
    const BfgsResult res = bfgs_minimize(f, x0, cfg);
    EXPECT_LE(std::abs(res.state.x[0]), 1e-8);
}

TEST(Minimize, NonFiniteAtStartThrows) {
    auto bad = Objective(
        1, [](const Eigen::VectorXd&) { return std::nan(""); },
        [](const Eigen::VectorXd&) { return Eigen::VectorXd::Ones(1); }, nullptr,
        SelfConcordanceInfo{}, nlohmann::json{{"kind", "nan"}});
    SolverConfig cfg;
    EXPECT_THROW(bfgs_minimize(bad, Eigen::VectorXd::Zero(1), cfg), NonFiniteValue);
}

TEST(Minimize, SecantHoldsAfterEveryStep) {
    const Objective f = make_logistic(LogisticData::generate(12, 8));
    SolverConfig cfg;
    cfg.mode = UpdateMode::direct_B;
    cfg.record_matrices = true;
    cfg.grad_tol = 1e-10;
    cfg.max_iter = 120;
    const BfgsResult res = bfgs_minimize(f, Eigen::VectorXd::Zero(12), cfg);
    ASSERT_GE(res.steps.size(), 5u);
    ASSERT_EQ(res.B_history.size(), res.steps.size() + 1);
    for (std::size_t t = 0; t < res.steps.size(); ++t) {
        const auto& r = res.steps[t];
        const Eigen::MatrixXd& b_next = res.B_history[t + 1];
        EXPECT_LE((b_next * r.s - r.y).norm(),
                  1e-10 * (b_next.norm() * r.s.norm() + r.y.norm()));
    }
}

TEST(Minimize, PdPreservedAlongTheRun) {
    const Objective f = make_logistic(LogisticData::generate(20, 15));
    SolverConfig cfg;
    cfg.mode = UpdateMode::direct_B;
    cfg.record_matrices = true;
    cfg.grad_tol = 1e-11;
    cfg.max_iter = 150;
    const BfgsResult res = bfgs_minimize(f, Eigen::VectorXd::Zero(20), cfg);
    for (std::size_t t = 0; t < res.B_history.size(); t += 10) {
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(res.B_history[t]);
        EXPECT_GT(es.eigenvalues().minCoeff(), 0.0) << "t = " << t;
    }
}

TEST(Minimize, DirectAndInverseModesAgree) {
    const Objective f = make_logistic(LogisticData::generate(10, 88));
    SolverConfig direct;
    direct.mode = UpdateMode::direct_B;
    direct.grad_tol = 1e-9;
    direct.max_iter = 60;
    SolverConfig inverse = direct;
    inverse.mode = UpdateMode::inverse_H;
    const BfgsResult a = bfgs_minimize(f, Eigen::VectorXd::Zero(10), direct);
    const BfgsResult b = bfgs_minimize(f, Eigen::VectorXd::Zero(10), inverse);
    ASSERT_EQ(a.steps.size(), b.steps.size());
    for (std::size_t t = 0; t < a.steps.size(); ++t) {
        const double scale = std::max(1.0, a.steps[t].x.norm());
        EXPECT_LE((a.steps[t].x - b.steps[t].x).norm() / scale, 1e-6) << "t = " << t;
    }
}

TEST(Minimize, DualFormProductStaysNearIdentity) {
    // non-separable instance (N = 5d): the Hessian stays well conditioned at
    // the optimum, so the two update forms cannot drift apart
    const Objective f = make_logistic(LogisticData::generate(10, 3, 50));
    SolverConfig cfg;
    cfg.mode = UpdateMode::both;
    cfg.grad_tol = 1e-8;
    cfg.max_iter = 60;
    const BfgsResult res = bfgs_minimize(f, Eigen::VectorXd::Zero(10), cfg);
    ASSERT_TRUE(res.state.B && res.state.H);
    const Eigen::MatrixXd prod = res.state.B->mat() * res.state.H->mat();
    EXPECT_LE((prod - Eigen::MatrixXd::Identity(10, 10)).lpNorm<Eigen::Infinity>(), 1e-6);
}

TEST(Minimize, WolfeRatiosHoldOnEveryAcceptedStep) {
    // f* = O(1) here, so gradient norms below ~1e-8 sit under the float
    // resolution of f and the line search would stall
    const Objective f = make_log_sum_exp(LogSumExpData::generate(8, 16, 44));
    SolverConfig cfg;
    cfg.grad_tol = 1e-7;
    cfg.max_iter = 120;
    const BfgsResult res = bfgs_minimize(f, Eigen::VectorXd::Zero(8), cfg);
    ASSERT_GE(res.steps.size(), 3u);
    for (const StepRecord& r : res.steps) {
        const double p_hat = (r.f0 - r.f1) / (-r.gs);
        const double n_hat = r.sy / (-r.gs);
        EXPECT_GE(p_hat, cfg.ls.alpha - 1e-10);
        EXPECT_GE(n_hat, (1.0 - cfg.ls.beta) - 1e-10);
    }
}

TEST(B0Heuristic, ExactForIsotropicQuadratic) {
    const Objective f = make_quadratic(SpdMatrix::scaled_identity(5, 3.5));
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const SpdMatrix b0 = b0_heuristic(f, seed);
        EXPECT_NEAR(b0(0, 0), 3.5, 1e-12);
    }
}

TEST(B0Heuristic, RayleighBoundOnAnisotropicQuadratic) {
    const Objective f = diag_quadratic({1.0, 4.0});
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const SpdMatrix b0 = b0_heuristic(f, seed);
        EXPECT_GE(b0(0, 0), 1.0 - 1e-12);
        EXPECT_LE(b0(0, 0), 4.0 + 1e-12);
    }
}

TEST(Gd, IdentityQuadraticConvergesFast) {
    const Objective f = make_quadratic(SpdMatrix::identity(2));
    FirstOrderConfig cfg;
    cfg.grad_tol = 1e-7;
    cfg.max_iter = 30;
    const FirstOrderResult res = gd_minimize(f, vec2(1.0, 0.0), cfg);
    EXPECT_LE(res.x.norm(), 1e-6);
    EXPECT_LE(res.steps.size(), 30u);
    for (const StepRecord& r : res.steps) EXPECT_LT(r.f1, r.f0);
}

TEST(Gd, StartingAtMinimizerTakesNoStep) {
    const Objective f = make_quadratic(SpdMatrix::identity(3));
    const FirstOrderResult res = gd_minimize(f, Eigen::VectorXd::Zero(3));
    EXPECT_EQ(res.steps.size(), 0u);
}

TEST(Agd, MonotoneTraceOnQuadratic) {
    const Objective f = diag_quadratic({1.0, 10.0});
    FirstOrderConfig cfg;
    cfg.grad_tol = 1e-9;
    cfg.max_iter = 400;
    const FirstOrderResult res = agd_minimize(f, vec2(1.0, 1.0), cfg);
    EXPECT_LE(res.g.norm(), 1e-9);
    for (const StepRecord& r : res.steps) EXPECT_LE(r.f1, r.f0);
}

TEST(AffineTransform, IdentityAndScaling) {
    const Objective f = diag_quadratic({1.0, 4.0});
    const Objective same = affine_transform_problem(f, Eigen::MatrixXd::Identity(2, 2));
    const Eigen::VectorXd x = vec2(0.3, -0.7);
    EXPECT_DOUBLE_EQ(f.value(x), same.value(x));

    const Objective scaled = affine_transform_problem(f, 2.0 * Eigen::MatrixXd::Identity(2, 2));
    EXPECT_TRUE(scaled.hessian(x).mat().isApprox(4.0 * f.hessian(x).mat()));
}

TEST(AffineTransform, SingularThrows) {
    const Objective f = diag_quadratic({1.0, 4.0});
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(2, 2);
    a(1, 1) = 0.0;
    EXPECT_THROW(affine_transform_problem(f, a), SingularTransform);
}

TEST(AffineTransform, BfgsCovarianceUnderMatchedSteps) {
    // Proposition-style check: with x0' = A^-1 x0, B0' = A' B0 A and matched
    // step sizes, iterates obey x_t' = A^-1 x_t and B_t' = A' B_t A.
    SplitMix64 rng(2024);
    const int d = 3;
    Eigen::MatrixXd a = rng.normal_matrix(d, d);
    a += d * Eigen::MatrixXd::Identity(d, d);   // keep it well conditioned

    const SpdMatrix q = random_spd(rng, d);
    const Objective f = make_quadratic(q);
    const Objective phi = affine_transform_problem(f, a);
    const Eigen::VectorXd x0 = rng.normal_vector(d);

    SolverConfig base;
    base.mode = UpdateMode::direct_B;
    base.record_matrices = true;
    base.grad_tol = 1e-14;
    base.max_iter = 10;
    const BfgsResult run = bfgs_minimize(f, x0, base);
    ASSERT_GE(run.steps.size(), 3u);

    SolverConfig dotted = base;
    dotted.b0 = B0Policy::explicit_matrix(SpdMatrix(a.transpose() * a));   // A' I A
    for (const StepRecord& r : run.steps) dotted.eta_schedule.push_back(r.eta);
    const BfgsResult dot_run = bfgs_minimize(phi, a.lu().solve(x0), dotted);
    ASSERT_EQ(dot_run.steps.size(), run.steps.size());

    for (std::size_t t = 0; t < run.steps.size(); ++t) {
        const Eigen::VectorXd expected_x = a.lu().solve(run.steps[t].x);
        EXPECT_LE((dot_run.steps[t].x - expected_x).norm() /
                      std::max(1.0, expected_x.norm()),
                  1e-8);
        const Eigen::MatrixXd expected_b = a.transpose() * run.B_history[t] * a;
        EXPECT_LE((dot_run.B_history[t] - expected_b).norm() / expected_b.norm(), 1e-8);
    }
}
