#include "dlyap/problems.hpp"
#include "dlyap/solver.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace dlyap;

namespace {

SolveOptions exact_options()
{
    SolveOptions opt;
    opt.ode.scheme = Scheme::exact;
    return opt;
}

} // namespace

TEST(SolveDlyap, SmallExampleMatchesPrintedSolution)
{
    const auto s = solve_dlyap(small_example(1.0).problem, exact_options());
    ASSERT_TRUE(s.report.converged);
    EXPECT_EQ(s.report.status, "converged");
    EXPECT_LE((s.report.x - small_example_reference_solution()).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LE(s.report.r_alg, 1e-8);
    EXPECT_LE(s.report.r_sym, 1e-8);
    EXPECT_EQ(s.c, 1.0);
    EXPECT_GE(s.total_iterations, s.report.iterations);
    ASSERT_TRUE(s.context.has_value());
    EXPECT_EQ(s.context->n(), 4);
}

TEST(SolveDlyap, MatchesDenseOracle)
{
    std::mt19937_64 rng(1);
    for (Eigen::Index n = 2; n <= 4; ++n) {
        const TdsProblem p = random_stable_problem(rng, n);
        const auto s = solve_dlyap(p, exact_options());
        ASSERT_TRUE(s.report.converged);
        const Matrix ref = oracle::dense_dlyap(p.a0, p.a1, p.tau, 1.0, p.w);
        EXPECT_LE((s.report.x - ref).norm(), 1e-8 * ref.norm()) << "n=" << n;
        EXPECT_LE(oracle::boundary_residual(p.a0, p.a1, p.tau, p.w, s.report.x), 1e-8);
    }
}

TEST(SolveDlyap, ShiftChoiceDoesNotChangeSolution)
{
    std::mt19937_64 rng(2);
    const TdsProblem p = random_stable_problem(rng, 3);
    SolveOptions opt = exact_options();
    const Matrix x1 = solve_dlyap(p, opt).report.x;
    opt.c = -2.5;
    const auto s = solve_dlyap(p, opt);
    EXPECT_EQ(s.c, -2.5);
    EXPECT_LE((s.report.x - x1).norm(), 1e-8 * x1.norm());
}

TEST(SolveDlyap, ShiftCollisionIsRetried)
{
    // c = -1 is an eigenvalue of A0 = diag(-1, -2); the solver perturbs it
    TdsProblem p;
    p.a0 = Vector{{-1.0, -2.0}}.asDiagonal().toDenseMatrix();
    p.a1 = 0.1 * Matrix::Ones(2, 2);
    p.w = Matrix::Identity(2, 2);
    SolveOptions opt = exact_options();
    opt.c = -1.0;
    const auto s = solve_dlyap(p, opt);
    EXPECT_NE(s.c, -1.0);
    EXPECT_NEAR(s.c, -1.0, 1e-7);
    EXPECT_TRUE(s.report.converged);
    opt.shift_retries = 0;
    try {
        (void)solve_dlyap(p, opt);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "precond-shift-degenerate");
    }
}

TEST(SolveDlyap, ZeroDelayTermOneIteration)
{
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        TdsProblem p = random_stable_problem(rng, 3 + trial);
        p.a1.setZero();
        SolveOptions opt;
        opt.ode.steps = 50;
        const auto s = solve_dlyap(p, opt);
        EXPECT_TRUE(s.report.converged);
        EXPECT_EQ(s.report.iterations, 1);
        EXPECT_EQ(s.refinements, 0);
    }
}

TEST(SolveDlyap, ReportsTimingsAndHistory)
{
    std::mt19937_64 rng(4);
    const auto s = solve_dlyap(random_stable_problem(rng, 5));
    const auto& r = s.report;
    EXPECT_EQ(r.residual_history.size(), static_cast<std::size_t>(r.iterations) + 1);
    EXPECT_GE(r.timings.setup_seconds, 0.0);
    EXPECT_GT(r.timings.apply_seconds, 0.0);
    EXPECT_GT(r.timings.precond_seconds, 0.0);
}

TEST(SolveDlyap, MaxitFailureIsReported)
{
    SolveOptions opt = exact_options();
    opt.use_maxit_default = false;
    opt.krylov.maxit = 1;
    const auto s = solve_dlyap(small_example(2.0).problem, opt);
    EXPECT_FALSE(s.report.converged);
    EXPECT_EQ(s.report.status, "krylov-maxit");
    EXPECT_EQ(s.refinements, 0);
}

TEST(SolveDlyap, RefinementImprovesIllConditionedCase)
{
    SolveOptions opt = exact_options();
    opt.max_refinements = 0;
    const auto plain = solve_dlyap(small_example(1.0).problem, opt);
    opt.max_refinements = 3;
    const auto refined = solve_dlyap(small_example(1.0).problem, opt);
    EXPECT_LE(refined.report.r_alg, plain.report.r_alg);
    EXPECT_LE(refined.report.r_alg, 1e-8);
}

TEST(SolveDlyap, InvalidProblem)
{
    TdsProblem p = small_example(1.0).problem;
    p.w(0, 1) = 1.0;
    try {
        (void)solve_dlyap(p);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "bad-problem");
    }
}
