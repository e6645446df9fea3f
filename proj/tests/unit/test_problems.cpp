#include "dlyap/problems.hpp"
#include "dlyap/solver.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace dlyap;

namespace {

std::string error_code(const auto& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return "ok";
}

} // namespace

TEST(SmallExample, PrintedEntries)
{
    const auto ex = small_example(1.0);
    const Matrix& a0 = ex.problem.a0;
    EXPECT_EQ(a0(0, 0), -26.0);
    EXPECT_EQ(a0(3, 3), -9.0);
    EXPECT_EQ(a0(0, 1), 22.0);
    EXPECT_EQ(a0(2, 3), -22.0);
    EXPECT_EQ(a0(3, 0), -13.0);
    Matrix a1 = Matrix::Zero(4, 4);
    a1.diagonal() << -1.0, -0.5, 0.0, 0.5;
    EXPECT_EQ(ex.problem.a1, a1);
    EXPECT_EQ(ex.problem.w, Matrix::Identity(4, 4));
    EXPECT_EQ(ex.problem.tau, 1.0);
    EXPECT_EQ(small_example(0.0).problem.a1, Matrix::Zero(4, 4));
    EXPECT_EQ(small_example(2.5).problem.a1, 2.5 * a1);
}

TEST(SmallExample, ReferenceSolutionScale)
{
    const Matrix x = small_example_reference_solution();
    EXPECT_DOUBLE_EQ(x(0, 0), 0.002302);
    EXPECT_DOUBLE_EQ(x(3, 3), 0.008755);
    EXPECT_DOUBLE_EQ(x(3, 0), -0.005485);
}

TEST(SmallExample, A0IsStable)
{
    for (const auto& l : oracle::companion_eigenvalues(small_example_a0())) EXPECT_LT(l.real(), 0.0);
}

TEST(Pdde, Sizes)
{
    EXPECT_EQ(pdde_generate(5, 5).problem.n(), 50);
    EXPECT_EQ(pdde_generate(11, 11).problem.n(), 242);
    const auto big = pdde_generate(23, 23);
    EXPECT_EQ(big.problem.n(), 1058);
    EXPECT_NEAR(big.hx, 1.0 / 24.0, 1e-16);
}

TEST(Pdde, SinglePointSecondDifference)
{
    const auto s = pdde_generate(1, 1);
    EXPECT_DOUBLE_EQ(s.hx, 0.5);
    EXPECT_DOUBLE_EQ(second_difference(1, 0.5)(0, 0), -8.0);
    EXPECT_DOUBLE_EQ(s.laplacian(0, 0), -16.0);
}

TEST(Pdde, GridErrors)
{
    EXPECT_EQ(error_code([] { (void)pdde_generate(4, 5); }), "grid-center-undefined");
    EXPECT_EQ(error_code([] { (void)pdde_generate(5, 6); }), "grid-center-undefined");
    EXPECT_EQ(error_code([] { (void)pdde_generate(0, 5); }), "bad-config");
    EXPECT_EQ(error_code([] { (void)pdde_generate(4, 6, 5.0, 1.0, false); }), "ok");
}

TEST(Pdde, DifferenceMatrices)
{
    const double h = 0.125;
    const Matrix d2 = second_difference(7, h);
    const Matrix d1 = first_difference(7, h);
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 7; ++j) {
            const double e2 = i == j ? -2.0 / (h * h) : (std::abs(i - j) == 1 ? 1.0 / (h * h) : 0.0);
            const double e1 = j == i + 1 ? 1.0 / (2 * h) : (j == i - 1 ? -1.0 / (2 * h) : 0.0);
            EXPECT_DOUBLE_EQ(d2(i, j), e2);
            EXPECT_DOUBLE_EQ(d1(i, j), e1);
        }
    EXPECT_EQ(d1 + d1.transpose(), Matrix::Zero(7, 7));
}

TEST(Pdde, LaplacianSymmetricNegativeDefinite)
{
    for (const auto& [nx, ny] : {std::pair{3, 5}, std::pair{7, 7}, std::pair{11, 9}}) {
        const auto s = pdde_generate(nx, ny);
        EXPECT_EQ(s.laplacian, s.laplacian.transpose());
        const Eigen::SelfAdjointEigenSolver<Matrix> es(s.laplacian);
        EXPECT_LT(es.eigenvalues().maxCoeff(), 0.0);
        // smallest-magnitude eigenvalue of the 5-point Laplacian
        const double expected = -4.0 / (s.hx * s.hx) * std::pow(std::sin(std::numbers::pi * s.hx / 2), 2) -
                                4.0 / (s.hy * s.hy) * std::pow(std::sin(std::numbers::pi * s.hy / 2), 2);
        EXPECT_NEAR(es.eigenvalues().maxCoeff(), expected, 1e-9 * std::abs(expected));
    }
}

TEST(Pdde, BlockStructureFromEntries)
{
    const int nx = 5, ny = 3;
    const auto s = pdde_generate(nx, ny, 5.0, 1.0, false);
    const Eigen::Index m = nx * ny;
    const Matrix& a0 = s.problem.a0;
    const Matrix& a1 = s.problem.a1;
    const double hx = 1.0 / (nx + 1), hy = 1.0 / (ny + 1);
    const auto idx = [&](int i, int j) { return static_cast<Eigen::Index>(i + j * nx); };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const Eigen::Index k = idx(i, j);
            // velocity rows: v' = w
            for (Eigen::Index c = 0; c < 2 * m; ++c) EXPECT_EQ(a0(k, c), c == m + k ? 1.0 : 0.0);
            // acceleration rows: 5-point stencil on v, damping -1 on w
            EXPECT_DOUBLE_EQ(a0(m + k, k), -2.0 / (hx * hx) - 2.0 / (hy * hy));
            if (i > 0) {
                EXPECT_DOUBLE_EQ(a0(m + k, idx(i - 1, j)), 1.0 / (hx * hx));
            }
            if (i + 1 < nx) {
                EXPECT_DOUBLE_EQ(a0(m + k, idx(i + 1, j)), 1.0 / (hx * hx));
            }
            if (j > 0) {
                EXPECT_DOUBLE_EQ(a0(m + k, idx(i, j - 1)), 1.0 / (hy * hy));
            }
            if (j + 1 < ny) {
                EXPECT_DOUBLE_EQ(a0(m + k, idx(i, j + 1)), 1.0 / (hy * hy));
            }
            EXPECT_EQ(a0(m + k, m + k), -1.0);
            EXPECT_EQ(a0.row(m + k).tail(m).cwiseAbs().sum(), 1.0);
            EXPECT_EQ(a0.row(m + k).head(m).count(), 1 + (i > 0) + (i + 1 < nx) + (j > 0) + (j + 1 < ny));

            // delay rows: f(x_i, y_j) times the central x difference
            const double x = (i + 1) * hx, y = (j + 1) * hy;
            const double f = 5.0 * std::cos(x * y) * std::sin(std::numbers::pi * x);
            EXPECT_NEAR(s.f(k), f, 1e-15);
            if (i > 0) {
                EXPECT_NEAR(a1(m + k, idx(i - 1, j)), -f / (2 * hx), 1e-12);
            }
            if (i + 1 < nx) {
                EXPECT_NEAR(a1(m + k, idx(i + 1, j)), f / (2 * hx), 1e-12);
            }
            EXPECT_EQ(a1.row(m + k).head(m).count(), (i > 0) + (i + 1 < nx));
            EXPECT_EQ(a1.row(m + k).tail(m).count(), 0);
            EXPECT_EQ(a1.row(k).count(), 0);
        }
}

TEST(Pdde, InputOutputMatrices)
{
    const auto s = pdde_generate(5, 7);
    const Eigen::Index m = 35;
    ASSERT_TRUE(s.problem.b0 && s.problem.c0);
    const Matrix& b0 = *s.problem.b0;
    EXPECT_EQ(b0.cols(), 1);
    EXPECT_EQ(b0.topRows(m), Matrix::Ones(m, 1));
    EXPECT_EQ(b0.bottomRows(m), Matrix::Zero(m, 1));
    const Matrix& c0 = *s.problem.c0;
    EXPECT_EQ(c0.rows(), 1);
    EXPECT_EQ(c0.sum(), 1.0);
    EXPECT_EQ(c0(0, 2 + 3 * 5), 1.0); // x = 1/2 at i = 2, y = 1/2 at j = 3
    EXPECT_EQ(s.problem.w, s.problem.w.transpose());
    Eigen::FullPivLU<Matrix> lu(s.problem.w);
    EXPECT_EQ(lu.rank(), 1);
    EXPECT_EQ(pdde_generate(3, 3, 5.0, 1.0, false).problem.w, Matrix::Identity(18, 18));
}

TEST(Pdde, NormsAtFinestGrid)
{
    const auto s = pdde_generate(23, 23);
    const double a0n = spectral_norm(s.problem.a0);
    const double a1n = spectral_norm(s.problem.a1);
    EXPECT_NEAR(a0n, 5000.0, 0.2 * 5000.0);
    EXPECT_NEAR(a1n, 100.0, 0.2 * 100.0);
}

TEST(Bench, ZeroDelayTermNeedsOneIteration)
{
    BenchOptions opt;
    opt.a1_scale = 0.0;
    const auto rows = bench_table({{5, 5}}, opt);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].n, 50);
    EXPECT_TRUE(rows[0].converged);
    EXPECT_EQ(rows[0].iterations, 1);
}

TEST(Bench, FailedRowIsRecorded)
{
    BenchOptions opt;
    opt.solve.ode.steps = 20;
    const auto rows = bench_table({{2, 3}, {1, 1}}, opt);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].status, "grid-center-undefined");
    EXPECT_FALSE(rows[0].converged);
    EXPECT_EQ(rows[1].status, "converged");
    std::ostringstream csv;
    write_bench_csv(csv, rows, false);
    const std::string text = csv.str();
    EXPECT_EQ(text.rfind("nx,ny,n,iterations,converged,seconds,r_alg,r_sym,status\n", 0), 0u);
    EXPECT_NE(text.find("2,3,0,0,0,0.000,"), std::string::npos);
    EXPECT_NE(text.find(",grid-center-undefined\n"), std::string::npos);
}

TEST(RandomProblem, Properties)
{
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index n = 1 + trial % 7;
        RandomProblemOptions opt;
        opt.a1_scale = 0.25 * (1 + trial % 3);
        const TdsProblem p = random_stable_problem(rng, n, opt);
        EXPECT_NO_THROW(p.validate());
        EXPECT_NEAR(oracle::spectral_norm(p.a1), opt.a1_scale, 1e-6);
        // logarithmic norm bound gives delay-independent stability
        const Eigen::SelfAdjointEigenSolver<Matrix> es(Matrix(0.5 * (p.a0 + p.a0.transpose())));
        EXPECT_NEAR(es.eigenvalues().maxCoeff(), -(opt.margin + opt.a1_scale), 1e-10);
        const Eigen::SelfAdjointEigenSolver<Matrix> ew(p.w);
        EXPECT_GE(ew.eigenvalues().minCoeff(), 1.0 - 1e-10);
    }
    std::mt19937_64 a(7), b(7);
    EXPECT_EQ(random_stable_problem(a, 4).a0, random_stable_problem(b, 4).a0);
}
