#pragma once

// Reference problems: a fixed 4x4 system with a scalable delay term, and the
// finite-difference semi-discretization of a damped 2D wave equation with
// delayed feedback,
//
//   v_tt = Lap v - v_t + f(x,y) v_x(t - tau) + u(t),  w(t) = v(1/2, 1/2),
//   f(x,y) = f0 cos(xy) sin(pi x), homogeneous Dirichlet data on [0,1]^2.
//
// Grid vectors are ordered with the x index fastest, so I (x) D_xx acts on
// x-lines and D_yy (x) I on y-lines.

#include "dlyap/dlyap_operator.hpp"
#include "dlyap/error.hpp"
#include "dlyap/linalg.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>

namespace dlyap {

struct SmallExample
{
    TdsProblem problem;
    double alpha = 0.0;
};

inline Matrix small_example_a0()
{
    Matrix a0(4, 4);
    a0 << -26, 22, -1, -4,  //
        2, -24, -4, 1,      //
        7, 11, -24, -22,    //
        -13, 15, -1, -9;
    return a0;
}

/// A1 = alpha diag(-1, -0.5, 0, 0.5), W = I, tau = 1. Stable for alpha in [0, 10].
inline SmallExample small_example(double alpha)
{
    SmallExample ex;
    ex.alpha = alpha;
    ex.problem.a0 = small_example_a0();
    ex.problem.a1 = alpha * Vector{{-1.0, -0.5, 0.0, 0.5}}.asDiagonal().toDenseMatrix();
    ex.problem.w = Matrix::Identity(4, 4);
    ex.problem.tau = 1.0;
    return ex;
}

/// U(tau/2) of the small example at alpha = 1, as printed with four decimals
/// of the matrix scaled by 100.
inline Matrix small_example_reference_solution()
{
    Matrix x(4, 4);
    x << 0.2302, -0.0156, 0.0101, -0.3729,  //
        -0.0885, 0.0044, -0.0038, 0.1380,   //
        0.1466, -0.0057, 0.0056, -0.2263,   //
        -0.5485, 0.0331, -0.0238, 0.8755;
    return x / 100.0;
}

struct PddeSystem
{
    TdsProblem problem;
    int nx = 0;
    int ny = 0;
    double f0 = 0.0;
    double hx = 0.0;
    double hy = 0.0;
    Matrix laplacian; ///< I (x) D_xx + D_yy (x) I, size nx*ny
    Matrix dx;        ///< central first difference in x, size nx
    Vector f;         ///< f at the grid points, x index fastest
};

/// (1/h^2) tridiag(1, -2, 1) of size m.
inline Matrix second_difference(int m, double h)
{
    Matrix d = Matrix::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        d(i, i) = -2.0;
        if (i > 0) d(i, i - 1) = 1.0;
        if (i + 1 < m) d(i, i + 1) = 1.0;
    }
    return d / (h * h);
}

/// (1/(2h)) tridiag(-1, 0, 1) of size m.
inline Matrix first_difference(int m, double h)
{
    Matrix d = Matrix::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        if (i > 0) d(i, i - 1) = -1.0;
        if (i + 1 < m) d(i, i + 1) = 1.0;
    }
    return d / (2.0 * h);
}

/// n = 2 nx ny. With `with_output` the grid must be odd in both directions so
/// that the midpoint (1/2, 1/2) is a grid node; W = C0^T C0. Without it, W = I.
inline PddeSystem pdde_generate(int nx, int ny, double f0 = 5.0, double tau = 1.0, bool with_output = true)
{
    if (nx < 1 || ny < 1) throw Error("bad-config", "grid counts must be >= 1");
    if (with_output && (nx % 2 == 0 || ny % 2 == 0))
        throw Error("grid-center-undefined", "C0 needs odd nx and ny, got " + std::to_string(nx) + "x" +
                                                 std::to_string(ny));
    PddeSystem s;
    s.nx = nx;
    s.ny = ny;
    s.f0 = f0;
    s.hx = 1.0 / (nx + 1);
    s.hy = 1.0 / (ny + 1);

    const Eigen::Index m = static_cast<Eigen::Index>(nx) * ny;
    const Eigen::Index n = 2 * m;
    const Matrix dxx = second_difference(nx, s.hx);
    const Matrix dyy = second_difference(ny, s.hy);
    s.dx = first_difference(nx, s.hx);
    const Matrix ix = Matrix::Identity(nx, nx);
    const Matrix iy = Matrix::Identity(ny, ny);
    s.laplacian = kron(iy, dxx) + kron(dyy, ix);

    s.f.resize(m);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double x = (i + 1) * s.hx;
            const double y = (j + 1) * s.hy;
            s.f(i + static_cast<Eigen::Index>(j) * nx) = f0 * std::cos(x * y) * std::sin(std::numbers::pi * x);
        }

    TdsProblem& p = s.problem;
    p.tau = tau;
    p.a0 = Matrix::Zero(n, n);
    p.a0.topRightCorner(m, m).setIdentity();
    p.a0.bottomLeftCorner(m, m) = s.laplacian;
    p.a0.bottomRightCorner(m, m) = -Matrix::Identity(m, m);

    p.a1 = Matrix::Zero(n, n);
    p.a1.bottomLeftCorner(m, m) = s.f.asDiagonal() * kron(iy, s.dx);

    Matrix b0 = Matrix::Zero(n, 1);
    b0.topRows(m).setOnes();
    p.b0 = std::move(b0);

    if (with_output) {
        Matrix c0 = Matrix::Zero(1, n);
        const Eigen::Index ic = (nx + 1) / 2 - 1;
        const Eigen::Index jc = (ny + 1) / 2 - 1;
        c0(0, ic + jc * nx) = 1.0; // e_{(ny+1)/2} (x) e_{(nx+1)/2}
        p.w = c0.transpose() * c0;
        p.c0 = std::move(c0);
    } else {
        p.w = Matrix::Identity(n, n);
    }
    return s;
}

struct RandomProblemOptions
{
    double a1_scale = 1.0;      ///< ||A1||_2 target
    double margin = 1.0;        ///< stability margin beyond ||A1||_2
    double tau = 1.0;
};

/// Random system that is stable for every delay: A0 = G - shift I with the
/// shift chosen so that the logarithmic norm mu_2(A0) = -(margin + ||A1||_2).
/// W = B B^T + I.
inline TdsProblem random_stable_problem(std::mt19937_64& rng, Eigen::Index n, const RandomProblemOptions& opt = {})
{
    std::normal_distribution<double> dist;
    const auto draw = [&](Eigen::Index r, Eigen::Index c) {
        Matrix a(r, c);
        for (Eigen::Index j = 0; j < c; ++j)
            for (Eigen::Index i = 0; i < r; ++i) a(i, j) = dist(rng);
        return a;
    };
    TdsProblem p;
    p.tau = opt.tau;
    const Matrix g = draw(n, n);
    Matrix a1 = draw(n, n);
    const double a1n = spectral_norm(a1);
    p.a1 = a1n > 0.0 ? Matrix(a1 * (opt.a1_scale / a1n)) : a1;

    const Matrix sym = 0.5 * (g + g.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    const double mu = es.eigenvalues().maxCoeff();
    p.a0 = g - (mu + opt.margin + opt.a1_scale) * Matrix::Identity(n, n);

    const Matrix b = draw(n, n);
    p.w = b * b.transpose() + Matrix::Identity(n, n);
    p.w = 0.5 * (p.w + p.w.transpose());
    return p;
}

} // namespace dlyap
