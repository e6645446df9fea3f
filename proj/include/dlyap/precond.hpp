#pragma once

// Preconditioner built from L_c with A1 replaced by zero. Then Z2(tau/2) = X E_minus
// with E_minus the propagator of Z2' = -Z2 A0, and
//
//   L~_c(X)      = T(X E_minus),  T(Y) = (A0^T + cI) Y + Y^T (A0 - cI),
//   L~_c^{-1}(Z) = T^{-1}(Z) E_plus,  E_plus = E_minus^{-1}.
//
// T^{-1} is a T-Sylvester solve with M = A0^T + cI, N = A0 - cI; its pencil is
// factored once and reused.

#include "dlyap/dlyap_operator.hpp"
#include "dlyap/error.hpp"
#include "dlyap/linalg.hpp"
#include "dlyap/tsylv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace dlyap {

struct PrecondFactors
{
    TsylvPencil pencil; ///< M = A0^T + cI, N = A0 - cI
    Matrix e_plus;      ///< expm(tau A0 / 2), or the inverse RK4 propagator
    Matrix e_minus;     ///< inverse of e_plus: Z2(tau/2) = X e_minus when A1 = 0
    double c = 1.0;
    double tau = 0.0;
};

namespace detail {

inline void check_precond_hypotheses(const Matrix& a0, double c)
{
    require_square(a0, "A0");
    if (!(c != 0.0)) throw Error("bad-config", "shift c must be nonzero");
    if (!hamiltonian_pairing_check(a0))
        throw Error("precond-unsolvable", "A0 has a Hamiltonian eigenpairing; T is singular");
    double dist = std::numeric_limits<double>::infinity();
    for (const auto& l : eigenvalues(a0)) dist = std::min(dist, std::abs(l - c));
    if (!(dist > 1e-10 * std::max(1.0, a0.norm())))
        throw Error("precond-shift-degenerate", "c=" + std::to_string(c) + " is an eigenvalue of A0");
}

inline TsylvPencil factor_T(const Matrix& a0, double c)
{
    const Matrix id = Matrix::Identity(a0.rows(), a0.cols());
    return tsylv_factor(a0.transpose() + c * id, a0 - c * id);
}

/// One RK4 step for Z' = Z B is Z -> Z p(hB), p(z) = 1 + z + z^2/2 + z^3/6 + z^4/24.
inline Matrix rk4_step_matrix(const Matrix& b, double h)
{
    const Eigen::Index n = b.rows();
    const Matrix hb = h * b;
    Matrix acc = Matrix::Identity(n, n) + hb / 4.0;
    acc = Matrix::Identity(n, n) + (hb * acc) / 3.0;
    acc = Matrix::Identity(n, n) + (hb * acc) / 2.0;
    return Matrix::Identity(n, n) + hb * acc;
}

inline Matrix matrix_power(Matrix base, int exponent)
{
    Matrix result = Matrix::Identity(base.rows(), base.cols());
    while (exponent > 0) {
        if (exponent & 1) result = result * base;
        exponent >>= 1;
        if (exponent > 0) base = base * base;
    }
    return result;
}

} // namespace detail

/// Factors for the continuous preconditioner, E_plus = expm(tau A0 / 2).
inline PrecondFactors precond_setup(const Matrix& a0, double c, double tau)
{
    detail::check_precond_hypotheses(a0, c);
    if (!(tau >= 0.0)) throw Error("bad-config", "tau must be >= 0");
    PrecondFactors f;
    f.pencil = detail::factor_T(a0, c);
    f.e_plus = expm(0.5 * tau * a0);
    f.e_minus = expm(-0.5 * tau * a0);
    f.c = c;
    f.tau = tau;
    return f;
}

/// Factors matched to the operator's discretization: with RK4 the propagator
/// of Z2' = -Z2 A0 is p(-h A0)^N, so the preconditioner inverts the discrete
/// operator exactly when A1 = 0.
inline PrecondFactors precond_setup(const OperatorContext& ctx)
{
    const auto& pr = ctx.problem();
    if (ctx.ode().scheme == Scheme::exact) return precond_setup(pr.a0, ctx.c(), pr.tau);

    detail::check_precond_hypotheses(pr.a0, ctx.c());
    PrecondFactors f;
    f.pencil = detail::factor_T(pr.a0, ctx.c());
    f.c = ctx.c();
    f.tau = pr.tau;
    const Eigen::Index n = pr.n();
    if (pr.tau == 0.0) {
        f.e_plus = Matrix::Identity(n, n);
        f.e_minus = f.e_plus;
        return f;
    }
    const double h = 0.5 * pr.tau / ctx.ode().steps;
    const Matrix step = detail::rk4_step_matrix(-pr.a0, h);
    f.e_minus = detail::matrix_power(step, ctx.ode().steps);
    f.e_plus = detail::matrix_power(lu_solve(step, Matrix::Identity(n, n)), ctx.ode().steps);
    return f;
}

/// T^{-1}(Z), the T-Sylvester part of the preconditioner.
inline Matrix apply_T_inverse(const PrecondFactors& f, const Matrix& z) { return tsylv_apply(f.pencil, z); }

inline Matrix precond_apply(const PrecondFactors& f, const Matrix& z)
{
    return apply_T_inverse(f, z) * f.e_plus;
}

/// Forward operator L~_c(X) = T(X E_minus).
inline Matrix tilde_Lc(const PrecondFactors& f, const Matrix& x)
{
    const Matrix y = x * f.e_minus;
    return f.pencil.m * y + y.transpose() * f.pencil.n;
}

inline Matrix random_unit_frobenius(std::mt19937_64& rng, Eigen::Index n)
{
    std::normal_distribution<double> dist;
    Matrix x(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) x(i, j) = dist(rng);
    return x / x.norm();
}

/// max over random unit-Frobenius X of ||L~^{-1}(L(X)) - X||_F: a lower bound
/// on the deviation of the preconditioned operator from the identity.
inline double precond_quality(const OperatorContext& ctx, const PrecondFactors& f, int trials = 20,
                              std::uint64_t seed = 20240607)
{
    if (trials < 1) throw Error("bad-config", "precond_quality needs trials >= 1");
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        const Matrix x = random_unit_frobenius(rng, ctx.n());
        worst = std::max(worst, (precond_apply(f, apply_Lc(ctx, x)) - x).norm());
    }
    return worst;
}

/// Dense matrix of X -> L~^{-1}(L(X)).
inline Matrix assemble_preconditioned(const OperatorContext& ctx, const PrecondFactors& f,
                                      Eigen::Index cap = kDenseAssemblyCap)
{
    const Eigen::Index n = ctx.n();
    if (n > cap) throw Error("assembly-too-large", "n=" + std::to_string(n) + " exceeds cap " + std::to_string(cap));
    const Eigen::Index m = n * n;
    Matrix a(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        Matrix e = Matrix::Zero(n, n);
        e(j % n, j / n) = 1.0;
        a.col(j) = vec(precond_apply(f, apply_Lc(ctx, e)));
    }
    return a;
}

inline std::vector<Complex> precond_spectrum(const OperatorContext& ctx, const PrecondFactors& f,
                                             Eigen::Index cap = kDenseAssemblyCap)
{
    return eigenvalues(assemble_preconditioned(ctx, f, cap));
}

/// ||T^{-1}||_2 on the vectorized space, from the dense Kronecker form of T.
inline double T_inverse_norm(const PrecondFactors& f, Eigen::Index cap = 8)
{
    const Eigen::Index n = f.pencil.size();
    if (n > cap) throw Error("assembly-too-large", "T^{-1} norm is only measured for n <= " + std::to_string(cap));
    const Matrix id = Matrix::Identity(n, n);
    const Matrix t = kron(id, f.pencil.m) + kron(f.pencil.n.transpose(), id) * commutation_matrix(n);
    return spectral_norm(lu_solve(t, Matrix::Identity(n * n, n * n)));
}

} // namespace dlyap
