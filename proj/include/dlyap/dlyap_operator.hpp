#pragma once

// The linear operator whose equation L_c(X) = -W has X = U(tau/2) as its
// unique solution (for stable systems and any c != 0):
//
//   L_c(X) = Z2^T (A0 - cI) + (A0^T + cI) Z2 + Z1^T A1 + A1^T Z1,
//
// with Z1, Z2 evaluated at tau/2 after propagating from X.

#include "dlyap/error.hpp"
#include "dlyap/linalg.hpp"
#include "dlyap/propagation.hpp"

#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace dlyap {

struct TdsProblem
{
    Matrix a0;
    Matrix a1;
    double tau = 1.0;
    Matrix w;
    std::optional<Matrix> b0; ///< n x m input matrix, carried along but unused by the solver
    std::optional<Matrix> c0; ///< p x n output matrix

    [[nodiscard]] Eigen::Index n() const { return a0.rows(); }

    void validate() const
    {
        require_square(a0, "A0");
        require_same_shape(a0, a1, "A0 vs A1");
        require_same_shape(a0, w, "A0 vs W");
        require_finite(a0, "A0");
        require_finite(a1, "A1");
        require_finite(w, "W");
        if (!(tau >= 0.0) || !std::isfinite(tau)) throw Error("bad-problem", "tau must be finite and >= 0");
        if ((w - w.transpose()).norm() > 1e-12 * w.norm())
            throw Error("bad-problem", "W must be symmetric");
        if (b0 && b0->rows() != n()) throw Error("shape-mismatch", "B0 must have n rows");
        if (c0 && c0->cols() != n()) throw Error("shape-mismatch", "C0 must have n columns");
    }
};

/// Immutable evaluation context for L_c: the problem, the shift c and the ODE
/// discretization. For the exact scheme the 2n^2 propagator is computed once.
class OperatorContext
{
public:
    OperatorContext(TdsProblem problem, double c, OdeConfig ode = {})
        : problem_(std::move(problem)), c_(c), ode_(ode)
    {
        problem_.validate();
        ode_.validate();
        if (!(c_ != 0.0) || !std::isfinite(c_)) throw Error("bad-config", "shift c must be finite and nonzero");
        coeffs_ = std::make_shared<const Coefficients>(problem_.a0, problem_.a1);
        if (ode_.scheme == Scheme::exact) {
            const Matrix g = vectorized_generator(problem_.a0, problem_.a1, ode_.exact_cap);
            exact_ = std::make_shared<const Matrix>(expm(0.5 * problem_.tau * g));
        }
    }

    [[nodiscard]] const TdsProblem& problem() const { return problem_; }
    [[nodiscard]] double c() const { return c_; }
    [[nodiscard]] const OdeConfig& ode() const { return ode_; }
    [[nodiscard]] Eigen::Index n() const { return problem_.n(); }
    [[nodiscard]] const Coefficients& coefficients() const { return *coeffs_; }
    [[nodiscard]] const Matrix* exact_propagator() const { return exact_.get(); }

private:
    TdsProblem problem_;
    double c_;
    OdeConfig ode_;
    std::shared_ptr<const Coefficients> coeffs_;
    std::shared_ptr<const Matrix> exact_;
};

inline PropagationResult propagate(const OperatorContext& ctx, const Matrix& x)
{
    require_same_shape(ctx.problem().a0, x, "X");
    if (const Matrix* e = ctx.exact_propagator()) return apply_exact_propagator(*e, x);
    return rk4_propagate(ctx.coefficients(), x, ctx.problem().tau, ctx.ode());
}

/// Symmetric and antisymmetric parts of L_c(X) for given terminal values:
/// L_c(X) = sym + c * anti, sym = P + P^T with P = Z2^T A0 + Z1^T A1, anti = Z2 - Z2^T.
struct LcParts
{
    Matrix sym;
    Matrix anti;
};

inline LcParts lc_parts(const OperatorContext& ctx, const PropagationResult& z)
{
    const auto& co = ctx.coefficients();
    Matrix p(ctx.n(), ctx.n());
    Matrix tmp(ctx.n(), ctx.n());
    co.times_a0(z.z2_end.transpose(), p);
    co.times_a1(z.z1_end.transpose(), tmp);
    p += tmp;
    return {p + p.transpose(), z.z2_end - z.z2_end.transpose()};
}

inline Matrix lc_from_terminal(const OperatorContext& ctx, const PropagationResult& z)
{
    auto parts = lc_parts(ctx, z);
    return parts.sym + ctx.c() * parts.anti;
}

inline Matrix apply_Lc(const OperatorContext& ctx, const Matrix& x)
{
    return lc_from_terminal(ctx, propagate(ctx, x));
}

inline constexpr Eigen::Index kDenseAssemblyCap = 20;

/// Dense n^2 x n^2 matrix of L_c: column j is vec(L_c(unvec(e_j))).
inline Matrix assemble_dense_Lc(const OperatorContext& ctx, Eigen::Index cap = kDenseAssemblyCap)
{
    const Eigen::Index n = ctx.n();
    if (n > cap) throw Error("assembly-too-large", "n=" + std::to_string(n) + " exceeds cap " + std::to_string(cap));
    const Eigen::Index m = n * n;
    Matrix a(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        Matrix e = Matrix::Zero(n, n);
        e(j % n, j / n) = 1.0;
        a.col(j) = vec(apply_Lc(ctx, e));
    }
    return a;
}

struct USample
{
    double t;
    Matrix u;
};

/// U on a uniform grid of [-tau, tau] rebuilt from X = U(tau/2):
/// U(t) = Z2(tau/2 - t) on [0, tau/2), Z1(t - tau/2) on [tau/2, tau], U(-t)^T for t < 0.
/// With RK4 the sample times are snapped to the integration grid (multiples of
/// tau/(2N)) and the returned t is the snapped one.
inline std::vector<USample> reconstruct_U(const OperatorContext& ctx, const Matrix& x, int samples)
{
    if (samples < 3) throw Error("samples-too-few", "reconstruct_U needs at least 3 samples");
    require_same_shape(ctx.problem().a0, x, "X");
    const double tau = ctx.problem().tau;
    const double half = 0.5 * tau;

    std::vector<double> wanted(static_cast<std::size_t>(samples));
    for (int k = 0; k < samples; ++k) wanted[static_cast<std::size_t>(k)] = -tau + 2.0 * tau * k / (samples - 1);

    std::vector<USample> out;
    out.reserve(wanted.size());

    if (ctx.exact_propagator() != nullptr) {
        const Matrix g = vectorized_generator(ctx.problem().a0, ctx.problem().a1, ctx.ode().exact_cap);
        for (const double t : wanted) {
            const double at = std::abs(t);
            const bool first_half = at < half;
            const double s = first_half ? half - at : at - half;
            const auto z = apply_exact_propagator(expm(s * g), x);
            Matrix u = first_half ? z.z2_end : z.z1_end;
            if (t < 0.0) u.transposeInPlace();
            out.push_back({t, std::move(u)});
        }
        return out;
    }

    // Index k on [0, tau] means time k*h, h = tau/(2N); k < N reads Z2 at step N-k,
    // k >= N reads Z1 at step k-N.
    const int steps = ctx.ode().steps;
    const double h = tau > 0.0 ? half / steps : 0.0;
    std::vector<int> grid_index(wanted.size(), 0);
    std::set<int> z1_steps;
    std::set<int> z2_steps;
    for (std::size_t i = 0; i < wanted.size(); ++i) {
        const int k = h > 0.0 ? static_cast<int>(std::lround(std::abs(wanted[i]) / h)) : 0;
        grid_index[i] = std::min(k, 2 * steps);
        if (grid_index[i] < steps)
            z2_steps.insert(steps - grid_index[i]);
        else
            z1_steps.insert(grid_index[i] - steps);
    }

    std::vector<Matrix> z1_at(static_cast<std::size_t>(steps) + 1);
    std::vector<Matrix> z2_at(static_cast<std::size_t>(steps) + 1);
    rk4_propagate_observed(ctx.coefficients(), x, tau, ctx.ode(), [&](int k, const Matrix& z1, const Matrix& z2) {
        if (z1_steps.contains(k)) z1_at[static_cast<std::size_t>(k)] = z1;
        if (z2_steps.contains(k)) z2_at[static_cast<std::size_t>(k)] = z2;
    });

    for (std::size_t i = 0; i < wanted.size(); ++i) {
        const int k = grid_index[i];
        Matrix u = k < steps ? z2_at[static_cast<std::size_t>(steps - k)] : z1_at[static_cast<std::size_t>(k - steps)];
        const double t_abs = k * h;
        double t = wanted[i] < 0.0 ? -t_abs : t_abs;
        if (wanted[i] < 0.0) u.transposeInPlace();
        out.push_back({t, std::move(u)});
    }
    return out;
}

struct BoundaryResiduals
{
    double r_alg; ///< ||W + U0 A0 + A0^T U0 + Utau^T A1 + A1^T Utau||_F / ||W||_F
    double r_sym; ///< ||U0 - U0^T||_F / max(1, ||U0||_F)
};

inline BoundaryResiduals dlyap_residual(const TdsProblem& problem, const Matrix& u0, const Matrix& utau)
{
    require_same_shape(problem.a0, u0, "U(0)");
    require_same_shape(problem.a0, utau, "U(tau)");
    const Matrix& a0 = problem.a0;
    const Matrix& a1 = problem.a1;
    const Matrix r = problem.w + u0 * a0 + a0.transpose() * u0 + utau.transpose() * a1 + a1.transpose() * utau;
    const double wn = problem.w.norm();
    return {wn > 0.0 ? r.norm() / wn : r.norm(), (u0 - u0.transpose()).norm() / std::max(1.0, u0.norm())};
}

/// Solution of the standard Lyapunov equation A^T U + U A = -W by a dense
/// Kronecker solve; small n only.
inline Matrix lyapunov_kron(const Matrix& a, const Matrix& w)
{
    require_square(a, "A");
    require_same_shape(a, w, "A vs W");
    const Eigen::Index n = a.rows();
    const Matrix id = Matrix::Identity(n, n);
    const Matrix k = kron(id, a.transpose()) + kron(a.transpose(), id);
    return unvec(lu_solve(k, -vec(w)), n);
}

} // namespace dlyap
