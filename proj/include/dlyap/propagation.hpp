#pragma once

// Coupled matrix initial-value problem
//
//   Z1' =  Z1 A0 + Z2^T A1
//   Z2' = -Z1^T A1 - Z2 A0,       Z1(0) = Z2(0) = X,
//
// integrated from 0 to tau/2. Z1(t) = U(tau/2 + t) and Z2(t) = U(tau/2 - t),
// so the two branches together cover the delay Lyapunov matrix on [0, tau].

#include "dlyap/error.hpp"
#include "dlyap/linalg.hpp"

#include <Eigen/Sparse>

#include <cstddef>
#include <optional>
#include <string>
#include <utility>

namespace dlyap {

enum class Scheme {
    rk4,   ///< classic 4-stage Runge-Kutta on a uniform grid
    exact, ///< expm of the 2n^2 x 2n^2 generator; small n only
};

inline std::string to_string(Scheme s) { return s == Scheme::rk4 ? "rk4" : "exact"; }

inline Scheme scheme_from_string(const std::string& s)
{
    if (s == "rk4") return Scheme::rk4;
    if (s == "exact") return Scheme::exact;
    throw Error("bad-config", "unknown ODE scheme '" + s + "'");
}

struct OdeConfig
{
    int steps = 500; ///< N uniform steps on [0, tau/2]
    Scheme scheme = Scheme::rk4;
    Eigen::Index exact_cap = 12; ///< largest n accepted by the exact scheme

    void validate() const
    {
        if (steps < 1) throw Error("bad-config", "ODE step count must be >= 1");
        if (exact_cap < 1) throw Error("bad-config", "exact_cap must be >= 1");
    }
};

struct PropagationResult
{
    Matrix z1_end; ///< Z1(tau/2) = U(tau)
    Matrix z2_end; ///< Z2(tau/2) = U(0)
};

/// A0 and A1 with optional sparse copies. Products with the coefficients go
/// through the sparse copy when one exists; the PDDE matrices are ~1% dense.
class Coefficients
{
public:
    using Sparse = Eigen::SparseMatrix<double>;

    static constexpr double kDefaultSparseDensity = 0.25;

    Coefficients() = default;

    Coefficients(Matrix a0, Matrix a1, double sparse_density = kDefaultSparseDensity)
        : a0_(std::move(a0)), a1_(std::move(a1))
    {
        require_square(a0_, "A0");
        require_same_shape(a0_, a1_, "A0 vs A1");
        a0s_ = maybe_sparse(a0_, sparse_density);
        a1s_ = maybe_sparse(a1_, sparse_density);
    }

    [[nodiscard]] const Matrix& a0() const { return a0_; }
    [[nodiscard]] const Matrix& a1() const { return a1_; }
    [[nodiscard]] Eigen::Index n() const { return a0_.rows(); }
    [[nodiscard]] bool a0_is_sparse() const { return a0s_.has_value(); }
    [[nodiscard]] bool a1_is_sparse() const { return a1s_.has_value(); }

    /// out = lhs * A0
    template <class Lhs>
    void times_a0(const Lhs& lhs, Matrix& out) const
    {
        if (a0s_)
            out.noalias() = lhs * *a0s_;
        else
            out.noalias() = lhs * a0_;
    }

    /// out = lhs * A1
    template <class Lhs>
    void times_a1(const Lhs& lhs, Matrix& out) const
    {
        if (a1s_)
            out.noalias() = lhs * *a1s_;
        else
            out.noalias() = lhs * a1_;
    }

private:
    static std::optional<Sparse> maybe_sparse(const Matrix& a, double density)
    {
        if (a.size() == 0) return std::nullopt;
        const auto nnz = static_cast<double>((a.array() != 0.0).count());
        if (nnz > density * static_cast<double>(a.size())) return std::nullopt;
        Sparse s = a.sparseView();
        s.makeCompressed();
        return s;
    }

    Matrix a0_;
    Matrix a1_;
    std::optional<Sparse> a0s_;
    std::optional<Sparse> a1s_;
};

/// Right-hand side of the coupled system: (Z1 A0 + Z2^T A1, -Z1^T A1 - Z2 A0).
inline std::pair<Matrix, Matrix> ode_rhs(const Matrix& z1, const Matrix& z2, const Matrix& a0, const Matrix& a1)
{
    require_square(a0, "A0");
    for (const Matrix* m : {&z1, &z2, &a1}) require_same_shape(a0, *m, "ode_rhs operand");
    return {z1 * a0 + z2.transpose() * a1, -z1.transpose() * a1 - z2 * a0};
}

namespace detail {

/// Scratch buffers for one RK4 integration; all n x n.
struct Rk4Workspace
{
    explicit Rk4Workspace(Eigen::Index n)
    {
        for (Matrix* m : {&k1a, &k1b, &k2a, &k2b, &k3a, &k3b, &k4a, &k4b, &ya, &yb, &tmp})
            m->resize(n, n);
    }
    Matrix k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b, ya, yb, tmp;
};

inline void rhs(const Coefficients& co, const Matrix& z1, const Matrix& z2, Matrix& d1, Matrix& d2, Matrix& tmp)
{
    co.times_a0(z1, d1);
    co.times_a1(z2.transpose(), tmp);
    d1 += tmp;
    co.times_a0(z2, d2);
    co.times_a1(z1.transpose(), tmp);
    d2 += tmp;
    d2 = -d2;
}

} // namespace detail

/// Classic RK4 with h = (tau/2)/N. `observe(k, Z1, Z2)` is called for k = 0..N
/// with the state after k steps. tau = 0 means no propagation at all.
template <class Observer>
PropagationResult rk4_propagate_observed(const Coefficients& co, const Matrix& x, double tau, const OdeConfig& cfg,
                                         Observer&& observe)
{
    cfg.validate();
    if (!(tau >= 0.0)) throw Error("bad-config", "tau must be >= 0");
    require_same_shape(co.a0(), x, "initial value X");

    Matrix z1 = x;
    Matrix z2 = x;
    observe(0, z1, z2);
    if (tau == 0.0) {
        for (int k = 1; k <= cfg.steps; ++k) observe(k, z1, z2);
        return {std::move(z1), std::move(z2)};
    }

    const double h = 0.5 * tau / cfg.steps;
    detail::Rk4Workspace w(x.rows());
    for (int k = 1; k <= cfg.steps; ++k) {
        detail::rhs(co, z1, z2, w.k1a, w.k1b, w.tmp);
        w.ya = z1 + (0.5 * h) * w.k1a;
        w.yb = z2 + (0.5 * h) * w.k1b;
        detail::rhs(co, w.ya, w.yb, w.k2a, w.k2b, w.tmp);
        w.ya = z1 + (0.5 * h) * w.k2a;
        w.yb = z2 + (0.5 * h) * w.k2b;
        detail::rhs(co, w.ya, w.yb, w.k3a, w.k3b, w.tmp);
        w.ya = z1 + h * w.k3a;
        w.yb = z2 + h * w.k3b;
        detail::rhs(co, w.ya, w.yb, w.k4a, w.k4b, w.tmp);
        z1 += (h / 6.0) * (w.k1a + 2.0 * w.k2a + 2.0 * w.k3a + w.k4a);
        z2 += (h / 6.0) * (w.k1b + 2.0 * w.k2b + 2.0 * w.k3b + w.k4b);
        observe(k, z1, z2);
    }
    return {std::move(z1), std::move(z2)};
}

inline PropagationResult rk4_propagate(const Coefficients& co, const Matrix& x, double tau, const OdeConfig& cfg)
{
    return rk4_propagate_observed(co, x, tau, cfg, [](int, const Matrix&, const Matrix&) {});
}

inline PropagationResult rk4_propagate(const Matrix& a0, const Matrix& a1, const Matrix& x, double tau,
                                       const OdeConfig& cfg)
{
    return rk4_propagate(Coefficients(a0, a1), x, tau, cfg);
}

/// Generator of the vectorized system acting on [vec Z1; vec Z2^T]:
/// [A0^T (x) I, A1^T (x) I; -I (x) A1^T, -I (x) A0^T].
inline Matrix vectorized_generator(const Matrix& a0, const Matrix& a1, Eigen::Index cap = 12)
{
    require_square(a0, "A0");
    require_same_shape(a0, a1, "A0 vs A1");
    const Eigen::Index n = a0.rows();
    if (n > cap)
        throw Error("oracle-too-large", "n=" + std::to_string(n) + " exceeds exact-propagation cap " +
                                            std::to_string(cap));
    const Matrix id = Matrix::Identity(n, n);
    const Eigen::Index m = n * n;
    Matrix g(2 * m, 2 * m);
    g.topLeftCorner(m, m) = kron(a0.transpose(), id);
    g.topRightCorner(m, m) = kron(a1.transpose(), id);
    g.bottomLeftCorner(m, m) = -kron(id, a1.transpose());
    g.bottomRightCorner(m, m) = -kron(id, a0.transpose());
    return g;
}

/// Applies a precomputed exp(t * generator) to the initial value X.
inline PropagationResult apply_exact_propagator(const Matrix& propagator, const Matrix& x)
{
    const Eigen::Index n = x.rows();
    const Eigen::Index m = n * n;
    if (propagator.rows() != 2 * m) throw Error("shape-mismatch", "propagator does not match X");
    Vector v(2 * m);
    v.head(m) = vec(x);
    v.tail(m) = vec(x.transpose());
    const Vector out = propagator * v;
    return {unvec(out.head(m), n), unvec(out.tail(m), n).transpose()};
}

inline PropagationResult exact_propagate_small(const Matrix& a0, const Matrix& a1, const Matrix& x, double tau,
                                               Eigen::Index cap = 12)
{
    if (!(tau >= 0.0)) throw Error("bad-config", "tau must be >= 0");
    require_same_shape(a0, x, "initial value X");
    const Matrix g = vectorized_generator(a0, a1, cap);
    return apply_exact_propagator(expm(0.5 * tau * g), x);
}

} // namespace dlyap
