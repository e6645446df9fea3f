#pragma once

// Matrix-free Krylov solvers on the space of n x n matrices with the trace
// inner product <X, Y> = sum_ij X_ij Y_ij. Left preconditioning: the solvers
// run on P(op(.)) with right-hand side P(b) and measure convergence in that
// preconditioned residual. The initial guess is always zero.

#include "dlyap/error.hpp"
#include "dlyap/linalg.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace dlyap {

enum class KrylovMethod { gmres, bicgstab };

inline std::string to_string(KrylovMethod m) { return m == KrylovMethod::gmres ? "gmres" : "bicgstab"; }

inline KrylovMethod krylov_method_from_string(const std::string& s)
{
    if (s == "gmres") return KrylovMethod::gmres;
    if (s == "bicgstab") return KrylovMethod::bicgstab;
    throw Error("bad-config", "unknown Krylov method '" + s + "'");
}

struct KrylovConfig
{
    KrylovMethod method = KrylovMethod::gmres;
    double tol = 1e-12;
    int maxit = 100;
    bool left_precond = true;

    void validate() const
    {
        if (!(tol > 0.0 && tol < 1.0)) throw Error("bad-config", "Krylov tolerance must lie in (0, 1)");
        if (maxit < 1) throw Error("bad-config", "maxit must be >= 1");
    }
};

struct Timings
{
    double setup_seconds = 0.0;
    double apply_seconds = 0.0;   ///< operator applications
    double precond_seconds = 0.0; ///< preconditioner applications
};

struct SolveReport
{
    Matrix x;
    std::vector<double> residual_history; ///< relative (preconditioned) residual, entry 0 is the initial one
    std::vector<double> cumulative_seconds;
    int iterations = 0;
    bool converged = false;
    std::string status = "not-run"; ///< "converged", "krylov-maxit", "krylov-breakdown", "bicgstab-breakdown"
    Timings timings;
    double r_alg = std::nan("");
    double r_sym = std::nan("");
    double basis_coupling = 0.0; ///< GMRES: max |<v_i, v_j>|, i != j, over the Arnoldi basis
};

inline double trace_inner(const Matrix& a, const Matrix& b) { return a.cwiseProduct(b).sum(); }

using MatrixMap = std::function<Matrix(const Matrix&)>;

inline Matrix identity_map(const Matrix& x) { return x; }

namespace detail {

class Stopwatch
{
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    [[nodiscard]] double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

inline void givens(double a, double b, double& c, double& s)
{
    if (b == 0.0) {
        c = 1.0;
        s = 0.0;
    } else if (std::abs(b) > std::abs(a)) {
        const double t = a / b;
        s = 1.0 / std::sqrt(1.0 + t * t);
        c = s * t;
    } else {
        const double t = b / a;
        c = 1.0 / std::sqrt(1.0 + t * t);
        s = c * t;
    }
}

} // namespace detail

/// Full (non-restarted) GMRES: Arnoldi with two modified Gram-Schmidt passes, Givens rotations.
template <class Op, class Prec>
SolveReport gmres(Op&& op, const Matrix& b, Prec&& precond, const KrylovConfig& cfg)
{
    cfg.validate();
    detail::Stopwatch clock;
    SolveReport rep;
    const auto pre = [&](const Matrix& z) -> Matrix {
        if (cfg.left_precond) return precond(z);
        return z;
    };

    const Matrix r0 = pre(b);
    const double beta = r0.norm();
    rep.x = Matrix::Zero(b.rows(), b.cols());
    rep.residual_history.push_back(beta > 0.0 ? 1.0 : 0.0);
    rep.cumulative_seconds.push_back(clock.seconds());
    if (beta == 0.0) {
        rep.converged = true;
        rep.status = "converged";
        return rep;
    }

    const auto m = static_cast<std::size_t>(cfg.maxit);
    std::vector<Matrix> basis{r0 / beta};
    std::vector<std::vector<double>> h; // h[k]: column k of the rotated Hessenberg matrix
    std::vector<double> cs, sn;
    std::vector<double> g{beta};

    const auto finish = [&](std::size_t k) {
        // back substitution with the k x k triangular factor
        std::vector<double> y(k, 0.0);
        for (std::size_t i = k; i-- > 0;) {
            double s = g[i];
            for (std::size_t j = i + 1; j < k; ++j) s -= h[j][i] * y[j];
            y[i] = s / h[i][i];
        }
        for (std::size_t j = 0; j < k; ++j) rep.x += y[j] * basis[j];
        double coupling = 0.0;
        for (std::size_t i = 0; i < basis.size(); ++i)
            for (std::size_t j = i + 1; j < basis.size(); ++j)
                coupling = std::max(coupling, std::abs(trace_inner(basis[i], basis[j])));
        rep.basis_coupling = coupling;
    };

    for (std::size_t k = 0; k < m; ++k) {
        Matrix w = pre(op(basis[k]));
        const double w_norm0 = w.norm();
        std::vector<double> col(k + 2, 0.0);
        for (int pass = 0; pass < 2; ++pass) // modified Gram-Schmidt, applied twice
            for (std::size_t j = 0; j <= k; ++j) {
                const double hj = trace_inner(w, basis[j]);
                col[j] += hj;
                w -= hj * basis[j];
            }
        const double hnext = w.norm();
        col[k + 1] = hnext;

        for (std::size_t j = 0; j < k; ++j) {
            const double t = cs[j] * col[j] + sn[j] * col[j + 1];
            col[j + 1] = -sn[j] * col[j] + cs[j] * col[j + 1];
            col[j] = t;
        }
        double c = 1.0, s = 0.0;
        detail::givens(col[k], col[k + 1], c, s);
        col[k] = c * col[k] + s * col[k + 1];
        col[k + 1] = 0.0;
        cs.push_back(c);
        sn.push_back(s);
        g.push_back(-s * g[k]);
        g[k] *= c;
        h.push_back(std::move(col));

        const double rel = std::abs(g[k + 1]) / beta;
        rep.iterations = static_cast<int>(k) + 1;
        rep.residual_history.push_back(rel);
        rep.cumulative_seconds.push_back(clock.seconds());

        if (rel <= cfg.tol) {
            finish(k + 1);
            rep.converged = true;
            rep.status = "converged";
            return rep;
        }
        // Zero Arnoldi vector without meeting the tolerance: the Krylov space is
        // invariant but the least-squares residual did not vanish.
        if (hnext <= 1e-14 * std::max(w_norm0, 1e-300) || h.back()[k] == 0.0) {
            finish(k + 1);
            rep.status = "krylov-breakdown";
            return rep;
        }
        basis.push_back(w / hnext);
    }
    finish(m);
    rep.status = "krylov-maxit";
    return rep;
}

template <class Op>
SolveReport gmres(Op&& op, const Matrix& b, const KrylovConfig& cfg)
{
    KrylovConfig c = cfg;
    c.left_precond = false;
    return gmres(std::forward<Op>(op), b, identity_map, c);
}

/// BiCGStab on the left-preconditioned system; one iteration = two operator applications.
template <class Op, class Prec>
SolveReport bicgstab(Op&& op, const Matrix& b, Prec&& precond, const KrylovConfig& cfg)
{
    cfg.validate();
    detail::Stopwatch clock;
    SolveReport rep;
    const auto pre = [&](const Matrix& z) -> Matrix {
        if (cfg.left_precond) return precond(z);
        return z;
    };
    const auto aop = [&](const Matrix& z) -> Matrix { return pre(op(z)); };

    Matrix r = pre(b);
    const double bnorm = r.norm();
    rep.x = Matrix::Zero(b.rows(), b.cols());
    rep.residual_history.push_back(bnorm > 0.0 ? 1.0 : 0.0);
    rep.cumulative_seconds.push_back(clock.seconds());
    if (bnorm == 0.0) {
        rep.converged = true;
        rep.status = "converged";
        return rep;
    }

    const Matrix rhat = r;
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    Matrix v = Matrix::Zero(b.rows(), b.cols());
    Matrix p = v;
    const double tiny = 1e-300;

    for (int k = 0; k < cfg.maxit; ++k) {
        const double rho_new = trace_inner(rhat, r);
        if (std::abs(rho_new) <= 1e-30 * bnorm * bnorm) {
            rep.status = "bicgstab-breakdown";
            return rep;
        }
        const double beta = (rho_new / rho) * (alpha / omega);
        p = r + beta * (p - omega * v);
        v = aop(p);
        const double denom = trace_inner(rhat, v);
        if (std::abs(denom) <= tiny) {
            rep.status = "bicgstab-breakdown";
            return rep;
        }
        alpha = rho_new / denom;
        Matrix s = r - alpha * v;
        rep.iterations = k + 1;
        if (s.norm() / bnorm <= cfg.tol) {
            rep.x += alpha * p;
            rep.residual_history.push_back(s.norm() / bnorm);
            rep.cumulative_seconds.push_back(clock.seconds());
            rep.converged = true;
            rep.status = "converged";
            return rep;
        }
        const Matrix t = aop(s);
        const double tt = trace_inner(t, t);
        omega = tt > tiny ? trace_inner(t, s) / tt : 0.0;
        rep.x += alpha * p + omega * s;
        r = s - omega * t;
        rho = rho_new;
        const double rel = r.norm() / bnorm;
        rep.residual_history.push_back(rel);
        rep.cumulative_seconds.push_back(clock.seconds());
        if (rel <= cfg.tol) {
            rep.converged = true;
            rep.status = "converged";
            return rep;
        }
        if (std::abs(omega) <= 1e-30) {
            rep.status = "bicgstab-breakdown";
            return rep;
        }
    }
    rep.status = "krylov-maxit";
    return rep;
}

template <class Op, class Prec>
SolveReport krylov_solve(Op&& op, const Matrix& b, Prec&& precond, const KrylovConfig& cfg)
{
    if (cfg.method == KrylovMethod::gmres) return gmres(std::forward<Op>(op), b, std::forward<Prec>(precond), cfg);
    return bicgstab(std::forward<Op>(op), b, std::forward<Prec>(precond), cfg);
}

/// Convergence history as CSV: iter,relres,cumulative_seconds.
inline void write_history_csv(std::ostream& out, const SolveReport& rep, bool with_timings = true)
{
    out << "iter,relres,cumulative_seconds\n";
    char buf[96];
    for (std::size_t i = 0; i < rep.residual_history.size(); ++i) {
        const double secs = with_timings && i < rep.cumulative_seconds.size() ? rep.cumulative_seconds[i] : 0.0;
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.6f\n", i, rep.residual_history[i], secs);
        out << buf;
    }
}

} // namespace dlyap
