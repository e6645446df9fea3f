#pragma once

// Real T-Sylvester equation M X + X^T N = C.
//
// With the generalized Schur form Q^* M Z = TM, Q^* N^T Z = TN the equation
// becomes TM Y + Y^T TN^T = Q^* C conj(Q) for Y = Z^* X conj(Q), i.e.
// X = Z Y Q^T. Entry (i,j) of the triangular equation reads
//
//   sum_{k>=i} TM(i,k) Y(k,j) + sum_{k>=j} Y(k,i) TN(j,k) = Ct(i,j),
//
// so (Y(i,j), Y(j,i)) solve a 2x2 system with matrix
// [[TM(i,i), TN(j,j)], [TN(i,i), TM(j,j)]] once every Y(k,j), k > i and
// Y(k,i), k > j are known. Sweeping j = n-1..0 and i = j..0 respects that.

#include "dlyap/error.hpp"
#include "dlyap/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace dlyap {

/// Factored pencil M - lambda N^T, reusable for any number of right-hand sides.
struct TsylvPencil
{
    Matrix m;
    Matrix n;
    PencilSchur schur;
    std::vector<Complex> mu;

    // Transposed triangular factors, so the substitution reads contiguous columns.
    CMatrix tm_t;
    CMatrix tn_t;

    [[nodiscard]] Eigen::Index size() const { return m.rows(); }
};

inline constexpr double kPairDeterminantTol = 1e-12;

/// Factors the pencil and checks every pairwise 2x2 determinant of the
/// substitution (and the 1x1 diagonal coefficients).
inline TsylvPencil tsylv_factor(const Matrix& m, const Matrix& n)
{
    require_square(m, "T-Sylvester M");
    require_same_shape(m, n, "T-Sylvester M vs N");
    TsylvPencil p;
    p.m = m;
    p.n = n;
    p.schur = generalized_schur_pencil(m, n.transpose());
    p.mu = p.schur.eigenvalues();
    p.tm_t = p.schur.tm.transpose();
    p.tn_t = p.schur.tn.transpose();

    const auto& tm = p.schur.tm;
    const auto& tn = p.schur.tn;
    const Eigen::Index sz = m.rows();
    for (Eigen::Index j = 0; j < sz; ++j) {
        const double diag = std::abs(tm(j, j) + tn(j, j));
        if (!(diag >= kPairDeterminantTol * std::max(std::abs(tm(j, j)), std::abs(tn(j, j)))) || diag == 0.0)
            throw Error("tsylv-near-singular", "diagonal coefficient vanishes at index " + std::to_string(j));
        for (Eigen::Index i = 0; i < j; ++i) {
            const Complex mm = tm(i, i) * tm(j, j);
            const Complex nn = tn(i, i) * tn(j, j);
            const double det = std::abs(mm - nn);
            if (!(det >= kPairDeterminantTol * std::max(std::abs(mm), std::abs(nn))) || det == 0.0)
                throw Error("tsylv-near-singular",
                            "pair (" + std::to_string(i) + "," + std::to_string(j) + ") determinant " +
                                std::to_string(det));
        }
    }
    return p;
}

/// Solves TM Y + Y^T TN^T = ct for upper triangular TM, TN (in place on a copy).
inline CMatrix tsylv_triangular_solve(const TsylvPencil& p, const CMatrix& ct)
{
    const Eigen::Index sz = p.size();
    const auto& tm = p.schur.tm;
    const auto& tn = p.schur.tn;
    CMatrix y = CMatrix::Zero(sz, sz);

    // sum_k a[k] b[k] over k in [from, sz)
    const auto tail_dot = [sz](const auto& a, const auto& b, Eigen::Index from) -> Complex {
        if (from >= sz) return Complex(0.0);
        return a.segment(from, sz - from).cwiseProduct(b.segment(from, sz - from)).sum();
    };

    for (Eigen::Index j = sz - 1; j >= 0; --j) {
        for (Eigen::Index i = j; i >= 0; --i) {
            const Complex rij =
                ct(i, j) - tail_dot(p.tm_t.col(i), y.col(j), i + 1) - tail_dot(y.col(i), p.tn_t.col(j), j + 1);
            if (i == j) {
                y(i, i) = rij / (tm(i, i) + tn(i, i));
                continue;
            }
            const Complex rji =
                ct(j, i) - tail_dot(p.tm_t.col(j), y.col(i), j + 1) - tail_dot(y.col(j), p.tn_t.col(i), i + 1);
            const Complex a11 = tm(i, i);
            const Complex a12 = tn(j, j);
            const Complex a21 = tn(i, i);
            const Complex a22 = tm(j, j);
            const Complex det = a11 * a22 - a12 * a21;
            y(i, j) = (rij * a22 - a12 * rji) / det;
            y(j, i) = (a11 * rji - a21 * rij) / det;
        }
    }
    return y;
}

/// X for a factored pencil, before the realness check.
inline CMatrix tsylv_apply_complex(const TsylvPencil& p, const Matrix& c)
{
    require_same_shape(p.m, c, "T-Sylvester C");
    const auto& q = p.schur.q;
    const CMatrix ct = q.adjoint() * c.cast<Complex>() * q.conjugate();
    const CMatrix y = tsylv_triangular_solve(p, ct);
    return p.schur.z * y * q.transpose();
}

inline constexpr double kImagTol = 1e-9;

inline Matrix tsylv_apply(const TsylvPencil& p, const Matrix& c)
{
    return real_part_checked(tsylv_apply_complex(p, c), kImagTol, "tsylv-residual-fail");
}

inline double tsylv_residual(const Matrix& m, const Matrix& n, const Matrix& c, const Matrix& x)
{
    return (m * x + x.transpose() * n - c).norm();
}

/// O(n^3) solver through the generalized Schur form; the result is validated
/// against the defining equation.
inline Matrix tsylv_solve_schur(const Matrix& m, const Matrix& n, const Matrix& c, double residual_tol = 1e-8)
{
    const TsylvPencil p = tsylv_factor(m, n);
    Matrix x = tsylv_apply(p, c);
    const double res = tsylv_residual(m, n, c, x);
    if (!(res <= residual_tol * c.norm()))
        throw Error("tsylv-residual-fail", "relative residual " + std::to_string(res / std::max(c.norm(), 1e-300)));
    return x;
}

inline constexpr Eigen::Index kTsylvOracleCap = 60;

/// Kronecker oracle: (I (x) M + (N^T (x) I) P) vec X = vec C, P the commutation matrix.
inline Matrix tsylv_solve_oracle(const Matrix& m, const Matrix& n, const Matrix& c, Eigen::Index cap = kTsylvOracleCap)
{
    require_square(m, "T-Sylvester M");
    require_same_shape(m, n, "T-Sylvester M vs N");
    require_same_shape(m, c, "T-Sylvester C");
    const Eigen::Index sz = m.rows();
    if (sz > cap) throw Error("oracle-too-large", "n=" + std::to_string(sz) + " exceeds oracle cap");
    const Matrix id = Matrix::Identity(sz, sz);
    const Matrix k = kron(id, m) + kron(n.transpose(), id) * commutation_matrix(sz);
    try {
        return unvec(lu_solve(k, vec(c)), sz);
    } catch (const Error& e) {
        if (e.code() == "singular-matrix") throw Error("tsylv-singular", e.what());
        throw;
    }
}

enum class PairingForm {
    conjugate, ///< mu_i * conj(mu_j) != 1
    plain,     ///< mu_i * mu_j != 1
};

/// Solvability of M X + X^T N = C for every C. Pairs include i == j.
/// tol < 0 selects the default 1e-10 * (1 + max |mu|^2) over finite mu.
inline bool tsylv_solvable(const Matrix& m, const Matrix& n, double tol = -1.0,
                           PairingForm form = PairingForm::conjugate)
{
    const PencilSchur ps = generalized_schur_pencil(m, n.transpose());
    const Eigen::Index sz = ps.size();
    const double scale = std::max(ps.tm.cwiseAbs().maxCoeff(), ps.tn.cwiseAbs().maxCoeff());

    // Homogeneous coordinates mu = a/b; b ~ 0 marks an infinite eigenvalue.
    std::vector<Complex> a(static_cast<std::size_t>(sz));
    std::vector<Complex> b(static_cast<std::size_t>(sz));
    std::vector<bool> infinite(static_cast<std::size_t>(sz));
    double max_mu = 0.0;
    for (Eigen::Index i = 0; i < sz; ++i) {
        const auto k = static_cast<std::size_t>(i);
        a[k] = ps.tm(i, i);
        b[k] = ps.tn(i, i);
        infinite[k] = std::abs(b[k]) <= 1e-14 * scale;
        if (!infinite[k]) max_mu = std::max(max_mu, std::abs(a[k] / b[k]));
    }
    if (tol < 0.0) tol = 1e-10 * (1.0 + max_mu * max_mu);

    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = i; j < a.size(); ++j) {
            if (infinite[i] || infinite[j]) {
                // infinity times anything nonzero is not 1; infinity times zero is undecided
                const std::size_t other = infinite[i] ? j : i;
                if (infinite[i] && infinite[j]) continue;
                if (std::abs(a[other]) <= 1e-14 * scale) return false;
                continue;
            }
            const Complex mi = a[i] / b[i];
            const Complex mj = a[j] / b[j];
            const Complex prod = form == PairingForm::conjugate ? mi * std::conj(mj) : mi * mj;
            if (!(std::abs(prod - 1.0) > tol)) return false;
        }
    }
    return true;
}

/// True iff A0 has no Hamiltonian eigenpairing: lambda_i + conj(lambda_j) != 0
/// for every pair (i == j included). tol < 0 selects 1e-10 * max(1, max |lambda|).
inline bool hamiltonian_pairing_check(const Matrix& a0, double tol = -1.0)
{
    const auto lambda = eigenvalues(a0);
    double max_abs = 1.0;
    for (const auto& l : lambda) max_abs = std::max(max_abs, std::abs(l));
    if (tol < 0.0) tol = 1e-10 * max_abs;
    for (std::size_t i = 0; i < lambda.size(); ++i)
        for (std::size_t j = i; j < lambda.size(); ++j)
            if (!(std::abs(lambda[i] + std::conj(lambda[j])) > tol)) return false;
    return true;
}

} // namespace dlyap
