#pragma once

// Dense real/complex kernels shared by every other module.
//
// Conventions:
//  * vec() stacks columns, so vec(A X B) = kron(B^T, A) vec(X).
//  * All Schur based paths run in complex arithmetic; callers that expect a
//    real answer go through real_part_checked().

#include "dlyap/error.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace dlyap {

using Matrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXd;
using Complex = std::complex<double>;

inline constexpr double kEps = std::numeric_limits<double>::epsilon();

inline void require_square(const Eigen::Ref<const Matrix>& a, const char* what)
{
    if (a.rows() != a.cols())
        throw Error("shape-mismatch", std::string(what) + " must be square, got " +
                                          std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
}

inline void require_same_shape(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b,
                               const char* what)
{
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw Error("shape-mismatch", std::string(what) + ": " + std::to_string(a.rows()) + "x" +
                                          std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                                          "x" + std::to_string(b.cols()));
}

template <class Derived>
void require_finite(const Eigen::MatrixBase<Derived>& a, const char* what)
{
    if (!a.allFinite()) throw Error("non-finite", std::string(what) + " contains NaN or Inf");
}

// ---------------------------------------------------------------------------
// vec / Kronecker structure

inline Vector vec(const Eigen::Ref<const Matrix>& x) { return x.reshaped(); }

inline Matrix unvec(const Eigen::Ref<const Vector>& v, Eigen::Index rows, Eigen::Index cols)
{
    if (v.size() != rows * cols)
        throw Error("shape-mismatch", "unvec: length " + std::to_string(v.size()) + " != " +
                                          std::to_string(rows) + "*" + std::to_string(cols));
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

inline Matrix unvec(const Eigen::Ref<const Vector>& v, Eigen::Index n) { return unvec(v, n, n); }

inline constexpr std::size_t kKronMaxEntries = std::size_t{1} << 28;

inline Matrix kron(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b,
                   std::size_t max_entries = kKronMaxEntries)
{
    const auto rows = static_cast<std::size_t>(a.rows()) * static_cast<std::size_t>(b.rows());
    const auto cols = static_cast<std::size_t>(a.cols()) * static_cast<std::size_t>(b.cols());
    if (cols != 0 && rows > max_entries / cols)
        throw Error("kron-too-large", std::to_string(rows) + "x" + std::to_string(cols) + " exceeds cap");

    Matrix k(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return k;
}

/// Permutation P of size n^2 with P vec(X) = vec(X^T) for every n x n X.
inline Matrix commutation_matrix(Eigen::Index n)
{
    if (n < 1) throw Error("shape-mismatch", "commutation_matrix needs n >= 1");
    Matrix p = Matrix::Zero(n * n, n * n);
    // vec(X)[i + j n] = X(i,j) lands in vec(X^T)[j + i n]
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            p(j + i * n, i + j * n) = 1.0;
    return p;
}

// ---------------------------------------------------------------------------
// Norms

/// ||A||_2 as sqrt of the dominant eigenvalue of A^T A, by power iteration.
inline double spectral_norm(const Eigen::Ref<const Matrix>& a, double tol = 1e-8, int max_iter = 10000)
{
    if (a.size() == 0) return 0.0;
    Vector v(a.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = 1.0 + 0.1 * std::sin(1.0 + static_cast<double>(i));
    v.normalize();
    double lambda = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Vector w = a.transpose() * (a * v);
        const double next = w.norm();
        if (next == 0.0) return 0.0;
        v = w / next;
        if (std::abs(next - lambda) <= tol * next) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    return std::sqrt(lambda);
}

inline double frobenius(const Eigen::Ref<const Matrix>& a) { return a.norm(); }

// ---------------------------------------------------------------------------
// Matrix exponential: scaling and squaring with the degree 13 diagonal Pade
// approximant. The squaring count is ceil(log2(||A||_1 / 5.4)), floored at 0.

inline Matrix expm(const Eigen::Ref<const Matrix>& a)
{
    require_square(a, "expm argument");
    require_finite(a, "expm argument");
    const Eigen::Index n = a.rows();
    if (n == 0) return Matrix(0, 0);

    static constexpr std::array<double, 14> raw = {
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
        129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
        1323241920.0,        40840800.0,          960960.0,           16380.0,
        182.0,               1.0};
    static constexpr std::array<double, 14> b = [] {
        std::array<double, 14> c{};
        for (std::size_t k = 0; k < c.size(); ++k) c[k] = raw[k] / raw[0];
        return c;
    }();

    const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm1 > 5.4) squarings = static_cast<int>(std::ceil(std::log2(norm1 / 5.4)));
    if (squarings > 1000) throw Error("exp-overflow", "norm too large: " + std::to_string(norm1));

    const Matrix as = a / std::ldexp(1.0, squarings);
    const Matrix id = Matrix::Identity(n, n);
    const Matrix a2 = as * as;
    const Matrix a4 = a2 * a2;
    const Matrix a6 = a4 * a2;

    const Matrix u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id;
    const Matrix u = as * u_inner;
    const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;

    Matrix r = (v - u).partialPivLu().solve(v + u);
    for (int s = 0; s < squarings; ++s) r = r * r;
    if (!r.allFinite()) throw Error("exp-overflow", "result is not finite");
    return r;
}

// ---------------------------------------------------------------------------
// Linear solves

/// Solves A X = B by partially pivoted LU.
inline Matrix lu_solve(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b)
{
    require_square(a, "lu_solve matrix");
    if (a.rows() != b.rows()) throw Error("shape-mismatch", "lu_solve: row counts differ");
    if (a.rows() == 0) return Matrix(0, b.cols());
    Eigen::PartialPivLU<Matrix> lu(a);
    const double rcond = lu.rcond();
    if (!(rcond > static_cast<double>(a.rows()) * kEps))
        throw Error("singular-matrix", "reciprocal condition estimate " + std::to_string(rcond));
    Matrix x = lu.solve(b);
    if (!x.allFinite()) throw Error("singular-matrix", "solution is not finite");
    return x;
}

// ---------------------------------------------------------------------------
// Schur forms

struct SchurResult
{
    CMatrix q; ///< unitary
    CMatrix r; ///< upper triangular, q r q^* = a
};

/// Complex Schur form via Hessenberg reduction and shifted QR with deflation.
inline SchurResult complex_schur(const Eigen::Ref<const CMatrix>& a)
{
    if (a.rows() != a.cols()) throw Error("shape-mismatch", "complex_schur argument must be square");
    if (a.rows() == 0) return {CMatrix(0, 0), CMatrix(0, 0)};
    Eigen::ComplexSchur<CMatrix> schur(a.rows());
    schur.compute(a, true);
    if (schur.info() != Eigen::Success)
        throw Error("schur-no-convergence", "QR iteration cap reached for n=" + std::to_string(a.rows()));
    SchurResult out{schur.matrixU(), schur.matrixT()};
    out.r.triangularView<Eigen::StrictlyLower>().setZero();
    return out;
}

inline SchurResult complex_schur(const Eigen::Ref<const Matrix>& a)
{
    return complex_schur(CMatrix(a.cast<Complex>()));
}

inline std::vector<Complex> eigenvalues(const Eigen::Ref<const CMatrix>& a)
{
    const auto s = complex_schur(a);
    std::vector<Complex> out(static_cast<std::size_t>(a.rows()));
    for (Eigen::Index i = 0; i < a.rows(); ++i) out[static_cast<std::size_t>(i)] = s.r(i, i);
    return out;
}

inline std::vector<Complex> eigenvalues(const Eigen::Ref<const Matrix>& a)
{
    require_square(a, "eigenvalues argument");
    return eigenvalues(CMatrix(a.cast<Complex>()));
}

/// Generalized Schur form of the pencil M - lambda NT:
/// q^* M z = tm and q^* NT z = tn with q, z unitary and tm, tn upper triangular.
struct PencilSchur
{
    CMatrix q;
    CMatrix z;
    CMatrix tm;
    CMatrix tn;

    [[nodiscard]] Eigen::Index size() const { return tm.rows(); }

    /// Pencil eigenvalues tm(i,i)/tn(i,i); an exactly zero tn(i,i) yields infinity.
    [[nodiscard]] std::vector<Complex> eigenvalues() const
    {
        std::vector<Complex> mu(static_cast<std::size_t>(size()));
        for (Eigen::Index i = 0; i < size(); ++i) {
            const Complex den = tn(i, i);
            mu[static_cast<std::size_t>(i)] =
                den == Complex(0.0) ? Complex(std::numeric_limits<double>::infinity(), 0.0) : tm(i, i) / den;
        }
        return mu;
    }
};

namespace detail {

inline double strict_lower_norm(const CMatrix& a)
{
    double s = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = j + 1; i < a.rows(); ++i) s += std::norm(a(i, j));
    return std::sqrt(s);
}

} // namespace detail

/// Reduction route: the Schur vectors of NT^{-1} M give z, a QR factorization of
/// NT z gives q. When NT is singular (or badly conditioned) the same reduction is
/// applied to a rotated pair (cos t M - sin t NT, sin t M + cos t NT), which
/// shares its deflating subspaces with (M, NT).
inline PencilSchur generalized_schur_pencil(const Eigen::Ref<const Matrix>& m, const Eigen::Ref<const Matrix>& nt,
                                            double triangular_tol = 1e-10)
{
    require_square(m, "pencil M");
    require_square(nt, "pencil NT");
    require_same_shape(m, nt, "pencil M vs NT");
    const Eigen::Index n = m.rows();
    if (n == 0) return {CMatrix(0, 0), CMatrix(0, 0), CMatrix(0, 0), CMatrix(0, 0)};

    const CMatrix mc = m.cast<Complex>();
    const CMatrix nc = nt.cast<Complex>();
    const double scale = std::max(m.norm() + nt.norm(), std::numeric_limits<double>::min());

    static constexpr std::array<double, 6> angles = {0.0, std::numbers::pi / 2, 0.4, 1.1, 2.0, 2.7};
    std::string last_reason = "no angle attempted";
    for (const double t : angles) {
        const double ct = std::cos(t);
        const double st = std::sin(t);
        const Matrix mr = ct * m - st * nt;
        const Matrix nr = st * m + ct * nt;

        Eigen::PartialPivLU<Matrix> lu(nr);
        if (!(lu.rcond() > 1e-12)) {
            last_reason = "rotated NT singular (rcond " + std::to_string(lu.rcond()) + ")";
            continue;
        }
        const Matrix s = lu.solve(mr);
        SchurResult schur;
        try {
            schur = complex_schur(s);
        } catch (const Error& e) {
            last_reason = e.what();
            continue;
        }
        const CMatrix nz = nr.cast<Complex>() * schur.q;
        Eigen::HouseholderQR<CMatrix> qr(nz);
        const CMatrix q = qr.householderQ();

        PencilSchur out;
        out.q = q;
        out.z = std::move(schur.q);
        out.tm = q.adjoint() * mc * out.z;
        out.tn = q.adjoint() * nc * out.z;
        const double lower = std::max(detail::strict_lower_norm(out.tm), detail::strict_lower_norm(out.tn));
        if (!(lower <= triangular_tol * scale)) {
            last_reason = "triangularity defect " + std::to_string(lower / scale);
            continue;
        }
        out.tm.triangularView<Eigen::StrictlyLower>().setZero();
        out.tn.triangularView<Eigen::StrictlyLower>().setZero();
        return out;
    }
    throw Error("pencil-reduction-failed", last_reason);
}

/// Real part of a complex result, after checking ||Im|| <= rel_tol * max(||Re||, tiny).
inline Matrix real_part_checked(const Eigen::Ref<const CMatrix>& a, double rel_tol, const char* code)
{
    Matrix re = a.real();
    const double im = a.imag().norm();
    const double ref = std::max(re.norm(), std::numeric_limits<double>::min());
    if (!(im <= rel_tol * ref))
        throw Error(code, "imaginary residue " + std::to_string(im / ref) + " above tolerance");
    return re;
}

} // namespace dlyap
