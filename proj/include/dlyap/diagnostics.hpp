#pragma once

// Invariant suite behind `dlyap check`: oracle equivalences, bound
// inequalities and residual contracts on seeded random instances.

#include "dlyap/dlyap_operator.hpp"
#include "dlyap/error.hpp"
#include "dlyap/krylov.hpp"
#include "dlyap/linalg.hpp"
#include "dlyap/precond.hpp"
#include "dlyap/problems.hpp"
#include "dlyap/propagation.hpp"
#include "dlyap/solver.hpp"
#include "dlyap/tsylv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace dlyap {

struct CheckResult
{
    std::string name;
    bool passed = false;
    double value = 0.0; ///< worst observed quantity
    double bound = 0.0; ///< threshold it was compared against
    std::string detail;
};

struct CheckOptions
{
    bool quick = false;
    std::uint64_t seed = 20240607;
};

namespace detail {

inline Matrix gaussian(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c)
{
    std::normal_distribution<double> dist;
    Matrix a(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) a(i, j) = dist(rng);
    return a;
}

inline double rel(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

inline CheckResult max_check(std::string name, double worst, double bound, std::string detail = {})
{
    return {std::move(name), worst <= bound, worst, bound, std::move(detail)};
}

} // namespace detail

inline std::vector<CheckResult> run_checks(const CheckOptions& opt = {})
{
    using detail::gaussian;
    using detail::max_check;
    using detail::rel;
    std::mt19937_64 rng(opt.seed);
    std::uniform_int_distribution<int> small_n(2, 4);
    const int reps = opt.quick ? 3 : 10;
    std::vector<CheckResult> out;

    const auto guarded = [&](const std::string& name, const std::function<CheckResult()>& body) {
        try {
            out.push_back(body());
        } catch (const Error& e) {
            out.push_back({name, false, std::nan(""), 0.0, std::string("error ") + e.what()});
        }
    };

    guarded("vec-unvec-roundtrip", [&] {
        double worst = 0.0;
        for (int r = 0; r < reps; ++r) {
            const Matrix x = gaussian(rng, small_n(rng), small_n(rng));
            worst = std::max(worst, (unvec(vec(x), x.rows(), x.cols()) - x).cwiseAbs().maxCoeff());
        }
        return max_check("vec-unvec-roundtrip", worst, 0.0);
    });

    guarded("kron-vec-identity", [&] {
        double worst = 0.0;
        for (int r = 0; r < reps; ++r) {
            const Matrix a = gaussian(rng, 3, 3), b = gaussian(rng, 3, 3), x = gaussian(rng, 3, 3);
            worst = std::max(worst, rel(unvec(kron(b.transpose(), a) * vec(x), 3), a * x * b));
        }
        return max_check("kron-vec-identity", worst, 1e-14);
    });

    guarded("commutation-transpose", [&] {
        const Matrix x = gaussian(rng, 4, 4);
        return max_check("commutation-transpose", (unvec(commutation_matrix(4) * vec(x), 4) - x.transpose()).norm(),
                         0.0);
    });

    guarded("expm-group", [&] {
        double worst = 0.0;
        for (int r = 0; r < reps; ++r) {
            const Matrix g = gaussian(rng, 5, 5);
            const Matrix a = g * (std::uniform_real_distribution<double>(0.1, 5.0)(rng) / g.norm());
            worst = std::max(worst, (expm(a) * expm(-a) - Matrix::Identity(5, 5)).norm());
        }
        return max_check("expm-group", worst, 1e-10);
    });

    guarded("schur-unitarity", [&] {
        double worst = 0.0;
        for (int r = 0; r < reps; ++r) {
            const Matrix a = gaussian(rng, 6, 6);
            const SchurResult s = complex_schur(a);
            const double uni = (s.q.adjoint() * s.q - CMatrix::Identity(6, 6)).norm() / (1e-12 * 6);
            const double rec = (s.q * s.r * s.q.adjoint() - a.cast<Complex>()).norm() / (1e-10 * a.norm());
            worst = std::max({worst, uni, rec});
        }
        return max_check("schur-unitarity", worst, 1.0, "scaled by the tolerances");
    });

    guarded("pencil-eigenvalues", [&] {
        double worst = 0.0;
        for (int r = 0; r < reps; ++r) {
            const Matrix m = gaussian(rng, 5, 5);
            const Matrix nt = gaussian(rng, 5, 5) + 3.0 * Matrix::Identity(5, 5);
            auto mu = generalized_schur_pencil(m, nt).eigenvalues();
            auto ref = eigenvalues(Matrix(lu_solve(nt, m)));
            for (const auto& z : mu) {
                double best = std::numeric_limits<double>::infinity();
                for (const auto& w : ref) best = std::min(best, std::abs(z - w) / std::max(1.0, std::abs(w)));
                worst = std::max(worst, best);
            }
        }
        return max_check("pencil-eigenvalues", worst, 1e-8);
    });

    guarded("rk4-linearity", [&] {
        double worst = 0.0;
        for (int r = 0; r < reps; ++r) {
            const TdsProblem p = random_stable_problem(rng, 4);
            const Matrix x = gaussian(rng, 4, 4), y = gaussian(rng, 4, 4);
            const OdeConfig cfg{100};
            const auto zx = rk4_propagate(p.a0, p.a1, x, p.tau, cfg);
            const auto zy = rk4_propagate(p.a0, p.a1, y, p.tau, cfg);
            const auto zs = rk4_propagate(p.a0, p.a1, 2.0 * x - 3.0 * y, p.tau, cfg);
            worst = std::max(worst, rel(zs.z1_end, 2.0 * zx.z1_end - 3.0 * zy.z1_end));
            worst = std::max(worst, rel(zs.z2_end, 2.0 * zx.z2_end - 3.0 * zy.z2_end));
        }
        return max_check("rk4-linearity", worst, 1e-12);
    });

    guarded("rk4-order", [&] {
        double worst_order = 1e300;
        for (int r = 0; r < reps; ++r) {
            const TdsProblem p = random_stable_problem(rng, 4);
            const Matrix x = gaussian(rng, 4, 4);
            const auto ex = exact_propagate_small(p.a0, p.a1, x, p.tau);
            const auto err = [&](int steps) {
                const auto z = rk4_propagate(p.a0, p.a1, x, p.tau, OdeConfig{steps});
                return (z.z1_end - ex.z1_end).norm() + (z.z2_end - ex.z2_end).norm();
            };
            worst_order = std::min(worst_order, std::log2(err(40) / err(80)));
        }
        return CheckResult{"rk4-order", worst_order >= 3.9, worst_order, 3.9, "observed order, lower bound"};
    });

    guarded("z-bound", [&] {
        double worst = 0.0;
        for (int r = 0; r < reps; ++r) {
            const TdsProblem p = random_stable_problem(rng, small_n(rng));
            const Matrix x = gaussian(rng, p.n(), p.n());
            const auto z = exact_propagate_small(p.a0, p.a1, x, p.tau);
            const double b = 2.0 * std::exp(p.tau * (spectral_norm(p.a0) + spectral_norm(p.a1))) * x.norm();
            worst = std::max({worst, z.z1_end.norm() / b, z.z2_end.norm() / b});
        }
        return max_check("z-bound", worst, 1.0, "ratio to the bound");
    });

    guarded("generator-norm-bound", [&] {
        double worst = 0.0;
        for (int r = 0; r < reps; ++r) {
            const TdsProblem p = random_stable_problem(rng, small_n(rng));
            const double lhs = spectral_norm(vectorized_generator(p.a0, p.a1));
            worst = std::max(worst, lhs / (2.0 * (spectral_norm(p.a0) + spectral_norm(p.a1))));
        }
        return max_check("generator-norm-bound", worst, 1.0 + 1e-6, "ratio to the bound");
    });

    guarded("lc-linearity-and-split", [&] {
        double worst = 0.0;
        for (int r = 0; r < reps; ++r) {
            const OperatorContext ctx(random_stable_problem(rng, 4), 1.0, OdeConfig{50});
            const Matrix x = gaussian(rng, 4, 4), y = gaussian(rng, 4, 4);
            worst = std::max(worst, rel(apply_Lc(ctx, 0.5 * x + 2.0 * y), 0.5 * apply_Lc(ctx, x) + 2.0 * apply_Lc(ctx, y)));
            const LcParts parts = lc_parts(ctx, propagate(ctx, x));
            worst = std::max(worst, (parts.sym - parts.sym.transpose()).norm() / parts.sym.norm());
            worst = std::max(worst, (parts.anti + parts.anti.transpose()).norm() / std::max(parts.anti.norm(), 1e-300));
        }
        return max_check("lc-linearity-and-split", worst, 1e-12);
    });

    guarded("tau-zero-reduction", [&] {
        double worst = 0.0;
        for (int r = 0; r < reps; ++r) {
            RandomProblemOptions ro;
            ro.tau = 0.0;
            const TdsProblem p = random_stable_problem(rng, small_n(rng), ro);
            const DlyapSolve s = solve_dlyap(p);
            worst = std::max(worst, rel(s.report.x, lyapunov_kron(p.a0 + p.a1, p.w)));
        }
        return max_check("tau-zero-reduction", worst, 1e-8);
    });

    guarded("gmres-vs-dense", [&] {
        double worst = 0.0;
        for (int r = 0; r < reps; ++r) {
            const TdsProblem p = random_stable_problem(rng, small_n(rng));
            SolveOptions so;
            so.ode.scheme = Scheme::exact;
            const DlyapSolve s = solve_dlyap(p, so);
            const Matrix a = assemble_dense_Lc(*s.context);
            const Matrix x = unvec(lu_solve(a, -vec(p.w)), p.n());
            worst = std::max({worst, rel(s.report.x, x), s.report.r_alg, s.report.r_sym});
        }
        return max_check("gmres-vs-dense", worst, 1e-8, "includes r_alg and r_sym");
    });

    guarded("tsylv-schur-vs-oracle", [&] {
        double worst = 0.0;
        std::uniform_int_distribution<int> nd(2, 12);
        for (int r = 0; r < 4 * reps; ++r) {
            const int n = nd(rng);
            const Matrix a0 = random_stable_problem(rng, n).a0;
            const Matrix id = Matrix::Identity(n, n);
            const Matrix m = a0.transpose() + id, nn = a0 - id, c = gaussian(rng, n, n);
            const Matrix x = tsylv_solve_schur(m, nn, c);
            worst = std::max({worst, rel(x, tsylv_solve_oracle(m, nn, c)), tsylv_residual(m, nn, c, x) / c.norm()});
        }
        return max_check("tsylv-schur-vs-oracle", worst, 1e-8);
    });

    guarded("tsylv-predicate-c-independence", [&] {
        int mismatches = 0;
        for (int r = 0; r < reps; ++r) {
            const Matrix a0 = gaussian(rng, 4, 4);
            const Matrix id = Matrix::Identity(4, 4);
            const bool ham = hamiltonian_pairing_check(a0, 1e-8);
            for (const double c : {0.5, 1.0, 2.0})
                if (tsylv_solvable(a0.transpose() + c * id, a0 - c * id, 1e-8) != ham) ++mismatches;
        }
        return max_check("tsylv-predicate-c-independence", mismatches, 0.0, "mismatch count");
    });

    guarded("precond-roundtrip", [&] {
        double worst = 0.0;
        for (int r = 0; r < reps; ++r) {
            const TdsProblem p = random_stable_problem(rng, 5);
            const PrecondFactors f = precond_setup(p.a0, 1.0, p.tau);
            const Matrix x = gaussian(rng, 5, 5);
            worst = std::max(worst, rel(precond_apply(f, tilde_Lc(f, x)), x) / 1e-8);
            worst = std::max(worst, (f.e_plus * f.e_minus - Matrix::Identity(5, 5)).norm() / 1e-9);
        }
        return max_check("precond-roundtrip", worst, 1.0, "scaled by the tolerances");
    });

    guarded("precond-norm-bound", [&] {
        double worst = 0.0;
        for (int r = 0; r < reps; ++r) {
            const TdsProblem p = random_stable_problem(rng, small_n(rng));
            const PrecondFactors f = precond_setup(p.a0, 1.0, p.tau);
            const double k = T_inverse_norm(f);
            const Matrix z = gaussian(rng, p.n(), p.n());
            const double b = k * std::exp(0.5 * p.tau * spectral_norm(p.a0)) * z.norm();
            worst = std::max(worst, precond_apply(f, z).norm() / b);
        }
        return max_check("precond-norm-bound", worst, 1.0 + 1e-6, "ratio to the bound");
    });

    guarded("precond-immutability", [&] {
        const TdsProblem p = random_stable_problem(rng, 4);
        const PrecondFactors f = precond_setup(p.a0, 1.0, p.tau);
        const Matrix z = gaussian(rng, 4, 4);
        const Matrix a = precond_apply(f, z), b = precond_apply(f, z);
        return max_check("precond-immutability", (a - b).cwiseAbs().maxCoeff(), 0.0);
    });

    guarded("gmres-monotone-orthonormal", [&] {
        double worst = 0.0;
        for (int r = 0; r < reps; ++r) {
            const TdsProblem p = random_stable_problem(rng, 4);
            const OperatorContext ctx(p, 1.0, OdeConfig{50});
            const PrecondFactors f = precond_setup(ctx);
            KrylovConfig kc;
            kc.maxit = 16;
            const auto rep = gmres([&](const Matrix& x) { return apply_Lc(ctx, x); }, Matrix(-p.w),
                                   [&](const Matrix& z) { return precond_apply(f, z); }, kc);
            for (std::size_t i = 1; i < rep.residual_history.size(); ++i)
                worst = std::max(worst, (rep.residual_history[i] - rep.residual_history[i - 1]) / 1e-14);
            worst = std::max(worst, rep.basis_coupling / 1e-10);
        }
        return max_check("gmres-monotone-orthonormal", worst, 1.0, "scaled by the tolerances");
    });

    guarded("left-precond-equivalence", [&] {
        const TdsProblem p = random_stable_problem(rng, 3);
        const OperatorContext ctx(p, 1.0, OdeConfig{50});
        const PrecondFactors f = precond_setup(ctx);
        const auto op = [&](const Matrix& x) { return apply_Lc(ctx, x); };
        const auto pre = [&](const Matrix& z) { return precond_apply(f, z); };
        KrylovConfig kc;
        kc.maxit = 9;
        const auto left = gmres(op, Matrix(-p.w), pre, kc);
        const auto composed =
            gmres([&](const Matrix& x) { return pre(op(x)); }, pre(Matrix(-p.w)), kc);
        double worst = rel(left.x, composed.x);
        const std::size_t k = std::min(left.residual_history.size(), composed.residual_history.size());
        for (std::size_t i = 0; i < k; ++i)
            worst = std::max(worst, std::abs(left.residual_history[i] - composed.residual_history[i]));
        return max_check("left-precond-equivalence", worst, 1e-10);
    });

    guarded("gmres-vs-bicgstab", [&] {
        double worst = 0.0;
        for (int r = 0; r < reps; ++r) {
            const TdsProblem p = random_stable_problem(rng, 3);
            SolveOptions g, b;
            g.ode.scheme = b.ode.scheme = Scheme::exact;
            b.krylov.method = KrylovMethod::bicgstab;
            const auto xg = solve_dlyap(p, g).report.x;
            const auto xb = solve_dlyap(p, b).report.x;
            worst = std::max(worst, rel(xb, xg));
        }
        return max_check("gmres-vs-bicgstab", worst, 1e-11);
    });

    guarded("zarantonello-link", [&] {
        double worst = 0.0;
        for (const double alpha : {0.01, 0.05, 0.1}) {
            const SmallExample ex = small_example(alpha);
            const OperatorContext ctx(ex.problem, 1.0, OdeConfig{500, Scheme::exact});
            const PrecondFactors f = precond_setup(ctx);
            const Matrix b = assemble_preconditioned(ctx, f);
            Eigen::EigenSolver<Matrix> es(b);
            const Eigen::MatrixXcd v = es.eigenvectors();
            Eigen::JacobiSVD<Eigen::MatrixXcd> svd(v);
            const double kappa = svd.singularValues()(0) / svd.singularValues().tail(1)(0);
            double radius = 0.0;
            for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
                radius = std::max(radius, std::abs(es.eigenvalues()(i) - 1.0));
            if (!(radius < 1.0)) continue;
            const auto rep = gmres([&](const Matrix& x) { return apply_Lc(ctx, x); }, Matrix(-ex.problem.w),
                                   [&](const Matrix& z) { return precond_apply(f, z); }, KrylovConfig{});
            for (std::size_t m = 0; m + 1 < rep.residual_history.size(); ++m)
                worst = std::max(worst, rep.residual_history[m + 1] /
                                            (kappa * std::pow(radius, static_cast<double>(m)) + 1e-12));
        }
        return max_check("zarantonello-link", worst, 1.0, "ratio to the bound");
    });

    guarded("pdde-structure", [&] {
        const PddeSystem s = pdde_generate(5, 7);
        double worst = (s.dx + s.dx.transpose()).cwiseAbs().maxCoeff();
        worst = std::max(worst, (s.laplacian - s.laplacian.transpose()).cwiseAbs().maxCoeff());
        Eigen::SelfAdjointEigenSolver<Matrix> es(s.laplacian, Eigen::EigenvaluesOnly);
        const double top = es.eigenvalues().maxCoeff();
        return CheckResult{"pdde-structure", worst == 0.0 && top < 0.0, top, 0.0,
                           "largest Laplacian eigenvalue; D_x and Laplacian symmetry exact"};
    });

    return out;
}

} // namespace dlyap
