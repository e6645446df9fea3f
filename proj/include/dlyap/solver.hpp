#pragma once

// End-to-end solve of L_c(X) = -W: context, preconditioner factors, Krylov
// iteration and the boundary-value residuals of the recovered U.

#include "dlyap/dlyap_operator.hpp"
#include "dlyap/error.hpp"
#include "dlyap/krylov.hpp"
#include "dlyap/linalg.hpp"
#include "dlyap/precond.hpp"
#include "dlyap/problems.hpp"
#include "dlyap/propagation.hpp"

#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace dlyap {

struct SolveOptions
{
    double c = 1.0;
    OdeConfig ode;
    KrylovConfig krylov;
    bool use_maxit_default = true; ///< maxit = n^2, overriding krylov.maxit
    int shift_retries = 3;
    double refine_target = 1e-8; ///< r_alg above this triggers a correction solve
    int max_refinements = 3;
};

struct DlyapSolve
{
    SolveReport report;
    double c = 1.0; ///< shift actually used
    int refinements = 0;      ///< correction solves after the first Krylov run
    int total_iterations = 0; ///< Krylov iterations summed over all runs
    std::optional<OperatorContext> context;
};

/// Preconditioner factors for the context, retrying with c perturbed by
/// 1e-8 ||A0||_2 while c collides with an eigenvalue of A0.
inline std::pair<OperatorContext, PrecondFactors> setup_with_retries(const TdsProblem& problem, double c,
                                                                     const OdeConfig& ode, int retries)
{
    const double bump = 1e-8 * std::max(1.0, spectral_norm(problem.a0));
    for (int attempt = 0;; ++attempt) {
        OperatorContext ctx(problem, c, ode);
        try {
            PrecondFactors f = precond_setup(ctx);
            return {std::move(ctx), std::move(f)};
        } catch (const Error& e) {
            if (e.code() != "precond-shift-degenerate" || attempt >= retries) throw;
            c += bump;
        }
    }
}

inline DlyapSolve solve_dlyap(const TdsProblem& problem, const SolveOptions& opt = {})
{
    problem.validate();
    DlyapSolve out;
    detail::Stopwatch setup_clock;
    auto [ctx, factors] = setup_with_retries(problem, opt.c, opt.ode, opt.shift_retries);
    const double setup_seconds = setup_clock.seconds();
    out.c = ctx.c();

    KrylovConfig kc = opt.krylov;
    if (opt.use_maxit_default) {
        const Eigen::Index n = problem.n();
        kc.maxit = static_cast<int>(std::min<Eigen::Index>(n * n, 1 << 30));
    }

    double apply_seconds = 0.0;
    double precond_seconds = 0.0;
    const auto op = [&](const Matrix& x) {
        detail::Stopwatch sw;
        Matrix y = apply_Lc(ctx, x);
        apply_seconds += sw.seconds();
        return y;
    };
    const auto pre = [&](const Matrix& z) {
        detail::Stopwatch sw;
        Matrix y = precond_apply(factors, z);
        precond_seconds += sw.seconds();
        return y;
    };

    out.report = krylov_solve(op, Matrix(-problem.w), pre, kc);
    out.total_iterations = out.report.iterations;

    const auto residuals = [&](const Matrix& x) {
        const PropagationResult z = propagate(ctx, x);
        return dlyap_residual(problem, z.z2_end, z.z1_end);
    };
    BoundaryResiduals res = residuals(out.report.x);

    // iterative refinement on the unpreconditioned residual
    while (out.report.converged && res.r_alg > opt.refine_target && out.refinements < opt.max_refinements) {
        const Matrix r = -problem.w - op(out.report.x);
        const SolveReport corr = krylov_solve(op, r, pre, kc);
        out.total_iterations += corr.iterations;
        ++out.refinements;
        const Matrix candidate = out.report.x + corr.x;
        const BoundaryResiduals next = residuals(candidate);
        if (!(next.r_alg < res.r_alg)) break;
        out.report.x = candidate;
        res = next;
    }

    out.report.timings = {setup_seconds, apply_seconds, precond_seconds};
    out.report.r_alg = res.r_alg;
    out.report.r_sym = res.r_sym;
    out.context.emplace(std::move(ctx));
    return out;
}

struct BenchRow
{
    int nx = 0;
    int ny = 0;
    Eigen::Index n = 0;
    double seconds = 0.0;
    int iterations = 0;
    bool converged = false;
    double r_alg = std::nan("");
    double r_sym = std::nan("");
    std::string status;
};

struct BenchOptions
{
    SolveOptions solve;
    double f0 = 5.0;
    double tau = 1.0;
    double a1_scale = 1.0; ///< multiplies A1 after generation
};

/// One PDDE solve per grid; failures are recorded in the row's status.
inline std::vector<BenchRow> bench_table(const std::vector<std::pair<int, int>>& grids, const BenchOptions& opt)
{
    std::vector<BenchRow> rows;
    for (const auto& [nx, ny] : grids) {
        BenchRow row;
        row.nx = nx;
        row.ny = ny;
        detail::Stopwatch clock;
        try {
            PddeSystem sys = pdde_generate(nx, ny, opt.f0, opt.tau);
            sys.problem.a1 *= opt.a1_scale;
            row.n = sys.problem.n();
            const DlyapSolve s = solve_dlyap(sys.problem, opt.solve);
            row.iterations = s.report.iterations;
            row.converged = s.report.converged;
            row.r_alg = s.report.r_alg;
            row.r_sym = s.report.r_sym;
            row.status = s.report.status;
        } catch (const Error& e) {
            row.status = e.code();
        }
        row.seconds = clock.seconds();
        rows.push_back(row);
    }
    return rows;
}

inline void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows, bool with_timings = true)
{
    out << "nx,ny,n,iterations,converged,seconds,r_alg,r_sym,status\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%d,%lld,%d,%d,%.3f,%.6e,%.6e,%s\n", r.nx, r.ny, static_cast<long long>(r.n),
                      r.iterations, r.converged ? 1 : 0, with_timings ? r.seconds : 0.0, r.r_alg, r.r_sym,
                      r.status.c_str());
        out << buf;
    }
}

} // namespace dlyap
