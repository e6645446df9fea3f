// dlyap: command-line front end for the delay Lyapunov solver.
//
//   dlyap solve    --small-example --alpha 1 --out run/
//   dlyap solve    --pdde 5 5 --f0 5 --tau 1 --out run/
//   dlyap solve    --A0 a0.mtx --A1 a1.mtx --W w.mtx --tau 1 --out run/
//   dlyap bench    --grids 5x5,11x11 --out table.csv
//   dlyap spectrum --small-example --alpha 0.1 --out eig.csv
//   dlyap tsylv    --M m.mtx --N n.mtx --C c.mtx --out x.mtx [--oracle]
//   dlyap pdde     --nx 5 --ny 5 --out pdde5/
//   dlyap check    [--quick] [--seed S]

#include "dlyap/dlyap.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace dlyap;

namespace {

struct ProblemArgs
{
    bool small_example = false;
    double alpha = 1.0;
    std::vector<int> pdde;
    double f0 = 5.0;
    double tau = 1.0;
    std::string a0_path, a1_path, w_path;
};

struct SolverArgs
{
    double c = 1.0;
    int steps = 500;
    std::string scheme; // empty: exact for the small example, rk4 otherwise
    std::string method = "gmres";
    double tol = 1e-12;
    int maxit = 0; // 0: n^2
    bool no_precond = false;
};

void add_problem_options(CLI::App* cmd, ProblemArgs& p)
{
    cmd->add_flag("--small-example", p.small_example, "4x4 example with A1 = alpha diag(-1,-0.5,0,0.5)");
    cmd->add_option("--alpha", p.alpha, "delay-term scale of the small example");
    cmd->add_option("--pdde", p.pdde, "PDDE grid NX NY (n = 2 NX NY)")->expected(2);
    cmd->add_option("--f0", p.f0, "PDDE forcing amplitude");
    cmd->add_option("--tau", p.tau, "delay");
    cmd->add_option("--A0", p.a0_path, "Matrix Market file for A0");
    cmd->add_option("--A1", p.a1_path, "Matrix Market file for A1");
    cmd->add_option("--W", p.w_path, "Matrix Market file for W (default I)");
}

void add_solver_options(CLI::App* cmd, SolverArgs& s)
{
    cmd->add_option("--c", s.c, "shift c (nonzero)");
    cmd->add_option("--steps", s.steps, "RK4 steps N on [0, tau/2]");
    cmd->add_option("--scheme", s.scheme, "propagation scheme")->check(CLI::IsMember({"rk4", "exact"}));
    cmd->add_option("--method", s.method, "Krylov method")->check(CLI::IsMember({"gmres", "bicgstab"}));
    cmd->add_option("--tol", s.tol, "relative residual tolerance");
    cmd->add_option("--maxit", s.maxit, "iteration cap (0: n^2)");
    cmd->add_flag("--no-precond", s.no_precond, "disable the preconditioner");
}

TdsProblem load_problem(const ProblemArgs& p)
{
    const int sources = (p.small_example ? 1 : 0) + (p.pdde.empty() ? 0 : 1) + (p.a0_path.empty() ? 0 : 1);
    if (sources != 1) throw Error("bad-config", "give exactly one of --small-example, --pdde, --A0/--A1");
    if (p.small_example) {
        TdsProblem pr = small_example(p.alpha).problem;
        pr.tau = p.tau;
        return pr;
    }
    if (!p.pdde.empty()) return pdde_generate(p.pdde[0], p.pdde[1], p.f0, p.tau).problem;
    if (p.a1_path.empty()) throw Error("bad-config", "--A0 needs --A1");
    TdsProblem pr;
    pr.a0 = mm::read_real_file(p.a0_path);
    pr.a1 = mm::read_real_file(p.a1_path);
    pr.w = p.w_path.empty() ? Matrix::Identity(pr.a0.rows(), pr.a0.cols()) : mm::read_real_file(p.w_path);
    pr.tau = p.tau;
    pr.validate();
    return pr;
}

OdeConfig ode_config(const ProblemArgs& p, const SolverArgs& s)
{
    OdeConfig ode;
    ode.steps = s.steps;
    ode.scheme = s.scheme.empty() ? (p.small_example ? Scheme::exact : Scheme::rk4) : scheme_from_string(s.scheme);
    return ode;
}

SolveOptions solve_options(const ProblemArgs& p, const SolverArgs& s)
{
    SolveOptions o;
    o.c = s.c;
    o.ode = ode_config(p, s);
    o.krylov.method = krylov_method_from_string(s.method);
    o.krylov.tol = s.tol;
    o.krylov.left_precond = !s.no_precond;
    if (s.maxit > 0) {
        o.use_maxit_default = false;
        o.krylov.maxit = s.maxit;
    }
    return o;
}

std::ofstream open_text(const fs::path& path)
{
    std::ofstream out(path);
    if (!out) throw Error("io", "cannot write " + path.string());
    return out;
}

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int run_solve(const ProblemArgs& pa, const SolverArgs& sa, const std::string& out_dir, int samples, bool timings)
{
    const TdsProblem problem = load_problem(pa);
    const SolveOptions opt = solve_options(pa, sa);
    const DlyapSolve s = solve_dlyap(problem, opt);
    const SolveReport& r = s.report;

    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    mm::write_file((dir / "X.mtx").string(), r.x, "U(tau/2)");
    {
        auto h = open_text(dir / "history.csv");
        write_history_csv(h, r, timings);
    }
    if (samples > 0) {
        const fs::path udir = dir / "U";
        fs::create_directories(udir);
        auto times = open_text(udir / "times.csv");
        times << "index,t,file\n";
        const auto grid = reconstruct_U(*s.context, r.x, samples);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            char name[32];
            std::snprintf(name, sizeof name, "U_%04zu.mtx", k);
            mm::write_file((udir / name).string(), grid[k].u, "U(t), t = " + fmt(grid[k].t));
            times << k << "," << fmt(grid[k].t) << "," << name << "\n";
        }
    }
    {
        auto sum = open_text(dir / "summary.txt");
        sum << "n=" << problem.n() << "\n"
            << "tau=" << fmt(problem.tau) << "\n"
            << "c=" << fmt(s.c) << "\n"
            << "scheme=" << to_string(opt.ode.scheme) << "\n"
            << "steps=" << opt.ode.steps << "\n"
            << "method=" << to_string(opt.krylov.method) << "\n"
            << "tol=" << fmt(opt.krylov.tol) << "\n"
            << "status=" << r.status << "\n"
            << "converged=" << (r.converged ? 1 : 0) << "\n"
            << "iterations=" << r.iterations << "\n"
            << "refinements=" << s.refinements << "\n"
            << "total_iterations=" << s.total_iterations << "\n"
            << "final_relres=" << fmt(r.residual_history.back()) << "\n"
            << "r_alg=" << fmt(r.r_alg) << "\n"
            << "r_sym=" << fmt(r.r_sym) << "\n"
            << "setup_seconds=" << fmt(timings ? r.timings.setup_seconds : 0.0) << "\n"
            << "apply_seconds=" << fmt(timings ? r.timings.apply_seconds : 0.0) << "\n"
            << "precond_seconds=" << fmt(timings ? r.timings.precond_seconds : 0.0) << "\n";
    }
    std::cout << "status=" << r.status << " iterations=" << r.iterations << " r_alg=" << r.r_alg
              << " r_sym=" << r.r_sym << "\n";
    if (!r.converged) {
        std::cerr << "error: " << r.status << "\n";
        return 2;
    }
    return 0;
}

std::vector<std::pair<int, int>> parse_grids(const std::string& list)
{
    std::vector<std::pair<int, int>> grids;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        int nx = 0, ny = 0;
        char sep = 0;
        std::istringstream is(item);
        if (!(is >> nx >> sep >> ny) || sep != 'x') throw Error("bad-config", "grid '" + item + "' is not NXxNY");
        grids.emplace_back(nx, ny);
    }
    return grids;
}

void emit(const std::string& path, const std::function<void(std::ostream&)>& body)
{
    if (path.empty() || path == "-") {
        body(std::cout);
        return;
    }
    auto out = open_text(path);
    body(out);
}

int run_spectrum(const ProblemArgs& pa, const SolverArgs& sa, const std::string& out)
{
    const TdsProblem problem = load_problem(pa);
    const OperatorContext ctx(problem, sa.c, ode_config(pa, sa));
    const PrecondFactors f = precond_setup(ctx);
    auto eig = precond_spectrum(ctx, f);
    std::sort(eig.begin(), eig.end(), [](Complex a, Complex b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    emit(out, [&](std::ostream& os) {
        os << "re,im\n";
        for (const auto& z : eig) os << fmt(z.real()) << "," << fmt(z.imag()) << "\n";
    });
    return 0;
}

int run_tsylv(const std::string& m_path, const std::string& n_path, const std::string& c_path,
              const std::string& out, bool oracle)
{
    const Matrix m = mm::read_real_file(m_path);
    const Matrix n = mm::read_real_file(n_path);
    const Matrix c = mm::read_real_file(c_path);
    const Matrix x = oracle ? tsylv_solve_oracle(m, n, c) : tsylv_solve_schur(m, n, c);
    if (out.empty() || out == "-")
        mm::write(std::cout, x);
    else
        mm::write_file(out, x);
    std::cerr << "residual=" << tsylv_residual(m, n, c, x) / std::max(c.norm(), 1e-300) << "\n";
    return 0;
}

int run_pdde(int nx, int ny, double f0, double tau, const std::string& out_dir)
{
    const PddeSystem s = pdde_generate(nx, ny, f0, tau);
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    mm::write_file((dir / "A0.mtx").string(), s.problem.a0);
    mm::write_file((dir / "A1.mtx").string(), s.problem.a1);
    mm::write_file((dir / "W.mtx").string(), s.problem.w);
    mm::write_file((dir / "B0.mtx").string(), *s.problem.b0);
    mm::write_file((dir / "C0.mtx").string(), *s.problem.c0);
    auto meta = open_text(dir / "meta.txt");
    meta << "nx=" << nx << "\nny=" << ny << "\nf0=" << fmt(f0) << "\ntau=" << fmt(tau) << "\nn=" << s.problem.n()
         << "\n";
    return 0;
}

int run_check(bool quick, std::uint64_t seed)
{
    const auto results = run_checks({quick, seed});
    int failed = 0;
    for (const auto& r : results) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " value=" << r.value << " bound=" << r.bound;
        if (!r.detail.empty()) std::cout << " (" << r.detail << ")";
        std::cout << "\n";
        if (!r.passed) ++failed;
    }
    std::cout << results.size() - static_cast<std::size_t>(failed) << "/" << results.size() << " checks passed\n";
    return failed == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Delay Lyapunov equation solver"};
    app.require_subcommand(1);

    ProblemArgs pa;
    SolverArgs sa;
    std::string out = ".";
    int samples = 0;
    bool no_timings = false;

    auto* solve = app.add_subcommand("solve", "solve L_c(X) = -W for X = U(tau/2)");
    add_problem_options(solve, pa);
    add_solver_options(solve, sa);
    solve->add_option("--out", out, "output directory");
    solve->add_option("--samples", samples, "number of U(t) samples on [-tau, tau] (0: none)");
    solve->add_flag("--no-timings", no_timings, "write zero wall-clock fields");

    std::string grids = "5x5,11x11";
    double a1_scale = 1.0;
    std::string bench_out;
    auto* bench = app.add_subcommand("bench", "PDDE iteration-count table");
    bench->add_option("--grids", grids, "comma-separated NXxNY list");
    bench->add_option("--f0", pa.f0, "forcing amplitude");
    bench->add_option("--tau", pa.tau, "delay");
    bench->add_option("--a1-scale", a1_scale, "factor applied to A1");
    add_solver_options(bench, sa);
    bench->add_option("--out", bench_out, "CSV file (default stdout)");
    bench->add_flag("--no-timings", no_timings, "write zero wall-clock fields");

    std::string spectrum_out;
    auto* spectrum = app.add_subcommand("spectrum", "eigenvalues of the preconditioned operator (re,im CSV)");
    add_problem_options(spectrum, pa);
    add_solver_options(spectrum, sa);
    spectrum->add_option("--out", spectrum_out, "CSV file (default stdout)");

    std::string m_path, n_path, c_path, x_out;
    bool oracle = false;
    auto* tsylv = app.add_subcommand("tsylv", "solve M X + X^T N = C");
    tsylv->add_option("--M", m_path, "M (Matrix Market)")->required();
    tsylv->add_option("--N", n_path, "N (Matrix Market)")->required();
    tsylv->add_option("--C", c_path, "C (Matrix Market)")->required();
    tsylv->add_option("--out", x_out, "X output file (default stdout)");
    tsylv->add_flag("--oracle", oracle, "use the Kronecker solver");

    int nx = 5, ny = 5;
    auto* pdde = app.add_subcommand("pdde", "write the PDDE matrices as Matrix Market files");
    pdde->add_option("--nx", nx, "interior grid points in x");
    pdde->add_option("--ny", ny, "interior grid points in y");
    pdde->add_option("--f0", pa.f0, "forcing amplitude");
    pdde->add_option("--tau", pa.tau, "delay");
    pdde->add_option("--out", out, "output directory");

    bool quick = false;
    std::uint64_t seed = 20240607;
    auto* check = app.add_subcommand("check", "run the invariant suite");
    check->add_flag("--quick", quick, "fewer random samples");
    check->add_option("--seed", seed, "random seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*solve) return run_solve(pa, sa, out, samples, !no_timings);
        if (*bench) {
            BenchOptions bo;
            bo.solve = solve_options(pa, sa);
            bo.f0 = pa.f0;
            bo.tau = pa.tau;
            bo.a1_scale = a1_scale;
            const auto rows = bench_table(parse_grids(grids), bo);
            emit(bench_out, [&](std::ostream& os) { write_bench_csv(os, rows, !no_timings); });
            return 0;
        }
        if (*spectrum) return run_spectrum(pa, sa, spectrum_out);
        if (*tsylv) return run_tsylv(m_path, n_path, c_path, x_out, oracle);
        if (*pdde) return run_pdde(nx, ny, pa.f0, pa.tau, out);
        if (*check) return run_check(quick, seed);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
