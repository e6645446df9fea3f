#include "dlyap/matrix_market.hpp"
#include "dlyap/problems.hpp"
#include "dlyap/tsylv.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>

using namespace dlyap;
namespace fs = std::filesystem;

namespace {

struct RunResult
{
    int exit_code;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test
{
protected:
    void SetUp() override
    {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("dlyap_cli_") + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    RunResult run(const std::string& args) const
    {
        const fs::path out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
        const std::string cmd =
            std::string(DLYAP_CLI) + " " + args + " > '" + out.string() + "' 2> '" + err.string() + "'";
        const int status = std::system(cmd.c_str());
        return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
    }

    fs::path path(const std::string& name) const { return dir_ / name; }
    std::string arg(const std::string& name) const { return "'" + path(name).string() + "'"; }

    fs::path dir_;
};

std::map<std::string, std::string> read_summary(const fs::path& p)
{
    std::map<std::string, std::string> kv;
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

std::vector<Complex> read_spectrum(const std::string& csv)
{
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "re,im");
    std::vector<Complex> out;
    while (std::getline(in, line)) {
        const auto comma = line.find(',');
        out.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
    }
    return out;
}

} // namespace

TEST_F(Cli, SmallExampleReproducesPrintedSolution)
{
    const auto r = run("solve --small-example --alpha 1 --samples 5 --out " + arg("run"));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const auto kv = read_summary(path("run/summary.txt"));
    EXPECT_EQ(kv.at("status"), "converged");
    EXPECT_EQ(kv.at("scheme"), "exact");
    EXPECT_EQ(kv.at("c"), "1");
    EXPECT_LE(std::stod(kv.at("r_alg")), 1e-8);
    EXPECT_LE(std::stod(kv.at("r_sym")), 1e-8);
    const Matrix x = mm::read_real_file(path("run/X.mtx").string());
    EXPECT_LE((x - small_example_reference_solution()).cwiseAbs().maxCoeff(), 1e-6);

    // U samples at t = -1, -0.5, 0, 0.5, 1
    const std::string times = slurp(path("run/U/times.csv"));
    EXPECT_EQ(times.rfind("index,t,file\n0,-1,U_0000.mtx\n", 0), 0u);
    EXPECT_LE((mm::read_real_file(path("run/U/U_0003.mtx").string()) - x).norm(), 1e-12);
    EXPECT_LE((mm::read_real_file(path("run/U/U_0001.mtx").string()) - x.transpose()).norm(), 1e-12);
    const Matrix u0 = mm::read_real_file(path("run/U/U_0002.mtx").string());
    EXPECT_LE((u0 - u0.transpose()).norm(), 1e-8 * u0.norm());
}

TEST_F(Cli, ZeroDelayTermIsInvertedToRoundoff)
{
    const auto r = run("solve --small-example --alpha 0 --out " + arg("run"));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    std::istringstream hist(slurp(path("run/history.csv")));
    std::string header, first, second;
    std::getline(hist, header);
    std::getline(hist, first);
    std::getline(hist, second);
    const double relres1 = std::stod(second.substr(second.find(',') + 1));
    EXPECT_LE(relres1, 1e-8);
}

TEST_F(Cli, FileProblemWithoutDelayTermConvergesInOneIteration)
{
    std::mt19937_64 rng(11);
    TdsProblem p = random_stable_problem(rng, 5);
    p.a1.setZero();
    mm::write_file(path("A0.mtx").string(), p.a0);
    mm::write_file(path("A1.mtx").string(), p.a1);
    mm::write_file(path("W.mtx").string(), p.w);
    const auto r = run("solve --A0 " + arg("A0.mtx") + " --A1 " + arg("A1.mtx") + " --W " + arg("W.mtx") +
                       " --steps 100 --out " + arg("run"));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_EQ(read_summary(path("run/summary.txt")).at("iterations"), "1");
}

TEST_F(Cli, DefaultWeightIsIdentity)
{
    const Matrix a0 = small_example_a0();
    mm::write_file(path("A0.mtx").string(), a0);
    mm::write_file(path("A1.mtx").string(), small_example(1.0).problem.a1);
    const auto r = run("solve --A0 " + arg("A0.mtx") + " --A1 " + arg("A1.mtx") + " --scheme exact --out " +
                       arg("run"));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const Matrix x = mm::read_real_file(path("run/X.mtx").string());
    EXPECT_LE((x - small_example_reference_solution()).cwiseAbs().maxCoeff(), 1e-6);
}

TEST_F(Cli, SpectrumWithoutDelayTermIsOne)
{
    const auto r = run("spectrum --small-example --alpha 0");
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const auto mu = read_spectrum(r.out);
    ASSERT_EQ(mu.size(), 16u);
    for (const auto& m : mu) EXPECT_LE(std::abs(m - 1.0), 1e-8);
}

TEST_F(Cli, SpectrumFileRoundTrip)
{
    const auto r = run("spectrum --small-example --alpha 1 --out " + arg("mu.csv"));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const auto mu = read_spectrum(slurp(path("mu.csv")));
    ASSERT_EQ(mu.size(), 16u);
    for (std::size_t k = 1; k < mu.size(); ++k) EXPECT_LE(mu[k - 1].real(), mu[k].real());
}

TEST_F(Cli, TsylvOracleAndSchurAgree)
{
    std::mt19937_64 rng(5);
    const Matrix a0 = random_stable_problem(rng, 6).a0;
    const Matrix id = Matrix::Identity(6, 6);
    const Matrix c = oracle::gaussian(rng, 6, 6);
    mm::write_file(path("M.mtx").string(), Matrix(a0.transpose() + id));
    mm::write_file(path("N.mtx").string(), Matrix(a0 - id));
    mm::write_file(path("C.mtx").string(), c);
    const std::string in = " --M " + arg("M.mtx") + " --N " + arg("N.mtx") + " --C " + arg("C.mtx");
    const auto schur = run("tsylv" + in + " --out " + arg("X1.mtx"));
    const auto kron = run("tsylv --oracle" + in + " --out " + arg("X2.mtx"));
    ASSERT_EQ(schur.exit_code, 0) << schur.err;
    ASSERT_EQ(kron.exit_code, 0) << kron.err;
    EXPECT_NE(schur.err.find("residual="), std::string::npos);
    const Matrix x1 = mm::read_real_file(path("X1.mtx").string());
    const Matrix x2 = mm::read_real_file(path("X2.mtx").string());
    EXPECT_LE((x1 - x2).norm(), 1e-9 * x2.norm());
    EXPECT_LE(tsylv_residual(a0.transpose() + id, a0 - id, c, x1), 1e-8 * c.norm());
}

TEST_F(Cli, CheckQuickPasses)
{
    const auto r = run("check --quick");
    EXPECT_EQ(r.exit_code, 0) << r.out;
    EXPECT_EQ(r.out.find("FAIL"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("PASS tsylv-schur-vs-oracle"), std::string::npos);
}

TEST_F(Cli, DeterministicArtifacts)
{
    const std::string args = "solve --small-example --alpha 0.5 --samples 4 --no-timings --out ";
    ASSERT_EQ(run(args + arg("a")).exit_code, 0);
    ASSERT_EQ(run(args + arg("b")).exit_code, 0);
    for (const char* f : {"X.mtx", "history.csv", "summary.txt", "U/times.csv", "U/U_0002.mtx"})
        EXPECT_EQ(slurp(path(std::string("a/") + f)), slurp(path(std::string("b/") + f))) << f;

    const std::string bench = "bench --grids 3x3 --no-timings --out ";
    ASSERT_EQ(run(bench + arg("b1.csv")).exit_code, 0);
    ASSERT_EQ(run(bench + arg("b2.csv")).exit_code, 0);
    EXPECT_EQ(slurp(path("b1.csv")), slurp(path("b2.csv")));
}

TEST_F(Cli, BenchCsv)
{
    const auto r = run("bench --grids 1x1,3x3,2x2 --no-timings");
    ASSERT_EQ(r.exit_code, 0) << r.err;
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "nx,ny,n,iterations,converged,seconds,r_alg,r_sym,status");
    std::vector<std::string> rows;
    while (std::getline(in, line)) rows.push_back(line);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].rfind("1,1,2,", 0), 0u);
    EXPECT_NE(rows[0].find(",converged"), std::string::npos);
    EXPECT_EQ(rows[1].rfind("3,3,18,", 0), 0u);
    EXPECT_NE(rows[2].find(",grid-center-undefined"), std::string::npos);
}

TEST_F(Cli, PddeArtifactsRoundTrip)
{
    const auto r = run("pdde --nx 5 --ny 3 --f0 2.5 --tau 0.5 --out " + arg("pdde"));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const PddeSystem s = pdde_generate(5, 3, 2.5, 0.5);
    EXPECT_EQ(mm::read_real_file(path("pdde/A0.mtx").string()), s.problem.a0);
    EXPECT_EQ(mm::read_real_file(path("pdde/A1.mtx").string()), s.problem.a1);
    EXPECT_EQ(mm::read_real_file(path("pdde/W.mtx").string()), s.problem.w);
    EXPECT_EQ(mm::read_real_file(path("pdde/B0.mtx").string()), *s.problem.b0);
    EXPECT_EQ(mm::read_real_file(path("pdde/C0.mtx").string()), *s.problem.c0);
    const auto meta = read_summary(path("pdde/meta.txt"));
    EXPECT_EQ(meta.at("n"), "30");
    EXPECT_EQ(meta.at("f0"), "2.5");
    EXPECT_EQ(meta.at("tau"), "0.5");
}

TEST_F(Cli, EvenGridIsRejected)
{
    const auto r = run("pdde --nx 4 --ny 5 --out " + arg("pdde"));
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_NE(r.err.find("grid-center-undefined"), std::string::npos) << r.err;
}

TEST_F(Cli, IterationCapIsAnError)
{
    const auto r = run("solve --small-example --alpha 1 --maxit 1 --out " + arg("run"));
    EXPECT_NE(r.exit_code, 0);
    EXPECT_NE(r.err.find("krylov-maxit"), std::string::npos) << r.err;
    EXPECT_EQ(read_summary(path("run/summary.txt")).at("converged"), "0");
}

TEST_F(Cli, UnsolvablePreconditionerIsAnError)
{
    Matrix a0(2, 2);
    a0 << 1.0, 0.0, 0.0, -1.0;
    mm::write_file(path("A0.mtx").string(), a0);
    mm::write_file(path("A1.mtx").string(), Matrix::Zero(2, 2));
    const auto r = run("solve --A0 " + arg("A0.mtx") + " --A1 " + arg("A1.mtx") + " --out " + arg("run"));
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_NE(r.err.find("precond-unsolvable"), std::string::npos) << r.err;
}

TEST_F(Cli, BadArguments)
{
    EXPECT_NE(run("solve --small-example --scheme euler").exit_code, 0);
    EXPECT_NE(run("solve --small-example --c 0 --out " + arg("run")).exit_code, 0);
    EXPECT_NE(run("frobnicate").exit_code, 0);
    const auto missing = run("solve --A0 " + arg("nope.mtx") + " --A1 " + arg("nope.mtx"));
    EXPECT_EQ(missing.exit_code, 2);
    EXPECT_NE(missing.err.find("io"), std::string::npos);
}
