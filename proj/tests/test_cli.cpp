#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <sys/wait.h>

#include "qma/config.hpp"
#include "qma/grid.hpp"
#include "qma/solver.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int code;
    std::string out;
};

RunResult run(const std::string& args) {
    const std::string cmd = std::string(QMA_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    std::string out;
    char buf[4096];
    while (std::size_t got = fread(buf, 1, sizeof(buf), pipe)) out.append(buf, got);
    const int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("qma_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_config(const fs::path& dir, const qma::Json& j) {
    const fs::path p = dir / "config.json";
    std::ofstream(p) << j.dump(2);
    return p;
}

std::string config_dir() { return QMA_CONFIG_DIR; }

TEST(Cli, SolveBallProblemWritesReport) {
    const fs::path dir = scratch("solve");
    const auto r = run("--output-dir " + dir.string() + " solve --config " + config_dir() + "/ball_norm_squared.json");
    ASSERT_EQ(r.code, 0) << r.out;
    const qma::Json report = qma::read_json_file((dir / "report.json").string());
    for (const char* key : {"iterations", "residual", "residual_history", "linf_error", "config_echo"})
        EXPECT_TRUE(report.contains(key)) << key;
    EXPECT_LE(report["linf_error"].get<double>(), 0.05);
    EXPECT_LE(report["residual"].get<double>(), 1e-6);
    EXPECT_EQ(report["residual_history"].size(), report["iterations"].get<std::size_t>() + 1);
}

TEST(Cli, SolveCsvRoundTripIsBitExact) {
    const fs::path dir = scratch("roundtrip");
    qma::Json j = qma::read_json_file(config_dir() + "/ball_norm_squared.json");
    j["grid_points"] = 9;
    const fs::path cfg = write_config(dir, j);
    const auto r = run("--output-dir " + dir.string() + " solve --config " + cfg.string());
    ASSERT_EQ(r.code, 0) << r.out;

    const qma::Config c = qma::parse_config(j);
    const auto mem = qma::solve_dirichlet(qma::make_problem(c), c.solver);
    const auto back = qma::read_csv_file((dir / "solution.csv").string(), qma::make_domain(c));
    ASSERT_EQ(back.mask, mem.u.mask);
    ASSERT_EQ(back.size(), mem.u.size());
    for (std::size_t i = 0; i < back.size(); ++i)
        if (mem.u.in_closure(i)) ASSERT_EQ(back.values[i], mem.u.values[i]) << i;
}

TEST(Cli, ConfigEchoReproducesSolve) {
    const fs::path dir = scratch("echo");
    qma::Json j = qma::read_json_file(config_dir() + "/exponential_rhs.json");
    j["grid_points"] = 9;
    const fs::path cfg = write_config(dir, j);
    ASSERT_EQ(run("--output-dir " + (dir / "a").string() + " --seed 5 solve --config " + cfg.string()).code, 0);
    const qma::Json first = qma::read_json_file((dir / "a" / "report.json").string());
    const fs::path echo = dir / "echo.json";
    std::ofstream(echo) << first["config_echo"].dump(2);
    ASSERT_EQ(run("--output-dir " + (dir / "b").string() + " solve --config " + echo.string()).code, 0);
    const qma::Json second = qma::read_json_file((dir / "b" / "report.json").string());
    EXPECT_EQ(first["residual_history"], second["residual_history"]);
    EXPECT_EQ(first["linf_error"], second["linf_error"]);
    EXPECT_EQ(first["config_echo"], second["config_echo"]);
    EXPECT_EQ(first["config_echo"]["seed"], 5);
}

TEST(Cli, ValidateRejectsNegativeRhs) {
    const auto r = run("validate --config " + config_dir() + "/negative_rhs.json");
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("nonnegative"), std::string::npos) << r.out;
}

TEST(Cli, ValidateRejectsDecreasingRhsAndBadInput) {
    const fs::path dir = scratch("validate");
    auto code_for = [&](const qma::Json& j) {
        return run("validate --config " + write_config(dir, j).string());
    };
    auto r = code_for({{"F", "exp(-t)"}, {"g", "normq"}});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("non-decreasing"), std::string::npos) << r.out;
    r = code_for({{"F", "8 * (1 +"}, {"g", "normq"}});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("column"), std::string::npos) << r.out;
    r = code_for({{"F", "8"}, {"g", "t"}});
    EXPECT_EQ(r.code, 1);
    r = code_for({{"F", "8"}, {"g", "x4"}});
    EXPECT_EQ(r.code, 1);
    r = code_for({{"F", "8"}, {"g", "normq"}, {"colour", 1}});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("colour"), std::string::npos);
    r = code_for({{"F", "8"}, {"g", "normq"}});
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(run("validate --config /nonexistent/config.json").code, 1);
    EXPECT_EQ(run("solve --bogus-flag").code, 1);
}

TEST(Cli, NonConvergenceExitsTwo) {
    const fs::path dir = scratch("nonconv");
    qma::Json j = qma::read_json_file(config_dir() + "/ball_norm_squared.json");
    j["grid_points"] = 9;
    j["max_iter"] = 5;
    const auto r = run("--output-dir " + dir.string() + " solve --config " + write_config(dir, j).string());
    EXPECT_EQ(r.code, 2) << r.out;
    EXPECT_TRUE(fs::exists(dir / "report.json"));
    EXPECT_FALSE(qma::read_json_file((dir / "report.json").string())["converged"].get<bool>());
}

TEST(Cli, MooreDetIdentityBothPaths) {
    const auto r = run("moore-det --config " + config_dir() + "/moore_det.json");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("eigenvalue_path  1\n"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("oracle_path      1\n"), std::string::npos) << r.out;
    EXPECT_EQ(run("moore-det --matrix /nonexistent.txt").code, 1);
}

TEST(Cli, PshCheckReportsWitness) {
    const auto r = run("psh-check --config " + config_dir() + "/psh_check.json");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("plurisubharmonic no"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("witness"), std::string::npos);
    const fs::path dir = scratch("psh");
    const auto ok = run("psh-check --config " + write_config(dir, {{"psh_field", "normq"}, {"psh_samples", 10}}).string());
    EXPECT_NE(ok.out.find("plurisubharmonic yes"), std::string::npos) << ok.out;
}

TEST(Cli, ConvolveWritesCsv) {
    const fs::path dir = scratch("convolve");
    const auto r = run("--output-dir " + dir.string() + " convolve --config " + config_dir() + "/convolve.json");
    ASSERT_EQ(r.code, 0) << r.out;
    const auto f = qma::read_csv_file((dir / "convolution.csv").string());
    std::size_t interior = 0;
    for (auto k : f.mask) interior += k == qma::NodeKind::Interior;
    EXPECT_GT(interior, 0u);
    qma::Json j = qma::read_json_file(config_dir() + "/convolve.json");
    j["A"] = 0.5;
    EXPECT_EQ(run("--output-dir " + dir.string() + " convolve --config " + write_config(dir, j).string()).code, 1);
}

TEST(Cli, PropertiesAreSeedDeterministic) {
    const auto a = run("--seed 11 properties --config " + config_dir() + "/properties.json");
    const auto b = run("--seed 11 properties --config " + config_dir() + "/properties.json");
    ASSERT_EQ(a.code, 0) << a.out;
    EXPECT_EQ(a.out, b.out);
    EXPECT_NE(a.out.find("PASS"), std::string::npos);
    EXPECT_EQ(a.out.find("FAIL"), std::string::npos);
}

}  // namespace
