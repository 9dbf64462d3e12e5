#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "homoclinic/cli.hpp"

using namespace homoclinic;
namespace fs = std::filesystem;

namespace {

RunConfig parse(std::vector<std::string> args) {
  args.insert(args.begin(), "homoclinic");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return parse_config(static_cast<int>(argv.size()), argv.data());
}

fs::path scratch(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("homoclinic_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& path, const std::string& text) { std::ofstream(path) << text; }

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs the tool with stdout/stderr captured to files in `dir`.
int run(const std::string& args, const fs::path& dir) {
  std::string cmd = std::string(HOMOCLINIC_CLI_PATH) + " " + args + " > " + (dir / "stdout.txt").string() + " 2> " +
                    (dir / "stderr.txt").string();
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(ParseConfig, FlagsAndDefaults) {
  auto cfg = parse({"--problem", "example1", "--mode", "solve", "--k", "5"});
  EXPECT_EQ(cfg.problem, "example1");
  EXPECT_EQ(cfg.mode, Mode::solve);
  EXPECT_EQ(cfg.k, 5.0);
  EXPECT_EQ(cfg.nodes_per_unit, 64.0);
  EXPECT_EQ(cfg.solver.mp_tol, 1e-3);
  EXPECT_EQ(cfg.solver.newton_tol, 1e-8);
  EXPECT_EQ(cfg.window, 3.0);
  EXPECT_EQ(cfg.margin, 0.2);
  EXPECT_EQ(cfg.out, "out");
  EXPECT_FALSE(cfg.emit_svg);

  cfg = parse({"--problem=example1_compliant", "--mode=sweep", "--ladder", "5, 10,20", "--nodes-per-unit", "32",
               "--mp-tol", "1e-4", "--newton-tol", "1e-10", "--window", "2", "--margin", "0.1", "--out", "x", "--emit-svg"});
  EXPECT_EQ(cfg.ladder, (std::vector<double>{5, 10, 20}));
  EXPECT_EQ(cfg.nodes_per_unit, 32.0);
  EXPECT_EQ(cfg.solver.mp_tol, 1e-4);
  EXPECT_EQ(cfg.solver.newton_tol, 1e-10);
  EXPECT_EQ(cfg.window, 2.0);
  EXPECT_EQ(cfg.margin, 0.1);
  EXPECT_EQ(cfg.out, "x");
  EXPECT_TRUE(cfg.emit_svg);
}

TEST(ParseConfig, FiguresPresets) {
  auto cfg = parse({"--problem", "example1", "--mode", "figures"});
  EXPECT_EQ(cfg.ladder, (std::vector<double>{10, 16, 90, 140, 200}));
  EXPECT_TRUE(cfg.emit_svg);
  cfg = parse({"--problem", "example2", "--mode", "figures"});
  EXPECT_EQ(cfg.ladder, (std::vector<double>{10, 16, 90, 140}));
  EXPECT_THROW(parse({"--problem", "example1_compliant", "--mode", "figures"}), UsageError);
  cfg = parse({"--problem", "example1_compliant", "--mode", "figures", "--ladder", "5,10"});
  EXPECT_EQ(cfg.ladder, (std::vector<double>{5, 10}));
}

TEST(ParseConfig, UsageErrors) {
  EXPECT_THROW(parse({}), UsageError);
  EXPECT_THROW(parse({"--problem", "example1"}), UsageError);
  EXPECT_THROW(parse({"--problem", "example1", "--mode", "walk"}), UsageError);
  EXPECT_THROW(parse({"--problem", "example1", "--mode", "solve"}), UsageError);
  EXPECT_THROW(parse({"--problem", "example1", "--mode", "solve", "--k", "0.5"}), UsageError);
  EXPECT_THROW(parse({"--problem", "example1", "--mode", "solve", "--k", "five"}), UsageError);
  EXPECT_THROW(parse({"--problem", "example1", "--mode", "sweep"}), UsageError);
  EXPECT_THROW(parse({"--problem", "example1", "--mode", "sweep", "--ladder", "10,5"}), UsageError);
  EXPECT_THROW(parse({"--problem", "example1", "--mode", "sweep", "--ladder", "2,5"}), UsageError);
  EXPECT_THROW(parse({"--problem", "example1", "--mode", "audit", "--margin", "0.7"}), UsageError);
  EXPECT_THROW(parse({"--problem", "example1", "--mode", "audit", "--mp-tol", "-1"}), UsageError);
  EXPECT_THROW(parse({"--problem", "example1", "--mode", "audit", "--colour", "red"}), UsageError);
  EXPECT_THROW(parse({"--problem", "example1", "--mode", "audit", "--config", "/nonexistent/run.cfg"}), UsageError);
}

TEST(ParseConfig, HelpAndVersion) {
  try {
    parse({"--help"});
    FAIL();
  } catch (const HelpRequested& h) {
    EXPECT_NE(std::string(h.what()).find("--nodes-per-unit"), std::string::npos);
  }
  try {
    parse({"--version"});
    FAIL();
  } catch (const HelpRequested& h) {
    EXPECT_EQ(std::string(h.what()), std::string(kVersion) + "\n");
  }
}

TEST(ParseConfig, ConfigFileAndFlagPrecedence) {
  auto dir = scratch("config");
  write(dir / "run.cfg", "# solver run\n[run]\nproblem = example1_compliant\nmode = solve\nk = 5\n\n[solver]\nmp_tol = 1e-4\n"
                         "path_points = 24\nprecondition = off\nemit_svg = on\n");
  auto cfg = parse({"--config", (dir / "run.cfg").string()});
  EXPECT_EQ(cfg.problem, "example1_compliant");
  EXPECT_EQ(cfg.k, 5.0);
  EXPECT_EQ(cfg.solver.mp_tol, 1e-4);
  EXPECT_EQ(cfg.solver.path_points, 24u);
  EXPECT_FALSE(cfg.solver.precondition);
  EXPECT_TRUE(cfg.emit_svg);

  cfg = parse({"--config", (dir / "run.cfg").string(), "--k", "7", "--mp-tol", "1e-3"});
  EXPECT_EQ(cfg.k, 7.0);
  EXPECT_EQ(cfg.solver.mp_tol, 1e-3);

  write(dir / "bad.cfg", "problem = example1\nmode = audit\nnoise = 3\n");
  try {
    parse({"--config", (dir / "bad.cfg").string()});
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.cfg:3"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("noise"), std::string::npos);
  }
}

TEST(Tool, AuditExitCodes) {
  auto dir = scratch("audit");
  EXPECT_EQ(run("--problem example1 --mode audit --out " + (dir / "a").string(), dir), kExitViolations);
  auto j = nlohmann::json::parse(slurp(dir / "a" / "audit.json"));
  EXPECT_EQ(j["conditions"][4]["status"], "fail");
  EXPECT_TRUE(fs::exists(dir / "a" / "manifest.json"));
  EXPECT_EQ(run("--problem example1_compliant --mode audit --out " + (dir / "b").string(), dir), kExitOk);
  // The manifest is written before any report.
  auto out = slurp(dir / "stdout.txt");
  EXPECT_LT(out.find("manifest.json"), out.find("audit.json"));
}

TEST(Tool, SolveWritesReportAndTrajectory) {
  auto dir = scratch("solve");
  auto out = dir / "o";
  ASSERT_EQ(run("--problem example1_compliant --mode solve --k 5 --emit-svg --out " + out.string(), dir), kExitOk);
  auto j = nlohmann::json::parse(slurp(out / "solve.json"));
  EXPECT_TRUE(j["critical_point"]["converged"].get<bool>());
  EXPECT_LE(j["critical_point"]["residual_sup"].get<double>(), 1e-8);
  EXPECT_TRUE(j["bracket"]["within"].get<bool>());
  EXPECT_TRUE(j["bracket"]["guaranteed"].get<bool>());
  auto csv = slurp(out / "example1_compliant_k5.csv");
  EXPECT_EQ(csv.rfind("# k=5 N=320 h=0.03125\nt,q_1,dq_1,ddq_1\n", 0), 0u);
  EXPECT_TRUE(fs::exists(out / "example1_compliant_k5.svg"));
  auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(manifest["config"]["k"], 5.0);
  EXPECT_EQ(manifest["version"], kVersion);
}

TEST(Tool, UsageErrorsExitTwo) {
  auto dir = scratch("usage");
  EXPECT_EQ(run("--problem example1 --mode walk", dir), kExitUsage);
  EXPECT_EQ(run("--problem example1 --mode sweep --out " + (dir / "o").string(), dir), kExitUsage);
  EXPECT_EQ(run("--problem example1 --mode audit --bogus", dir), kExitUsage);
  EXPECT_EQ(run("--problem /nonexistent/problem.txt --mode audit --out " + (dir / "o").string(), dir), kExitUsage);
  EXPECT_NE(slurp(dir / "stderr.txt").find("neither a built-in"), std::string::npos);
  write(dir / "broken.txt", "mu = 4\na = 1\nf = 0\nG = q^4\ncolour = red\n");
  EXPECT_EQ(run("--problem " + (dir / "broken.txt").string() + " --mode audit --out " + (dir / "o").string(), dir), kExitUsage);
  EXPECT_EQ(run("--help", dir), kExitOk);
}

TEST(Tool, ProblemFileRuns) {
  auto dir = scratch("file");
  write(dir / "p.txt", "label = gauss\nmu = 4\na = (1/5)*exp(-t^2) + 1/10\nf = (1/20)*exp(-t^2/2)\nG = q^4\n");
  EXPECT_EQ(run("--problem " + (dir / "p.txt").string() + " --mode solve --k 4 --out " + (dir / "o").string(), dir), kExitOk);
  EXPECT_TRUE(fs::exists(dir / "o" / "gauss_k4.csv"));
}

TEST(Tool, UnconvergedGeometryExitsFour) {
  auto dir = scratch("geometry");
  write(dir / "p.txt", "mu = 4\na = 1/10\nf = exp(-t^2)\nG = q^2\n");
  EXPECT_EQ(run("--problem " + (dir / "p.txt").string() + " --mode solve --k 2 --out " + (dir / "o").string(), dir),
            kExitUnconverged);
  EXPECT_NE(slurp(dir / "stderr.txt").find("zeta"), std::string::npos);
}
