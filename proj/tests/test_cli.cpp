#include <gtest/gtest.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "config.hpp"

namespace fs = std::filesystem;
using namespace feinn;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("feinn_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) const {
    fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  // Runs the CLI; returns the exit status and leaves stderr in err_.
  int run(const std::string& args) {
    fs::path errf = dir_ / "stderr.txt";
    std::string cmd = std::string(FEINN_CLI_PATH) + " " + args + " > " + (dir_ / "stdout.txt").string() + " 2> " + errf.string();
    int st = std::system(cmd.c_str());
    err_ = slurp(errf);
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
  }

  fs::path dir_;
  std::string err_;
};

ExperimentConfig parse(const std::string& yaml) { return cli::parse_config(YAML::Load(yaml)); }

const char* kSmallRun = R"(geometry:
  kind: disk
  center: [0.5, 0.5]
  radius: 0.4
mesh:
  nx: 6
  ny: 6
trial:
  order: 2
nitsche:
  gamma: [1.0e-2, 1.0]
nn:
  arch: [2, 8, 8, 1]
  seed: 3
optimizer:
  iters: 12
output:
  checkpoint_stride: 5
  timing: false
)";

}  // namespace

TEST(Config, Defaults) {
  auto c = parse("geometry: {kind: disk}\n");
  EXPECT_EQ(c.geometry.kind, "disk");
  EXPECT_EQ(c.trial.order, 2);
  EXPECT_EQ(c.nitsche.gamma, std::vector<double>{1e-2});
  EXPECT_EQ(c.nitsche.scale, NitscheScale::Global);
  EXPECT_EQ(c.loss.kind, LossKind::L2);
  EXPECT_EQ(c.optimizer.method, OptMethod::Lbfgs);
  EXPECT_FALSE(c.inverse.has_value());
}

TEST(Config, MissingGeometryKindIsNamed) {
  try {
    parse("geometry: {radius: 0.3}\n");
    FAIL() << "expected a config error";
  } catch (const cli::ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("geometry.kind"), std::string::npos);
  }
  EXPECT_THROW(parse("mesh: {nx: 4}\n"), cli::ConfigError);
}

TEST(Config, UnknownKeysCarryTheLine) {
  try {
    parse("geometry:\n  kind: disk\nmesh:\n  nx: 4\n  nz: 3\n");
    FAIL() << "expected a config error";
  } catch (const cli::ConfigError& e) {
    std::string m = e.what();
    EXPECT_NE(m.find("line 5"), std::string::npos) << m;
    EXPECT_NE(m.find("mesh.nz"), std::string::npos) << m;
  }
  EXPECT_THROW(parse("geometry: {kind: disk}\nextra: 1\n"), cli::ConfigError);
}

TEST(Config, RejectsBadValues) {
  EXPECT_THROW(parse("geometry: {kind: square}\n"), cli::ConfigError);
  EXPECT_THROW(parse("geometry: {kind: disk}\nnitsche: {gamma: -1}\n"), cli::ConfigError);
  EXPECT_THROW(parse("geometry: {kind: disk}\nnn: {arch: [3, 4, 1]}\n"), cli::ConfigError);
  EXPECT_THROW(parse("geometry: {kind: disk}\nloss: {kind: linf}\n"), cli::ConfigError);
  EXPECT_THROW(parse("geometry: {kind: disk}\nmesh: {nx: many}\n"), cli::ConfigError);
  EXPECT_THROW(parse("geometry: {kind: disk}\ninverse: {step3: [{iters: 5, alpha: 0.1}, {iters: 5, alpha: 0.05}]}\n"),
               cli::ConfigError);
}

TEST(Config, NitscheScale) {
  EXPECT_EQ(parse("geometry: {kind: disk}\nnitsche: {scale: cell}\n").nitsche.scale, NitscheScale::Cell);
  EXPECT_EQ(parse("geometry: {kind: disk}\nnitsche: {scale: global}\n").nitsche.scale, NitscheScale::Global);
  EXPECT_THROW(parse("geometry: {kind: disk}\nnitsche: {scale: local}\n"), cli::ConfigError);
  // A scalar gamma is accepted as a one-element sweep.
  EXPECT_EQ(parse("geometry: {kind: disk}\nnitsche: {gamma: 100}\n").nitsche.gamma, std::vector<double>{100.0});
}

TEST(Config, DumpRoundTrips) {
  std::string text = std::string(kSmallRun) +
                     "inverse:\n  obs_n: 7\n  step1: 3\n  step2: 2\n  step3: [{iters: 2, alpha: 0.01}, {iters: 2, alpha: 0.02}]\n"
                     "problem: {kind: nonlinear, solution: invstate2d, beta: [2, 3]}\nnitsche: {gamma: [0.5], scale: cell}\n";
  // The second nitsche key would be a duplicate; drop the first.
  text.replace(text.find("nitsche:\n  gamma: [1.0e-2, 1.0]\n"), std::string("nitsche:\n  gamma: [1.0e-2, 1.0]\n").size(), "");
  auto c = parse(text);
  std::string once = cli::dump_config(c);
  EXPECT_EQ(cli::dump_config(parse(once)), once);
  EXPECT_EQ(parse(once).inverse->schedule.total(), 3 + 2 + 4);
}

TEST(Config, ShippedExamplesParse) {
  int n = 0;
  for (const auto& e : fs::directory_iterator(FEINN_CONFIG_DIR)) {
    if (e.path().extension() != ".yaml") continue;
    EXPECT_NO_THROW(cli::load_config(e.path().string())) << e.path();
    ++n;
  }
  EXPECT_GE(n, 5);
}

TEST(Slopes, LogLogFit) {
  std::vector<double> h{0.1, 0.05, 0.025}, e;
  for (double x : h) e.push_back(3.0 * x * x * x);
  EXPECT_NEAR(loglog_slope(h, e), 3.0, 1e-12);
  EXPECT_TRUE(std::isnan(loglog_slope({0.1}, {1.0})));
  EXPECT_THROW(loglog_slope({0.1, 0.2}, {1.0}), std::invalid_argument);
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("run"), 2);
  EXPECT_EQ(run("run --config " + (dir_ / "absent.yaml").string()), 2);
  EXPECT_NE(err_.find("absent.yaml"), std::string::npos);
}

TEST_F(CliTest, MissingGeometryKindExitsTwo) {
  auto cfg = write("bad.yaml", "geometry:\n  radius: 0.3\n");
  EXPECT_EQ(run("run --config " + cfg.string() + " --out " + (dir_ / "o").string()), 2);
  EXPECT_NE(err_.find("geometry.kind"), std::string::npos) << err_;
}

TEST_F(CliTest, DriverInputErrorsExitTwo) {
  auto cfg = write("c.yaml", "geometry: {kind: disk}\nmesh: {nx: 4, ny: 4}\n");
  EXPECT_EQ(run("convergence --config " + cfg.string() + " --out " + (dir_ / "o").string()), 2);
  EXPECT_NE(err_.find("mesh.sizes"), std::string::npos) << err_;
}

TEST_F(CliTest, RunIsDeterministicAndWritesArtifacts) {
  auto cfg = write("run.yaml", kSmallRun);
  std::vector<std::string> files{"summary.csv", "report_gamma_1e-02.csv", "report_gamma_1e+00.csv", "net_gamma_1e-02.txt"};
  std::string first[4];
  for (int rep = 0; rep < 2; ++rep) {
    fs::path out = dir_ / ("out" + std::to_string(rep));
    ASSERT_EQ(run("run --config " + cfg.string() + " --out " + out.string()), 0) << err_;
    ASSERT_TRUE(fs::exists(out / "resolved_config.yaml"));
    for (std::size_t i = 0; i < files.size(); ++i) {
      ASSERT_TRUE(fs::exists(out / files[i])) << files[i];
      std::string s = slurp(out / files[i]);
      if (rep == 0) first[i] = s;
      else EXPECT_EQ(s, first[i]) << files[i] << " differs between identical runs";
    }
  }
  EXPECT_EQ(first[1].substr(0, first[1].find('\n')), "iter,loss,grad_inf,l2_err_interp,h1_err_interp,l2_err_nn,h1_err_nn,wall_s");
  EXPECT_EQ(first[0].substr(0, first[0].find('\n')),
            "gamma,iterations,status,final_loss,l2_err_interp,h1_err_interp,l2_err_nn,h1_err_nn,l2_baseline,h1_baseline");
  // The resolved config reproduces the run.
  fs::path again = dir_ / "again";
  ASSERT_EQ(run("run --config " + (dir_ / "out0" / "resolved_config.yaml").string() + " --out " + again.string()), 0) << err_;
  EXPECT_EQ(slurp(again / "report_gamma_1e-02.csv"), first[1]);
  // A different seed changes the history.
  fs::path other = dir_ / "other";
  ASSERT_EQ(run("run --config " + cfg.string() + " --seed 4 --out " + other.string()), 0);
  EXPECT_NE(slurp(other / "report_gamma_1e-02.csv"), first[1]);
}

TEST_F(CliTest, SingleMeshConvergenceLeavesSlopesEmpty) {
  auto cfg = write("conv.yaml", "geometry: {kind: disk}\nmesh: {sizes: [8]}\nstudy: {train: false}\n");
  ASSERT_EQ(run("convergence --config " + cfg.string() + " --out " + (dir_ / "o").string()), 0) << err_;
  std::string slopes = slurp(dir_ / "o" / "convergence_slopes.csv");
  EXPECT_EQ(slopes, "quantity,slope\nl2_err_exact_interp,\nh1_err_exact_interp,\nl2_err_interp,\nh1_err_interp,\n");
  std::string rows = slurp(dir_ / "o" / "convergence.csv");
  EXPECT_EQ(std::count(rows.begin(), rows.end(), '\n'), 2);
}

TEST(Convergence, OrderStudyErrorsDecrease) {
  auto c = parse("geometry: {kind: disk}\nmesh: {nx: 10, ny: 10}\ntrial: {orders: [1, 2, 3]}\nstudy: {train: false}\n");
  c.output.dir = (fs::temp_directory_path() / ("feinn_orders_" + std::to_string(::getpid()))).string();
  auto r = cmd_convergence(c);
  fs::remove_all(c.output.dir);
  ASSERT_EQ(r.rows.size(), 3u);
  for (std::size_t i = 1; i < 3; ++i) {
    EXPECT_LT(r.rows[i].exact_interp.l2, r.rows[i - 1].exact_interp.l2);
    EXPECT_LT(r.rows[i].exact_interp.h1, r.rows[i - 1].exact_interp.h1);
  }
}

TEST(MovingDomain, SinglePositionHasUnitRatio) {
  auto c = parse("geometry: {kind: disk, radius: 0.19}\nmesh: {nx: 10, ny: 10}\nstudy: {train: false, centers: [0.4]}\n");
  c.output.dir = (fs::temp_directory_path() / ("feinn_moving_" + std::to_string(::getpid()))).string();
  auto r = cmd_moving_domain(c);
  fs::remove_all(c.output.dir);
  EXPECT_EQ(r.ratio_exact_h1, 1.0);
  EXPECT_TRUE(std::isnan(r.ratio_nn_interp_h1));
}

TEST_F(CliTest, InverseWritesHistoryAndFields) {
  auto cfg = write("inv.yaml", R"(geometry: {kind: disk}
mesh: {nx: 6, ny: 6}
trial: {order: 1}
problem: {kind: nonlinear, solution: invstate2d, beta: [2, 3]}
nn: {arch: [2, 6, 1], seed: 2}
optimizer: {method: bfgs}
inverse:
  obs_n: 5
  step1: 4
  step2: 3
  step3: [{iters: 2, alpha: 0.01}, {iters: 2, alpha: 0.03}]
  sigma_arch: [2, 6, 1]
  field_samples: 9
output: {checkpoint_stride: 2, timing: false}
)");
  ASSERT_EQ(run("inverse --config " + cfg.string() + " --out " + (dir_ / "o").string()), 0) << err_;
  std::ifstream hist(dir_ / "o" / "inverse_history.csv");
  std::string line;
  std::getline(hist, line);
  EXPECT_EQ(line, "iter,step,alpha,loss,grad_inf,u_l2_rel_interp,u_h1_rel_interp,u_l2_rel_nn,u_h1_rel_nn,sigma_l2_rel_interp,sigma_l2_rel_nn,wall_s");
  std::ifstream fields(dir_ / "o" / "inverse_fields.csv");
  std::getline(fields, line);
  EXPECT_EQ(line, "x,y,inside,u_exact,u_nn,sigma_exact,sigma_nn");
  int n = 0;
  while (std::getline(fields, line)) {
    double sigma_nn = std::stod(line.substr(line.rfind(',') + 1));
    EXPECT_GE(sigma_nn, 0.01);
    ++n;
  }
  EXPECT_EQ(n, 81);
  EXPECT_TRUE(fs::exists(dir_ / "o" / "net_coefficient.txt"));
}

TEST_F(CliTest, InverseNeedsNonlinearProblem) {
  auto cfg = write("inv.yaml", "geometry: {kind: disk}\ninverse: {obs_n: 5}\n");
  EXPECT_EQ(run("inverse --config " + cfg.string() + " --out " + (dir_ / "o").string()), 2);
}
