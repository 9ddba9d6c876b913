// feinn command-line driver.
//
//   feinn run            --config run.yaml [--out DIR] [--seed N] [--jobs N]
//   feinn convergence    --config conv.yaml ...
//   feinn moving-domain  --config moving.yaml ...
//   feinn inverse        --config inverse.yaml ...
//
// Exit codes: 0 ok, 2 configuration error, 3 numerical failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "config.hpp"
#include "feinn/experiments.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericalFailure = 3;

struct Common {
  std::string config;
  std::string out;
  long long seed = -1;
  int jobs = 1;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "YAML experiment configuration")->required();
  sub->add_option("--out", c.out, "output directory (overrides output.dir)");
  sub->add_option("--seed", c.seed, "network seed (overrides nn.seed)")->check(CLI::NonNegativeNumber);
  sub->add_option("--jobs", c.jobs, "worker threads for independent study points")->check(CLI::PositiveNumber);
}

feinn::ExperimentConfig resolve(const Common& c) {
  auto cfg = feinn::cli::load_config(c.config);
  if (!c.out.empty()) cfg.output.dir = c.out;
  if (c.seed >= 0) cfg.nn.seed = static_cast<std::uint64_t>(c.seed);
  std::filesystem::create_directories(cfg.output.dir);
  std::ofstream(std::filesystem::path(cfg.output.dir) / "resolved_config.yaml") << feinn::cli::dump_config(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unfitted finite element interpolated neural networks"};
  app.require_subcommand(1);
  Common run_o, conv_o, move_o, inv_o;
  auto* run = app.add_subcommand("run", "train networks (one per Nitsche coefficient)");
  auto* conv = app.add_subcommand("convergence", "h- or order-convergence study");
  auto* move = app.add_subcommand("moving-domain", "disk moved along the diagonal");
  auto* inv = app.add_subcommand("inverse", "three-step coefficient identification");
  add_common(run, run_o);
  add_common(conv, conv_o);
  add_common(move, move_o);
  add_common(inv, inv_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (run->parsed()) {
      auto cfg = resolve(run_o);
      for (const auto& r : feinn::cmd_run(cfg, run_o.jobs)) {
        const auto& last = r.report.last();
        std::cout << "gamma " << r.gamma << ": " << r.report.iterations << " iterations, loss " << last.loss << ", H1(pi_h u_N) "
                  << last.h1_err_interp << " (baseline " << r.baseline.h1 << ")\n";
      }
    } else if (conv->parsed()) {
      auto cfg = resolve(conv_o);
      auto res = feinn::cmd_convergence(cfg, conv_o.jobs);
      std::cout << "slopes: L2 " << res.slope_l2 << ", H1 " << res.slope_h1 << "\n";
    } else if (move->parsed()) {
      auto cfg = resolve(move_o);
      auto res = feinn::cmd_moving_domain(cfg, move_o.jobs);
      std::cout << "max/min H1(pi_h u*) " << res.ratio_exact_h1 << ", max/min H1(pi_h u_N) " << res.ratio_nn_interp_h1 << "\n";
    } else if (inv->parsed()) {
      auto cfg = resolve(inv_o);
      auto res = feinn::cmd_inverse(cfg);
      const auto* last = res.report.last_checkpoint();
      std::cout << "relative L2: state " << last->u_l2_rel_nn << ", coefficient " << last->sigma_l2_rel_nn << "\n";
    }
  } catch (const feinn::cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  }
  return kOk;
}
