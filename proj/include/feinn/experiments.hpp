#pragma once

/// \file experiments.hpp
/// Experiment configuration and drivers behind the command-line tool:
/// single runs (with a Nitsche coefficient sweep), convergence studies,
/// moving-domain sweeps and inverse runs. Every driver writes CSV files
/// into an output directory.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "feinn/feinn.hpp"

namespace feinn {

struct GeometryConfig {
  std::string kind = "disk";  ///< disk | flower | halfplane
  Point center{0.5, 0.5};
  double radius = 0.4;
  Point point{0.5, 0.5};   ///< halfplane: a point on the boundary line
  Point normal{1.0, 0.0};  ///< halfplane: outward normal
};

struct MeshConfig {
  BoundingBox box{{0.0, 0.0}, {1.0, 1.0}};
  int nx = 20;
  int ny = 20;
  std::vector<int> sizes;  ///< convergence: cells per side, one entry per mesh
};

struct TrialConfig {
  int order = 2;
  std::vector<int> orders;  ///< convergence: order list at fixed mesh
  RefinementRule refinement = RefinementRule::Pow2;
};

struct NitscheConfig {
  std::vector<double> gamma{1e-2};
  double h = 0.0;  ///< 0 selects the coarse mesh size
  NitscheScale scale = NitscheScale::Global;
};

struct LossSection {
  LossKind kind = LossKind::L2;
  TestSpaceKind test_space = TestSpaceKind::Std;
  double gamma_g = 0.1;
};

struct ProblemConfig {
  ProblemKind kind = ProblemKind::Poisson;
  std::string solution = "smooth2d";
  Point beta{0.0, 0.0};
  double sigma = 0.0;
};

struct NnConfig {
  std::vector<int> arch{2, 50, 50, 50, 50, 1};
  Activation activation = Activation::Tanh;
  std::uint64_t seed = 1;
  bool rect = false;
};

struct InverseConfig {
  Point obs_lo{0.35, 0.35};
  Point obs_hi{0.65, 0.65};
  int obs_n = 10;
  double noise = 0.0;
  InverseSchedule schedule{};
  MisfitNorm misfit = MisfitNorm::Norm;
  std::vector<int> sigma_arch{2, 20, 20, 1};
  int field_samples = 41;  ///< sample grid per side for the field CSV
};

struct StudyConfig {
  bool train = true;  ///< false: interpolation-only (no network)
  std::vector<double> centers;  ///< moving-domain: x = y of the disk centre
};

struct OutputConfig {
  std::string dir = "out";
  int checkpoint_stride = 25;
  bool nn_errors = true;
  bool timing = true;
};

struct ExperimentConfig {
  GeometryConfig geometry;
  MeshConfig mesh;
  TrialConfig trial;
  NitscheConfig nitsche;
  LossSection loss;
  ProblemConfig problem;
  NnConfig nn;
  OptOptions optimizer{};
  std::optional<InverseConfig> inverse;
  StudyConfig study;
  OutputConfig output;
};

inline LevelSet make_geometry(const GeometryConfig& g) {
  if (g.kind == "disk") return shapes::disk(g.center, g.radius);
  if (g.kind == "flower") return shapes::flower(g.center);
  if (g.kind == "halfplane") return shapes::halfplane(g.point, g.normal);
  throw std::invalid_argument("unknown geometry kind '" + g.kind + "'");
}

inline ProblemDef make_problem(const ProblemConfig& p) {
  auto u = manufactured::by_name(p.solution);
  if (p.kind == ProblemKind::Poisson) return ProblemDef::poisson(std::move(u));
  return ProblemDef::nonlinear(std::move(u), p.beta, p.sigma);
}

inline ForwardOptions make_forward_options(const ExperimentConfig& c, int order, double gamma) {
  ForwardOptions o;
  o.order = order;
  o.refinement = c.trial.refinement;
  o.nitsche = {gamma, c.nitsche.h, c.nitsche.scale};
  o.loss = c.loss.kind;
  o.test_space = c.loss.test_space;
  o.gamma_g = c.loss.gamma_g;
  return o;
}

inline TrainOptions make_train_options(const ExperimentConfig& c) {
  TrainOptions t;
  t.optimizer = c.optimizer;
  t.checkpoint_stride = c.output.checkpoint_stride;
  t.nn_errors = c.output.nn_errors;
  t.timing = c.output.timing;
  return t;
}

/// Least-squares slope of log(e) against log(h); NaN with fewer than two points.
inline double loglog_slope(const std::vector<double>& h, const std::vector<double>& e) {
  if (h.size() != e.size()) throw std::invalid_argument("loglog_slope: size mismatch");
  const std::size_t n = h.size();
  if (n < 2) return kNaN;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double x = std::log(h[i]), y = std::log(e[i]);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Runs job(i) for i in [0, n) on up to `jobs` threads. Results must be
/// written to per-index slots; the first exception is rethrown.
inline void parallel_for(int n, int jobs, const std::function<void(int)>& job) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex m;
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (int i; (i = next++) < n;) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(m);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

namespace detail {

inline std::string gamma_tag(double g) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.0e", g);
  return buf;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

inline void field(std::ostream& os, double v) {
  if (!std::isnan(v)) os << v;
}

}  // namespace detail

// ------------------------------------------------------------------- run

struct RunResult {
  double gamma = 0.0;
  TrainReport report;
  ErrorNorms baseline;
  Mlp net;
};

/// Trains one network per Nitsche coefficient, all from the same initial
/// parameters. Writes report_gamma_<g>.csv, net_gamma_<g>.txt and
/// summary.csv.
inline std::vector<RunResult> cmd_run(const ExperimentConfig& c, int jobs = 1) {
  const std::filesystem::path out = c.output.dir;
  std::filesystem::create_directories(out);
  BackgroundMesh mesh(c.mesh.box, c.mesh.nx, c.mesh.ny);
  LevelSet phi = make_geometry(c.geometry);
  const Mlp init = Mlp::init(c.nn.arch, c.nn.activation, c.nn.seed, c.nn.rect);
  std::vector<RunResult> results(c.nitsche.gamma.size());
  parallel_for(static_cast<int>(results.size()), jobs, [&](int i) {
    double g = c.nitsche.gamma[static_cast<std::size_t>(i)];
    ForwardProblem fp(make_problem(c.problem), mesh, phi, make_forward_options(c, c.trial.order, g));
    RunResult r;
    r.gamma = g;
    r.net = init;
    r.report = train_forward(fp, r.net, make_train_options(c));
    r.baseline = fp.baseline();
    results[static_cast<std::size_t>(i)] = std::move(r);
  });
  auto summary = detail::open_out(out / "summary.csv");
  summary << "gamma,iterations,status,final_loss,l2_err_interp,h1_err_interp,l2_err_nn,h1_err_nn,l2_baseline,h1_baseline\n";
  summary.precision(10);
  for (const auto& r : results) {
    auto tag = detail::gamma_tag(r.gamma);
    auto rep = detail::open_out(out / ("report_gamma_" + tag + ".csv"));
    r.report.write_csv(rep);
    auto snap = detail::open_out(out / ("net_gamma_" + tag + ".txt"));
    r.net.save(snap);
    const TrainRecord& last = r.report.last();
    summary << r.gamma << ',' << r.report.iterations << ',' << to_string(r.report.status) << ',' << last.loss << ',';
    detail::field(summary, last.l2_err_interp);
    summary << ',';
    detail::field(summary, last.h1_err_interp);
    summary << ',';
    detail::field(summary, last.l2_err_nn);
    summary << ',';
    detail::field(summary, last.h1_err_nn);
    summary << ',' << r.baseline.l2 << ',' << r.baseline.h1 << '\n';
  }
  return results;
}

// ----------------------------------------------------------- convergence

struct ConvergenceRow {
  double h = 0.0;
  int order = 0;
  int trial_dofs = 0;
  ErrorNorms exact_interp;
  ErrorNorms nn_interp{kNaN, kNaN};
  ErrorNorms nn{kNaN, kNaN};
};

struct ConvergenceResult {
  std::vector<ConvergenceRow> rows;
  double slope_l2 = kNaN;  ///< of pi_h(u*) errors against h; NaN unless several meshes
  double slope_h1 = kNaN;
  double slope_l2_nn_interp = kNaN;
  double slope_h1_nn_interp = kNaN;
};

/// Mesh study (mesh.sizes) or order study (trial.orders). Writes
/// convergence.csv and convergence_slopes.csv.
inline ConvergenceResult cmd_convergence(const ExperimentConfig& c, int jobs = 1) {
  const bool mesh_study = !c.mesh.sizes.empty();
  if (mesh_study && !c.trial.orders.empty()) throw std::invalid_argument("convergence: give either mesh.sizes or trial.orders, not both");
  if (!mesh_study && c.trial.orders.empty()) throw std::invalid_argument("convergence: needs mesh.sizes or trial.orders");
  const int npts = static_cast<int>(mesh_study ? c.mesh.sizes.size() : c.trial.orders.size());
  LevelSet phi = make_geometry(c.geometry);
  ConvergenceResult res;
  res.rows.resize(static_cast<std::size_t>(npts));
  const double gamma = c.nitsche.gamma.at(0);
  parallel_for(npts, jobs, [&](int i) {
    int n = mesh_study ? c.mesh.sizes[static_cast<std::size_t>(i)] : c.mesh.nx;
    int ny = mesh_study ? n : c.mesh.ny;
    int k = mesh_study ? c.trial.order : c.trial.orders[static_cast<std::size_t>(i)];
    BackgroundMesh mesh(c.mesh.box, n, ny);
    ForwardOptions fo = make_forward_options(c, k, gamma);
    if (!c.study.train && fo.loss == LossKind::Dual) fo.loss = LossKind::L2;  // no Gram needed without training
    ForwardProblem fp(make_problem(c.problem), mesh, phi, fo);
    ConvergenceRow row;
    row.h = mesh.h();
    row.order = k;
    row.trial_dofs = fp.setup().trial.num_dofs();
    row.exact_interp = fp.baseline();
    if (c.study.train) {
      Mlp net = Mlp::init(c.nn.arch, c.nn.activation, c.nn.seed, c.nn.rect);
      TrainOptions t = make_train_options(c);
      t.checkpoint_stride = 0;
      train_forward(fp, net, t);
      row.nn_interp = fp.interp_errors(net);
      row.nn = fp.nn_errors(net);
    }
    res.rows[static_cast<std::size_t>(i)] = row;
  });
  if (mesh_study) {
    std::vector<double> h, l2, h1, l2n, h1n;
    for (const auto& r : res.rows) {
      h.push_back(r.h);
      l2.push_back(r.exact_interp.l2);
      h1.push_back(r.exact_interp.h1);
      l2n.push_back(r.nn_interp.l2);
      h1n.push_back(r.nn_interp.h1);
    }
    res.slope_l2 = loglog_slope(h, l2);
    res.slope_h1 = loglog_slope(h, h1);
    if (c.study.train) {
      res.slope_l2_nn_interp = loglog_slope(h, l2n);
      res.slope_h1_nn_interp = loglog_slope(h, h1n);
    }
  }
  const std::filesystem::path out = c.output.dir;
  std::filesystem::create_directories(out);
  auto os = detail::open_out(out / "convergence.csv");
  os << "h,order,trial_dofs,l2_err_exact_interp,h1_err_exact_interp,l2_err_interp,h1_err_interp,l2_err_nn,h1_err_nn\n";
  os.precision(10);
  for (const auto& r : res.rows) {
    os << r.h << ',' << r.order << ',' << r.trial_dofs << ',' << r.exact_interp.l2 << ',' << r.exact_interp.h1;
    for (double v : {r.nn_interp.l2, r.nn_interp.h1, r.nn.l2, r.nn.h1}) {
      os << ',';
      detail::field(os, v);
    }
    os << '\n';
  }
  auto ss = detail::open_out(out / "convergence_slopes.csv");
  ss << "quantity,slope\n";
  ss.precision(10);
  auto row = [&](const char* name, double v) {
    ss << name << ',';
    detail::field(ss, v);
    ss << '\n';
  };
  row("l2_err_exact_interp", res.slope_l2);
  row("h1_err_exact_interp", res.slope_h1);
  row("l2_err_interp", res.slope_l2_nn_interp);
  row("h1_err_interp", res.slope_h1_nn_interp);
  return res;
}

// --------------------------------------------------------- moving domain

struct MovingRow {
  double x = 0.0;
  ErrorNorms exact_interp;
  ErrorNorms nn_interp{kNaN, kNaN};
  ErrorNorms nn{kNaN, kNaN};
  double loss0 = kNaN;
  double loss = kNaN;
  bool finite = true;
};

struct MovingResult {
  std::vector<MovingRow> rows;
  double ratio_exact_h1 = 1.0;  ///< max/min of H1(pi_h u*) over positions
  double ratio_nn_interp_h1 = kNaN;
};

/// Disk centred at (x, x) for each x in study.centers. Writes
/// moving_domain.csv and moving_domain_summary.csv.
inline MovingResult cmd_moving_domain(const ExperimentConfig& c, int jobs = 1) {
  if (c.geometry.kind != "disk") throw std::invalid_argument("moving-domain: geometry.kind must be disk");
  if (c.study.centers.empty()) throw std::invalid_argument("moving-domain: study.centers is empty");
  const int npts = static_cast<int>(c.study.centers.size());
  BackgroundMesh mesh(c.mesh.box, c.mesh.nx, c.mesh.ny);
  const Mlp init = Mlp::init(c.nn.arch, c.nn.activation, c.nn.seed, c.nn.rect);
  MovingResult res;
  res.rows.resize(static_cast<std::size_t>(npts));
  parallel_for(npts, jobs, [&](int i) {
    double x = c.study.centers[static_cast<std::size_t>(i)];
    GeometryConfig g = c.geometry;
    g.center = {x, x};
    ForwardOptions fo = make_forward_options(c, c.trial.order, c.nitsche.gamma.at(0));
    if (!c.study.train && fo.loss == LossKind::Dual) fo.loss = LossKind::L2;
    ForwardProblem fp(make_problem(c.problem), mesh, make_geometry(g), fo);
    MovingRow row;
    row.x = x;
    row.exact_interp = fp.baseline();
    if (c.study.train) {
      Mlp net = init;
      TrainOptions t = make_train_options(c);
      t.checkpoint_stride = 0;
      auto rep = train_forward(fp, net, t);
      row.loss0 = rep.records.front().loss;
      row.loss = rep.last().loss;
      row.nn_interp = {rep.last().l2_err_interp, rep.last().h1_err_interp};
      row.nn = {rep.last().l2_err_nn, rep.last().h1_err_nn};
      row.finite = std::isfinite(row.loss) && std::isfinite(row.nn_interp.h1);
    }
    res.rows[static_cast<std::size_t>(i)] = row;
  });
  auto ratio = [&](auto get) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& r : res.rows) {
      lo = std::min(lo, get(r));
      hi = std::max(hi, get(r));
    }
    return hi / lo;
  };
  res.ratio_exact_h1 = ratio([](const MovingRow& r) { return r.exact_interp.h1; });
  if (c.study.train) res.ratio_nn_interp_h1 = ratio([](const MovingRow& r) { return r.nn_interp.h1; });

  const std::filesystem::path out = c.output.dir;
  std::filesystem::create_directories(out);
  auto os = detail::open_out(out / "moving_domain.csv");
  os << "x,l2_err_exact_interp,h1_err_exact_interp,l2_err_interp,h1_err_interp,l2_err_nn,h1_err_nn,loss_initial,loss_final\n";
  os.precision(10);
  for (const auto& r : res.rows) {
    os << r.x << ',' << r.exact_interp.l2 << ',' << r.exact_interp.h1;
    for (double v : {r.nn_interp.l2, r.nn_interp.h1, r.nn.l2, r.nn.h1, r.loss0, r.loss}) {
      os << ',';
      detail::field(os, v);
    }
    os << '\n';
  }
  auto ss = detail::open_out(out / "moving_domain_summary.csv");
  ss << "quantity,max_over_min\n";
  ss.precision(10);
  ss << "h1_err_exact_interp," << res.ratio_exact_h1 << "\nh1_err_interp,";
  detail::field(ss, res.ratio_nn_interp_h1);
  ss << '\n';
  return res;
}

// --------------------------------------------------------------- inverse

struct InverseRun {
  InverseReport report;
  Mlp unet, snet;
};

/// Three-step inverse run on the nonlinear problem with the inverse
/// benchmark coefficient. Writes inverse_history.csv, inverse_fields.csv
/// and both network snapshots.
inline InverseRun cmd_inverse(const ExperimentConfig& c) {
  if (!c.inverse) throw std::invalid_argument("inverse: missing inverse section");
  if (c.problem.kind != ProblemKind::Nonlinear) throw std::invalid_argument("inverse: problem.kind must be nonlinear");
  const InverseConfig& ic = *c.inverse;
  BackgroundMesh mesh(c.mesh.box, c.mesh.nx, c.mesh.ny);
  LevelSet phi = make_geometry(c.geometry);
  auto exact = manufactured::by_name(c.problem.solution);
  ProblemDef prob = ProblemDef::nonlinear(exact, c.problem.beta, manufactured::inverse_sigma);
  InverseOptions io;
  io.nitsche = {c.nitsche.gamma.at(0), c.nitsche.h, c.nitsche.scale};
  io.order = c.trial.order;
  io.schedule = ic.schedule;
  io.optimizer = c.optimizer;
  io.misfit = ic.misfit;
  io.checkpoint_stride = c.output.checkpoint_stride;
  io.timing = c.output.timing;
  auto obs = make_observations(phi, exact, ic.obs_lo, ic.obs_hi, ic.obs_n, ic.noise, c.nn.seed);
  InverseProblem ip(std::move(prob), manufactured::inverse_coefficient(), mesh, phi, std::move(obs), io);
  InverseRun run;
  run.unet = Mlp::init(c.nn.arch, c.nn.activation, c.nn.seed, false);
  run.snet = Mlp::init(ic.sigma_arch, c.nn.activation, c.nn.seed + 1, true);
  run.report = train_inverse(ip, run.unet, run.snet);

  const std::filesystem::path out = c.output.dir;
  std::filesystem::create_directories(out);
  auto hist = detail::open_out(out / "inverse_history.csv");
  run.report.write_csv(hist);
  auto fs = detail::open_out(out / "inverse_fields.csv");
  fs << "x,y,inside,u_exact,u_nn,sigma_exact,sigma_nn\n";
  fs.precision(10);
  const int ns = std::max(2, ic.field_samples);
  auto coeff = manufactured::inverse_coefficient();
  for (int j = 0; j < ns; ++j)
    for (int i = 0; i < ns; ++i) {
      Point p{c.mesh.box.lo.x + c.mesh.box.width() * i / (ns - 1), c.mesh.box.lo.y + c.mesh.box.height() * j / (ns - 1)};
      fs << p.x << ',' << p.y << ',' << (phi(p) < 0.0 ? 1 : 0) << ',' << exact.value(p) << ',' << run.unet(p) << ','
         << coeff.value(p) << ',' << run.snet(p) << '\n';
    }
  auto su = detail::open_out(out / "net_state.txt");
  run.unet.save(su);
  auto sc = detail::open_out(out / "net_coefficient.txt");
  run.snet.save(sc);
  return run;
}

}  // namespace feinn
