#pragma once

/// \file training.hpp
/// Residual losses, the parameter-gradient chain through the discrete
/// residual, and the forward and inverse training drivers.
///
/// Objectives: l2 minimizes 1/2 |r|^2, dual minimizes 1/2 r^T B^{-1} r and
/// l1 minimizes sum |r_i| (subgradient sign(0) = 0).

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "feinn/fespace.hpp"
#include "feinn/geometry.hpp"
#include "feinn/linalg.hpp"
#include "feinn/nn.hpp"
#include "feinn/optimize.hpp"
#include "feinn/problems.hpp"
#include "feinn/weakforms.hpp"

namespace feinn {

enum class LossKind { L1, L2, Dual };

inline LossKind loss_kind_from_string(const std::string& s) {
  if (s == "l1") return LossKind::L1;
  if (s == "l2") return LossKind::L2;
  if (s == "dual") return LossKind::Dual;
  throw std::invalid_argument("unknown loss kind '" + s + "'");
}

inline std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::L1: return "l1";
    case LossKind::L2: return "l2";
    case LossKind::Dual: return "dual";
  }
  return "?";
}

struct LossConfig {
  LossKind kind = LossKind::L2;
  const GramOperator* gram = nullptr;  ///< required for dual
};

struct ResidualLoss {
  double value = 0.0;
  Vector dloss_dr;
};

/// Loss value and its derivative with respect to the residual vector.
inline ResidualLoss residual_loss(std::span<const double> r, const LossConfig& cfg) {
  ResidualLoss out;
  out.dloss_dr.resize(r.size());
  switch (cfg.kind) {
    case LossKind::L1:
      for (std::size_t i = 0; i < r.size(); ++i) {
        out.value += std::abs(r[i]);
        out.dloss_dr[i] = detail::sign(r[i]);
      }
      break;
    case LossKind::L2:
      out.value = 0.5 * dot(r, r);
      out.dloss_dr.assign(r.begin(), r.end());
      break;
    case LossKind::Dual: {
      if (cfg.gram == nullptr) throw std::invalid_argument("dual loss requires a factored Gram operator");
      Vector red = cfg.gram->reduce(r);
      auto rz = apply_riesz(*cfg.gram, red);
      out.value = 0.5 * rz.dual_norm * rz.dual_norm;
      out.dloss_dr = cfg.gram->lift(rz.z);
      break;
    }
  }
  return out;
}

/// Residual and Jacobian access with A and b cached for the linear problem.
class ResidualEvaluator {
 public:
  explicit ResidualEvaluator(const NitscheAssembler& assembler) : asm_(&assembler) {
    if (assembler.is_linear()) {
      Vector zero(static_cast<std::size_t>(assembler.num_trial()), 0.0);
      a_ = assembler.jacobian(zero);
      b_ = assembler.load_vector();
    }
  }

  const NitscheAssembler& assembler() const { return *asm_; }

  Vector residual(std::span<const double> u, std::span<const double> sigma = {}) const {
    if (!asm_->is_linear()) return asm_->residual(u, sigma);
    Vector r = spmv(a_, u);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b_[i];
    return r;
  }

  /// Jacobian at u; the cached matrix for the linear problem.
  const SparseMatrix& jacobian(std::span<const double> u, std::span<const double> sigma = {}) const {
    if (asm_->is_linear()) return a_;
    scratch_ = asm_->jacobian(u, sigma);
    return scratch_;
  }

 private:
  const NitscheAssembler* asm_;
  SparseMatrix a_;
  Vector b_;
  mutable SparseMatrix scratch_;
};

/// Loss of the network's interpolant and its gradient with respect to the
/// network parameters. Only nodal values of the network enter.
inline std::pair<double, Vector> loss_and_grad(const Mlp& net, const InterpolationNodes& nodes, const ResidualEvaluator& res,
                                               const LossConfig& cfg) {
  ForwardTape tape;
  Vector vals = net.forward(nodes.points, &tape);
  Vector u(static_cast<std::size_t>(res.assembler().num_trial()), 0.0);
  for (std::size_t i = 0; i < nodes.size(); ++i) u[static_cast<std::size_t>(nodes.dofs[i])] = vals[i];
  Vector r = res.residual(u);
  ResidualLoss l = residual_loss(r, cfg);
  Vector cot = spmv_transpose(res.jacobian(u), l.dloss_dr);
  Vector w(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) w[i] = cot[static_cast<std::size_t>(nodes.dofs[i])];
  return {l.value, net.vjp_params(tape, w)};
}

enum class TestSpaceKind { Std, Ag };

struct ForwardOptions {
  int order = 2;
  RefinementRule refinement = RefinementRule::Pow2;
  NitscheParams nitsche{};
  GeometryOptions geometry{};
  LossKind loss = LossKind::L2;
  TestSpaceKind test_space = TestSpaceKind::Std;
  double gamma_g = 0.1;
  int error_degree = -1;  ///< defaults to 2k+3
};

/// Everything needed to train a network on one forward problem: spaces,
/// assembled operators, the interpolation nodes and error machinery.
class ForwardProblem {
 public:
  ForwardProblem(ProblemDef problem, const BackgroundMesh& coarse, const LevelSet& phi, ForwardOptions opts)
      : opts_(opts),
        setup_(make_setup(coarse, phi, opts.order, opts.refinement, opts.geometry)),
        assembler_(std::move(problem), setup_, opts.nitsche),
        residual_(assembler_),
        nodes_(interpolation_nodes(setup_.trial)),
        errors_(setup_.decomp, assembler_.problem().exact, opts.error_degree > 0 ? opts.error_degree : 2 * opts.order + 3) {
    if (opts_.loss == LossKind::Dual) {
      if (opts_.test_space == TestSpaceKind::Std) {
        gram_ = assemble_gram(setup_.test, setup_.decomp, GhostStabilization{opts_.gamma_g});
      } else {
        aggregation_ = aggregate(setup_.decomp, setup_.test);
        gram_ = assemble_gram(setup_.test, setup_.decomp, *aggregation_);
      }
    }
    errors_.bind_space(setup_.trial);
    interp_ = interpolate(setup_.trial, [this](Point p) { return assembler_.problem().exact.value(p); });
    baseline_ = errors_.fe_errors(interp_);
  }
  ForwardProblem(const ForwardProblem&) = delete;
  ForwardProblem& operator=(const ForwardProblem&) = delete;

  const ForwardOptions& options() const { return opts_; }
  const DiscreteSetup& setup() const { return setup_; }
  const NitscheAssembler& assembler() const { return assembler_; }
  const ResidualEvaluator& residual() const { return residual_; }
  const InterpolationNodes& nodes() const { return nodes_; }
  const GramOperator* gram() const { return gram_ ? &*gram_ : nullptr; }
  const AggregationMap* aggregation() const { return aggregation_ ? &*aggregation_ : nullptr; }
  LossConfig loss_config() const { return {opts_.loss, gram()}; }

  /// Coefficients of pi_h(u*) and its errors (the interpolation baseline).
  const Vector& interpolant() const { return interp_; }
  ErrorNorms baseline() const { return baseline_; }

  Vector nodal_values(const Mlp& net) const {
    Vector vals = net.forward(nodes_.points);
    Vector u(static_cast<std::size_t>(setup_.trial.num_dofs()), 0.0);
    for (std::size_t i = 0; i < nodes_.size(); ++i) u[static_cast<std::size_t>(nodes_.dofs[i])] = vals[i];
    return u;
  }

  ErrorNorms interp_errors(const Mlp& net) const { return errors_.fe_errors(nodal_values(net)); }
  ErrorNorms fe_errors(std::span<const double> coeffs) const { return errors_.fe_errors(coeffs); }

  ErrorNorms nn_errors(const Mlp& net) const {
    std::vector<double> v;
    std::vector<Point> g;
    net.forward_with_gradient(errors_.points(), v, g);
    return errors_.field_errors(v, g);
  }

  std::pair<double, Vector> loss_and_grad(const Mlp& net) const { return feinn::loss_and_grad(net, nodes_, residual_, loss_config()); }

 private:
  ForwardOptions opts_;
  DiscreteSetup setup_;
  NitscheAssembler assembler_;
  ResidualEvaluator residual_;
  InterpolationNodes nodes_;
  ErrorIntegrator errors_;
  std::optional<AggregationMap> aggregation_;
  std::optional<GramOperator> gram_;
  Vector interp_;
  ErrorNorms baseline_;
};

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct TrainRecord {
  int iter = 0;
  double loss = 0.0;
  double grad_inf = 0.0;
  double l2_err_interp = kNaN;
  double h1_err_interp = kNaN;
  double l2_err_nn = kNaN;
  double h1_err_nn = kNaN;
  double wall_s = 0.0;
  bool has_errors() const { return !std::isnan(l2_err_interp); }
};

namespace detail {
inline void csv_field(std::ostream& os, double v) {
  if (!std::isnan(v)) os << v;
}
}  // namespace detail

struct TrainReport {
  std::vector<TrainRecord> records;
  OptStatus status = OptStatus::MaxIters;
  int iterations = 0;
  long evaluations = 0;
  int fallbacks = 0;

  const TrainRecord& last() const { return records.back(); }
  /// Most recent record that carries error checkpoints.
  const TrainRecord* last_checkpoint() const {
    for (auto it = records.rbegin(); it != records.rend(); ++it)
      if (it->has_errors()) return &*it;
    return nullptr;
  }

  /// Columns: iter, loss, grad_inf, l2_err_interp, h1_err_interp, l2_err_nn,
  /// h1_err_nn, wall_s. Error columns are empty between checkpoints.
  void write_csv(std::ostream& os) const {
    os << "iter,loss,grad_inf,l2_err_interp,h1_err_interp,l2_err_nn,h1_err_nn,wall_s\n";
    os.precision(10);
    for (const auto& r : records) {
      os << r.iter << ',' << r.loss << ',' << r.grad_inf << ',';
      detail::csv_field(os, r.l2_err_interp);
      os << ',';
      detail::csv_field(os, r.h1_err_interp);
      os << ',';
      detail::csv_field(os, r.l2_err_nn);
      os << ',';
      detail::csv_field(os, r.h1_err_nn);
      os << ',' << r.wall_s << '\n';
    }
  }
};

struct TrainOptions {
  OptOptions optimizer{};
  int checkpoint_stride = 25;  ///< 0 disables intermediate error checkpoints
  bool nn_errors = true;       ///< also evaluate the network itself (costs a tangent sweep)
  bool timing = true;          ///< false writes wall_s = 0 for byte-stable replays
  double stop_l2_interp = 0.0; ///< stop once the L2 error of pi_h(u_N) reaches this (checked at checkpoints)
};

namespace detail {
class Stopwatch {
 public:
  explicit Stopwatch(bool on) : on_(on), t0_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    if (!on_) return 0.0;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  bool on_;
  std::chrono::steady_clock::time_point t0_;
};
}  // namespace detail

/// Trains `net` in place on a forward problem.
inline TrainReport train_forward(const ForwardProblem& fp, Mlp& net, const TrainOptions& opts) {
  TrainReport rep;
  detail::Stopwatch clock(opts.timing);
  Mlp probe = net;
  auto checkpoint = [&](TrainRecord& rec, std::span<const double> theta) {
    probe.set_params(theta);
    ErrorNorms ei = fp.interp_errors(probe);
    rec.l2_err_interp = ei.l2;
    rec.h1_err_interp = ei.h1;
    if (opts.nn_errors) {
      ErrorNorms en = fp.nn_errors(probe);
      rec.l2_err_nn = en.l2;
      rec.h1_err_nn = en.h1;
    }
  };
  Objective fn = [&](std::span<const double> theta, Vector& g) {
    probe.set_params(theta);
    auto [l, grad] = fp.loss_and_grad(probe);
    g = std::move(grad);
    return l;
  };
  auto on_iter = [&](const IterationInfo& info) {
    TrainRecord rec;
    rec.iter = info.iter;
    rec.loss = info.f;
    rec.grad_inf = info.grad_inf;
    bool stop = false;
    if (opts.checkpoint_stride > 0 && info.iter % opts.checkpoint_stride == 0) {
      checkpoint(rec, info.x);
      stop = opts.stop_l2_interp > 0.0 && rec.l2_err_interp <= opts.stop_l2_interp;
    }
    rec.wall_s = clock.seconds();
    rep.records.push_back(rec);
    return !stop;
  };
  OptResult res = minimize(fn, net.params(), opts.optimizer, on_iter);
  net.set_params(res.x);
  if (!rep.records.back().has_errors()) {
    checkpoint(rep.records.back(), res.x);
    rep.records.back().wall_s = clock.seconds();
  }
  rep.status = res.status;
  rep.iterations = res.iterations;
  rep.evaluations = res.evaluations;
  rep.fallbacks = res.fallbacks;
  return rep;
}

// ---------------------------------------------------------------- inverse

struct ObservationSet {
  std::vector<Point> points;
  Vector values;
};

/// Observations of `exact` on an n x n grid over [lo, hi], keeping points
/// with phi < 0. Additive Gaussian noise with standard deviation `noise`.
inline ObservationSet make_observations(const LevelSet& phi, const ManufacturedSolution& exact, Point lo, Point hi, int n,
                                        double noise = 0.0, std::uint64_t seed = 0) {
  if (n < 1) throw std::invalid_argument("make_observations: need at least one point per side");
  ObservationSet obs;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      double tx = n == 1 ? 0.5 : static_cast<double>(i) / (n - 1);
      double ty = n == 1 ? 0.5 : static_cast<double>(j) / (n - 1);
      Point p{lo.x + tx * (hi.x - lo.x), lo.y + ty * (hi.y - lo.y)};
      if (!(phi(p) < 0.0)) continue;
      obs.points.push_back(p);
      obs.values.push_back(exact.value(p) + (noise > 0.0 ? noise * gauss(rng) : 0.0));
    }
  if (obs.points.empty()) throw std::invalid_argument("make_observations: no observation point inside the domain");
  return obs;
}

struct InverseSubstep {
  int iters = 0;
  double alpha = 0.0;
};

struct InverseSchedule {
  int step1 = 400;
  int step2 = 100;
  std::vector<InverseSubstep> step3{{500, 0.01}, {500, 0.03}, {500, 0.09}};

  int total() const {
    int t = step1 + step2;
    for (const auto& s : step3) t += s.iters;
    return t;
  }

  void validate() const {
    if (step1 < 0 || step2 < 0) throw std::invalid_argument("inverse schedule: negative iteration count");
    for (std::size_t i = 0; i < step3.size(); ++i) {
      if (step3[i].iters < 0) throw std::invalid_argument("inverse schedule: negative iteration count");
      if (!(step3[i].alpha > 0.0)) throw std::invalid_argument("inverse schedule: alpha must be positive");
      if (i > 0 && !(step3[i].alpha > step3[i - 1].alpha)) {
        throw std::invalid_argument("inverse schedule: alpha must be strictly increasing across substeps");
      }
    }
  }
};

enum class MisfitNorm { Norm, HalfSquared };

struct InverseOptions {
  NitscheParams nitsche{};
  GeometryOptions geometry{};
  int order = 1;
  InverseSchedule schedule{};
  OptOptions optimizer{OptMethod::Bfgs};
  MisfitNorm misfit = MisfitNorm::Norm;  ///< |d - D(u)| as written, or 1/2 |d - D(u)|^2
  int checkpoint_stride = 25;
  bool timing = true;
};

struct InverseRecord {
  int iter = 0;
  int step = 0;  ///< 1, 2, or 3 + substep index
  double alpha = 0.0;
  double loss = 0.0;
  double grad_inf = 0.0;
  double u_l2_rel_interp = kNaN;
  double u_h1_rel_interp = kNaN;
  double u_l2_rel_nn = kNaN;
  double u_h1_rel_nn = kNaN;
  double sigma_l2_rel_interp = kNaN;
  double sigma_l2_rel_nn = kNaN;
  double wall_s = 0.0;
  bool has_errors() const { return !std::isnan(u_l2_rel_nn); }
};

struct InverseReport {
  std::vector<InverseRecord> records;
  std::vector<int> step_iterations;  ///< iterations executed per step / substep

  int total_iterations() const {
    int t = 0;
    for (int i : step_iterations) t += i;
    return t;
  }
  const InverseRecord* last_checkpoint() const {
    for (auto it = records.rbegin(); it != records.rend(); ++it)
      if (it->has_errors()) return &*it;
    return nullptr;
  }

  /// Columns: iter, step, alpha, loss, grad_inf, u_l2_rel_interp,
  /// u_h1_rel_interp, u_l2_rel_nn, u_h1_rel_nn, sigma_l2_rel_interp,
  /// sigma_l2_rel_nn, wall_s.
  void write_csv(std::ostream& os) const {
    os << "iter,step,alpha,loss,grad_inf,u_l2_rel_interp,u_h1_rel_interp,u_l2_rel_nn,u_h1_rel_nn,sigma_l2_rel_interp,sigma_l2_rel_nn,wall_s\n";
    os.precision(10);
    for (const auto& r : records) {
      os << r.iter << ',' << r.step << ',' << r.alpha << ',' << r.loss << ',' << r.grad_inf;
      for (double v : {r.u_l2_rel_interp, r.u_h1_rel_interp, r.u_l2_rel_nn, r.u_h1_rel_nn, r.sigma_l2_rel_interp, r.sigma_l2_rel_nn}) {
        os << ',';
        detail::csv_field(os, v);
      }
      os << ',' << r.wall_s << '\n';
    }
  }
};

/// Relative errors of the state and coefficient estimates.
struct InverseErrors {
  ErrorNorms u_interp, u_nn;
  double sigma_interp = 0.0, sigma_nn = 0.0;
};

/// Coefficient-identification problem: the state network u_N and the
/// coefficient network sigma_N, coupled through the l1 norm of the residual
/// of the nonlinear problem with sigma replaced by pi_h(sigma_N).
class InverseProblem {
 public:
  InverseProblem(ProblemDef problem, ManufacturedSolution true_sigma, const BackgroundMesh& coarse, const LevelSet& phi,
                 ObservationSet obs, InverseOptions opts)
      : opts_(std::move(opts)),
        obs_(std::move(obs)),
        true_sigma_(std::move(true_sigma)),
        setup_(make_setup(coarse, phi, opts_.order, RefinementRule::Pow2, opts_.geometry)),
        assembler_(std::move(problem), setup_, opts_.nitsche),
        nodes_(interpolation_nodes(setup_.trial)),
        u_err_(setup_.decomp, assembler_.problem().exact, 2 * opts_.order + 3),
        s_err_(setup_.decomp, true_sigma_, 2 * opts_.order + 3) {
    if (assembler_.problem().kind != ProblemKind::Nonlinear) throw std::invalid_argument("InverseProblem: needs the nonlinear problem");
    opts_.schedule.validate();
    for (Point p : obs_.points)
      if (!(phi(p) < 0.0)) throw std::invalid_argument("InverseProblem: observation point outside the domain");
    u_err_.bind_space(setup_.trial);
    s_err_.bind_space(setup_.trial);
  }
  InverseProblem(const InverseProblem&) = delete;
  InverseProblem& operator=(const InverseProblem&) = delete;

  const DiscreteSetup& setup() const { return setup_; }
  const NitscheAssembler& assembler() const { return assembler_; }
  const ObservationSet& observations() const { return obs_; }
  const InverseOptions& options() const { return opts_; }

  Vector nodal(const Mlp& net) const {
    Vector vals = net.forward(nodes_.points);
    Vector u(static_cast<std::size_t>(setup_.trial.num_dofs()), 0.0);
    for (std::size_t i = 0; i < nodes_.size(); ++i) u[static_cast<std::size_t>(nodes_.dofs[i])] = vals[i];
    return u;
  }

  /// Data misfit and its gradient with respect to the state parameters.
  double misfit(const Mlp& unet, Vector* grad) const {
    ForwardTape tape;
    Vector v = unet.forward(obs_.points, &tape);
    Vector e(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) e[i] = v[i] - obs_.values[i];
    double n2 = dot(e, e);
    double val = opts_.misfit == MisfitNorm::Norm ? std::sqrt(n2) : 0.5 * n2;
    if (grad) {
      if (opts_.misfit == MisfitNorm::Norm) {
        double s = n2 > 0.0 ? 1.0 / std::sqrt(n2) : 0.0;
        for (double& x : e) x *= s;
      }
      *grad = unet.vjp_params(tape, e);
    }
    return val;
  }

  /// l1 residual norm; gradients with respect to either network on request.
  double residual_l1(const Mlp& unet, const Mlp& snet, Vector* grad_u, Vector* grad_s) const {
    ForwardTape tu, ts;
    Vector uv = unet.forward(nodes_.points, grad_u ? &tu : nullptr);
    Vector sv = snet.forward(nodes_.points, grad_s ? &ts : nullptr);
    Vector u(uv.size()), s(sv.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      u[static_cast<std::size_t>(nodes_.dofs[i])] = uv[i];
      s[static_cast<std::size_t>(nodes_.dofs[i])] = sv[i];
    }
    Vector r = assembler_.residual(u, s);
    ResidualLoss l = residual_loss(r, {LossKind::L1, nullptr});
    auto pull = [&](const SparseMatrix& j, const Mlp& net, const ForwardTape& tape) {
      Vector cot = spmv_transpose(j, l.dloss_dr);
      Vector w(nodes_.size());
      for (std::size_t i = 0; i < nodes_.size(); ++i) w[i] = cot[static_cast<std::size_t>(nodes_.dofs[i])];
      return net.vjp_params(tape, w);
    };
    if (grad_u) *grad_u = pull(assembler_.jacobian(u, s), unet, tu);
    if (grad_s) *grad_s = pull(assembler_.jacobian_sigma(u), snet, ts);
    return l.value;
  }

  InverseErrors errors(const Mlp& unet, const Mlp& snet) const {
    InverseErrors e;
    auto rel = [](ErrorNorms a, ErrorNorms ref) { return ErrorNorms{a.l2 / ref.l2, a.h1 / ref.h1}; };
    e.u_interp = rel(u_err_.fe_errors(nodal(unet)), u_err_.exact_norms());
    std::vector<double> v;
    std::vector<Point> g;
    unet.forward_with_gradient(u_err_.points(), v, g);
    e.u_nn = rel(u_err_.field_errors(v, g), u_err_.exact_norms());
    e.sigma_interp = s_err_.fe_errors(nodal(snet)).l2 / s_err_.exact_norms().l2;
    snet.forward_with_gradient(s_err_.points(), v, g);
    e.sigma_nn = s_err_.field_errors(v, g).l2 / s_err_.exact_norms().l2;
    return e;
  }

 private:
  InverseOptions opts_;
  ObservationSet obs_;
  ManufacturedSolution true_sigma_;
  DiscreteSetup setup_;
  NitscheAssembler assembler_;
  InterpolationNodes nodes_;
  ErrorIntegrator u_err_;
  ErrorIntegrator s_err_;
};

/// Three-step training: misfit only over the state network, residual only
/// over the coefficient network, then both jointly for each (iters, alpha).
inline InverseReport train_inverse(const InverseProblem& ip, Mlp& unet, Mlp& snet) {
  const auto& o = ip.options();
  InverseReport rep;
  detail::Stopwatch clock(o.timing);
  int offset = 0;
  int step = 0;
  double alpha = 0.0;
  Mlp pu = unet, ps = snet;
  const std::size_t nu = unet.num_params();

  auto on_iter = [&](std::function<void(std::span<const double>)> load) {
    return [&, load](const IterationInfo& info) {
      if (info.iter == 0 && !rep.records.empty()) return true;  // start point already recorded
      InverseRecord rec;
      rec.iter = offset + info.iter;
      rec.step = step;
      rec.alpha = alpha;
      rec.loss = info.f;
      rec.grad_inf = info.grad_inf;
      if (o.checkpoint_stride > 0 && rec.iter % o.checkpoint_stride == 0) {
        load(info.x);
        InverseErrors e = ip.errors(pu, ps);
        rec.u_l2_rel_interp = e.u_interp.l2;
        rec.u_h1_rel_interp = e.u_interp.h1;
        rec.u_l2_rel_nn = e.u_nn.l2;
        rec.u_h1_rel_nn = e.u_nn.h1;
        rec.sigma_l2_rel_interp = e.sigma_interp;
        rec.sigma_l2_rel_nn = e.sigma_nn;
      }
      rec.wall_s = clock.seconds();
      rep.records.push_back(rec);
      return true;
    };
  };
  auto run = [&](const Objective& fn, Vector x0, int iters, std::function<void(std::span<const double>)> load) {
    OptOptions oo = o.optimizer;
    oo.max_iters = iters;
    OptResult r = minimize(fn, std::move(x0), oo, on_iter(load));
    rep.step_iterations.push_back(r.iterations);
    offset += r.iterations;
    return r.x;
  };

  auto load_u = [&](std::span<const double> x) { pu.set_params(x); };
  auto load_s = [&](std::span<const double> x) { ps.set_params(x); };
  auto load_joint = [&](std::span<const double> x) {
    pu.set_params(x.subspan(0, nu));
    ps.set_params(x.subspan(nu));
  };

  step = 1;
  Objective f1 = [&](std::span<const double> x, Vector& g) {
    pu.set_params(x);
    return ip.misfit(pu, &g);
  };
  unet.set_params(run(f1, unet.params(), o.schedule.step1, load_u));
  pu = unet;

  step = 2;
  Objective f2 = [&](std::span<const double> x, Vector& g) {
    ps.set_params(x);
    return ip.residual_l1(unet, ps, nullptr, &g);
  };
  snet.set_params(run(f2, snet.params(), o.schedule.step2, load_s));
  ps = snet;

  for (std::size_t k = 0; k < o.schedule.step3.size(); ++k) {
    step = 3 + static_cast<int>(k);
    alpha = o.schedule.step3[k].alpha;
    Objective f3 = [&](std::span<const double> x, Vector& g) {
      load_joint(x);
      Vector gm, gu, gs;
      double val = ip.misfit(pu, &gm) + alpha * ip.residual_l1(pu, ps, &gu, &gs);
      g.resize(x.size());
      for (std::size_t i = 0; i < nu; ++i) g[i] = gm[i] + alpha * gu[i];
      for (std::size_t i = 0; i < gs.size(); ++i) g[nu + i] = alpha * gs[i];
      return val;
    };
    Vector x0 = unet.params();
    x0.insert(x0.end(), snet.params().begin(), snet.params().end());
    Vector x = run(f3, std::move(x0), o.schedule.step3[k].iters, load_joint);
    unet.set_params(std::span<const double>(x).subspan(0, nu));
    snet.set_params(std::span<const double>(x).subspan(nu));
    pu = unet;
    ps = snet;
  }

  if (rep.records.empty() || !rep.records.back().has_errors()) {
    InverseErrors e = ip.errors(unet, snet);
    InverseRecord rec = rep.records.empty() ? InverseRecord{} : rep.records.back();
    rec.u_l2_rel_interp = e.u_interp.l2;
    rec.u_h1_rel_interp = e.u_interp.h1;
    rec.u_l2_rel_nn = e.u_nn.l2;
    rec.u_h1_rel_nn = e.u_nn.h1;
    rec.sigma_l2_rel_interp = e.sigma_interp;
    rec.sigma_l2_rel_nn = e.sigma_nn;
    rec.wall_s = clock.seconds();
    if (rep.records.empty()) rep.records.push_back(rec);
    else rep.records.back() = rec;
  }
  return rep;
}

}  // namespace feinn
