#pragma once

// YAML experiment configuration -> ExperimentConfig. Unknown keys and type
// errors are reported with the line they occur on.

#include <yaml-cpp/yaml.h>

#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "feinn/experiments.hpp"

namespace feinn::cli {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string where(const YAML::Node& n) {
  if (n.Mark().is_null()) return "";
  return "line " + std::to_string(n.Mark().line + 1) + ": ";
}

inline void require_map(const YAML::Node& n, const std::string& path) {
  if (!n.IsMap()) throw ConfigError(where(n) + "'" + path + "' must be a mapping");
}

inline void check_keys(const YAML::Node& n, const std::string& path, const std::set<std::string>& allowed) {
  require_map(n, path);
  for (const auto& kv : n) {
    auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw ConfigError(where(kv.first) + "unknown key '" + (path.empty() ? key : path + "." + key) + "' (allowed: " + list + ")");
    }
  }
}

template <typename T>
T get(const YAML::Node& n, const std::string& path) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(where(n) + "'" + path + "' has the wrong type");
  }
}

template <typename T>
void opt(const YAML::Node& parent, const std::string& key, const std::string& path, T& out) {
  if (auto n = parent[key]) out = get<T>(n, path + "." + key);
}

inline Point point(const YAML::Node& n, const std::string& path) {
  auto v = get<std::vector<double>>(n, path);
  if (v.size() != 2) throw ConfigError(where(n) + "'" + path + "' must be a list of two numbers");
  return {v[0], v[1]};
}

template <typename T>
std::vector<T> scalar_or_list(const YAML::Node& n, const std::string& path) {
  if (n.IsSequence()) return get<std::vector<T>>(n, path);
  return {get<T>(n, path)};
}

}  // namespace detail

inline ExperimentConfig parse_config(const YAML::Node& root) {
  using namespace detail;
  ExperimentConfig c;
  check_keys(root, "", {"geometry", "mesh", "trial", "nitsche", "ghost", "loss", "problem", "nn", "optimizer", "inverse", "study", "output"});

  auto g = root["geometry"];
  if (!g) throw ConfigError("missing required key 'geometry'");
  check_keys(g, "geometry", {"kind", "center", "radius", "point", "normal"});
  if (!g["kind"]) throw ConfigError(where(g) + "missing required key 'geometry.kind'");
  c.geometry.kind = get<std::string>(g["kind"], "geometry.kind");
  if (c.geometry.kind != "disk" && c.geometry.kind != "flower" && c.geometry.kind != "halfplane") {
    throw ConfigError(where(g["kind"]) + "'geometry.kind' must be disk, flower or halfplane");
  }
  if (g["center"]) c.geometry.center = point(g["center"], "geometry.center");
  opt(g, "radius", "geometry", c.geometry.radius);
  if (g["point"]) c.geometry.point = point(g["point"], "geometry.point");
  if (g["normal"]) c.geometry.normal = point(g["normal"], "geometry.normal");
  if (c.geometry.kind == "flower" && !g["center"]) c.geometry.center = {0.5, 0.5};

  if (auto m = root["mesh"]) {
    check_keys(m, "mesh", {"box", "nx", "ny", "n", "sizes"});
    if (auto b = m["box"]) {
      auto v = get<std::vector<double>>(b, "mesh.box");
      if (v.size() != 4) throw ConfigError(where(b) + "'mesh.box' must be [x0, y0, x1, y1]");
      c.mesh.box = {{v[0], v[1]}, {v[2], v[3]}};
    }
    if (m["n"]) c.mesh.nx = c.mesh.ny = get<int>(m["n"], "mesh.n");
    opt(m, "nx", "mesh", c.mesh.nx);
    opt(m, "ny", "mesh", c.mesh.ny);
    opt(m, "sizes", "mesh", c.mesh.sizes);
    if (c.mesh.nx < 1 || c.mesh.ny < 1) throw ConfigError(where(m) + "mesh cell counts must be >= 1");
  }

  if (auto t = root["trial"]) {
    check_keys(t, "trial", {"order", "orders", "refinement"});
    opt(t, "order", "trial", c.trial.order);
    opt(t, "orders", "trial", c.trial.orders);
    if (auto r = t["refinement"]) {
      auto s = get<std::string>(r, "trial.refinement");
      if (s == "pow2") c.trial.refinement = RefinementRule::Pow2;
      else if (s == "iso") c.trial.refinement = RefinementRule::Iso;
      else throw ConfigError(where(r) + "'trial.refinement' must be pow2 or iso");
    }
    if (c.trial.order < 1 || c.trial.order > 15) throw ConfigError(where(t) + "'trial.order' must be in [1, 15]");
  }

  if (auto n = root["nitsche"]) {
    check_keys(n, "nitsche", {"gamma", "h", "scale"});
    if (n["gamma"]) c.nitsche.gamma = scalar_or_list<double>(n["gamma"], "nitsche.gamma");
    for (double v : c.nitsche.gamma)
      if (!(v > 0.0)) throw ConfigError(where(n["gamma"]) + "'nitsche.gamma' values must be positive");
    opt(n, "h", "nitsche", c.nitsche.h);
    if (auto sc = n["scale"]) {
      auto v = get<std::string>(sc, "nitsche.scale");
      if (v == "global") c.nitsche.scale = NitscheScale::Global;
      else if (v == "cell") c.nitsche.scale = NitscheScale::Cell;
      else throw ConfigError(where(sc) + "'nitsche.scale' must be global or cell");
    }
  }

  if (auto gh = root["ghost"]) {
    check_keys(gh, "ghost", {"gamma_g"});
    opt(gh, "gamma_g", "ghost", c.loss.gamma_g);
  }

  if (auto l = root["loss"]) {
    check_keys(l, "loss", {"kind", "test_space"});
    if (auto k = l["kind"]) {
      try {
        c.loss.kind = loss_kind_from_string(get<std::string>(k, "loss.kind"));
      } catch (const std::invalid_argument&) {
        throw ConfigError(where(k) + "'loss.kind' must be l1, l2 or dual");
      }
    }
    if (auto ts = l["test_space"]) {
      auto s = get<std::string>(ts, "loss.test_space");
      if (s == "std") c.loss.test_space = TestSpaceKind::Std;
      else if (s == "ag") c.loss.test_space = TestSpaceKind::Ag;
      else throw ConfigError(where(ts) + "'loss.test_space' must be std or ag");
    }
  }

  if (auto p = root["problem"]) {
    check_keys(p, "problem", {"kind", "solution", "beta", "sigma"});
    if (auto k = p["kind"]) {
      auto s = get<std::string>(k, "problem.kind");
      if (s == "poisson") c.problem.kind = ProblemKind::Poisson;
      else if (s == "nonlinear") c.problem.kind = ProblemKind::Nonlinear;
      else throw ConfigError(where(k) + "'problem.kind' must be poisson or nonlinear");
    }
    if (auto s = p["solution"]) {
      c.problem.solution = get<std::string>(s, "problem.solution");
      if (c.problem.solution != "smooth2d" && c.problem.solution != "sharp2d" && c.problem.solution != "nonlinear2d" &&
          c.problem.solution != "invstate2d") {
        throw ConfigError(where(s) + "'problem.solution' must be smooth2d, sharp2d, nonlinear2d or invstate2d");
      }
    }
    if (p["beta"]) c.problem.beta = point(p["beta"], "problem.beta");
    opt(p, "sigma", "problem", c.problem.sigma);
  }

  if (auto n = root["nn"]) {
    check_keys(n, "nn", {"arch", "activation", "seed", "rect"});
    opt(n, "arch", "nn", c.nn.arch);
    if (auto a = n["activation"]) {
      auto s = get<std::string>(a, "nn.activation");
      if (s != "tanh" && s != "softplus") throw ConfigError(where(a) + "'nn.activation' must be tanh or softplus");
      c.nn.activation = activation_from_string(s);
    }
    opt(n, "seed", "nn", c.nn.seed);
    opt(n, "rect", "nn", c.nn.rect);
    if (c.nn.arch.size() < 2 || c.nn.arch.front() != 2 || c.nn.arch.back() != 1) {
      throw ConfigError(where(n) + "'nn.arch' must start with 2 and end with 1");
    }
    for (int w : c.nn.arch)
      if (w < 1) throw ConfigError(where(n) + "'nn.arch' widths must be >= 1");
  }

  if (auto o = root["optimizer"]) {
    check_keys(o, "optimizer", {"method", "memory", "iters", "tol"});
    if (auto m = o["method"]) {
      auto s = get<std::string>(m, "optimizer.method");
      if (s == "bfgs") c.optimizer.method = OptMethod::Bfgs;
      else if (s == "lbfgs") c.optimizer.method = OptMethod::Lbfgs;
      else throw ConfigError(where(m) + "'optimizer.method' must be bfgs or lbfgs");
    }
    opt(o, "memory", "optimizer", c.optimizer.memory);
    opt(o, "iters", "optimizer", c.optimizer.max_iters);
    opt(o, "tol", "optimizer", c.optimizer.grad_tol);
    if (c.optimizer.memory < 1) throw ConfigError(where(o) + "'optimizer.memory' must be >= 1");
    if (c.optimizer.max_iters < 0) throw ConfigError(where(o) + "'optimizer.iters' must be >= 0");
  }

  if (auto in = root["inverse"]) {
    check_keys(in, "inverse", {"obs_lo", "obs_hi", "obs_n", "noise", "step1", "step2", "step3", "misfit", "sigma_arch", "field_samples"});
    InverseConfig ic;
    if (in["obs_lo"]) ic.obs_lo = point(in["obs_lo"], "inverse.obs_lo");
    if (in["obs_hi"]) ic.obs_hi = point(in["obs_hi"], "inverse.obs_hi");
    opt(in, "obs_n", "inverse", ic.obs_n);
    opt(in, "noise", "inverse", ic.noise);
    opt(in, "step1", "inverse", ic.schedule.step1);
    opt(in, "step2", "inverse", ic.schedule.step2);
    if (auto s3 = in["step3"]) {
      if (!s3.IsSequence()) throw ConfigError(where(s3) + "'inverse.step3' must be a list of {iters, alpha}");
      ic.schedule.step3.clear();
      for (const auto& s : s3) {
        check_keys(s, "inverse.step3[]", {"iters", "alpha"});
        if (!s["iters"] || !s["alpha"]) throw ConfigError(where(s) + "'inverse.step3' entries need iters and alpha");
        ic.schedule.step3.push_back({get<int>(s["iters"], "inverse.step3.iters"), get<double>(s["alpha"], "inverse.step3.alpha")});
      }
    }
    try {
      ic.schedule.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(where(in) + e.what());
    }
    if (auto m = in["misfit"]) {
      auto s = get<std::string>(m, "inverse.misfit");
      if (s == "norm") ic.misfit = MisfitNorm::Norm;
      else if (s == "half_squared") ic.misfit = MisfitNorm::HalfSquared;
      else throw ConfigError(where(m) + "'inverse.misfit' must be norm or half_squared");
    }
    opt(in, "sigma_arch", "inverse", ic.sigma_arch);
    opt(in, "field_samples", "inverse", ic.field_samples);
    c.inverse = ic;
  }

  if (auto s = root["study"]) {
    check_keys(s, "study", {"train", "centers"});
    opt(s, "train", "study", c.study.train);
    opt(s, "centers", "study", c.study.centers);
  }

  if (auto o = root["output"]) {
    check_keys(o, "output", {"dir", "checkpoint_stride", "nn_errors", "timing"});
    opt(o, "dir", "output", c.output.dir);
    opt(o, "checkpoint_stride", "output", c.output.checkpoint_stride);
    opt(o, "nn_errors", "output", c.output.nn_errors);
    opt(o, "timing", "output", c.output.timing);
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw ConfigError("cannot read config file '" + path + "'");
  } catch (const YAML::ParserException& e) {
    throw ConfigError(std::string("YAML syntax error: ") + e.what());
  }
  if (!root || root.IsNull()) throw ConfigError("config file '" + path + "' is empty");
  return parse_config(root);
}

/// Resolved configuration, written beside every run's outputs.
inline std::string dump_config(const ExperimentConfig& c) {
  YAML::Emitter e;
  auto pt = [&](Point p) {
    e << YAML::Flow << YAML::BeginSeq << p.x << p.y << YAML::EndSeq;
  };
  e << YAML::BeginMap;
  e << YAML::Key << "geometry" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "kind" << YAML::Value << c.geometry.kind;
  e << YAML::Key << "center" << YAML::Value;
  pt(c.geometry.center);
  e << YAML::Key << "radius" << YAML::Value << c.geometry.radius;
  e << YAML::Key << "point" << YAML::Value;
  pt(c.geometry.point);
  e << YAML::Key << "normal" << YAML::Value;
  pt(c.geometry.normal);
  e << YAML::EndMap;
  e << YAML::Key << "mesh" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "box" << YAML::Value << YAML::Flow << YAML::BeginSeq << c.mesh.box.lo.x << c.mesh.box.lo.y << c.mesh.box.hi.x
    << c.mesh.box.hi.y << YAML::EndSeq;
  e << YAML::Key << "nx" << YAML::Value << c.mesh.nx << YAML::Key << "ny" << YAML::Value << c.mesh.ny;
  e << YAML::Key << "sizes" << YAML::Value << YAML::Flow << c.mesh.sizes << YAML::EndMap;
  e << YAML::Key << "trial" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "order" << YAML::Value << c.trial.order;
  e << YAML::Key << "orders" << YAML::Value << YAML::Flow << c.trial.orders;
  e << YAML::Key << "refinement" << YAML::Value << (c.trial.refinement == RefinementRule::Pow2 ? "pow2" : "iso") << YAML::EndMap;
  e << YAML::Key << "nitsche" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "gamma" << YAML::Value << YAML::Flow << c.nitsche.gamma;
  e << YAML::Key << "h" << YAML::Value << c.nitsche.h;
  e << YAML::Key << "scale" << YAML::Value << (c.nitsche.scale == NitscheScale::Global ? "global" : "cell") << YAML::EndMap;
  e << YAML::Key << "ghost" << YAML::Value << YAML::BeginMap << YAML::Key << "gamma_g" << YAML::Value << c.loss.gamma_g << YAML::EndMap;
  e << YAML::Key << "loss" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "kind" << YAML::Value << to_string(c.loss.kind);
  e << YAML::Key << "test_space" << YAML::Value << (c.loss.test_space == TestSpaceKind::Std ? "std" : "ag") << YAML::EndMap;
  e << YAML::Key << "problem" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "kind" << YAML::Value << (c.problem.kind == ProblemKind::Poisson ? "poisson" : "nonlinear");
  e << YAML::Key << "solution" << YAML::Value << c.problem.solution;
  e << YAML::Key << "beta" << YAML::Value;
  pt(c.problem.beta);
  e << YAML::Key << "sigma" << YAML::Value << c.problem.sigma << YAML::EndMap;
  e << YAML::Key << "nn" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "arch" << YAML::Value << YAML::Flow << c.nn.arch;
  e << YAML::Key << "activation" << YAML::Value << to_string(c.nn.activation);
  e << YAML::Key << "seed" << YAML::Value << c.nn.seed;
  e << YAML::Key << "rect" << YAML::Value << c.nn.rect << YAML::EndMap;
  e << YAML::Key << "optimizer" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "method" << YAML::Value << (c.optimizer.method == OptMethod::Bfgs ? "bfgs" : "lbfgs");
  e << YAML::Key << "memory" << YAML::Value << c.optimizer.memory;
  e << YAML::Key << "iters" << YAML::Value << c.optimizer.max_iters;
  e << YAML::Key << "tol" << YAML::Value << c.optimizer.grad_tol << YAML::EndMap;
  if (c.inverse) {
    const auto& ic = *c.inverse;
    e << YAML::Key << "inverse" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "obs_lo" << YAML::Value;
    pt(ic.obs_lo);
    e << YAML::Key << "obs_hi" << YAML::Value;
    pt(ic.obs_hi);
    e << YAML::Key << "obs_n" << YAML::Value << ic.obs_n;
    e << YAML::Key << "noise" << YAML::Value << ic.noise;
    e << YAML::Key << "step1" << YAML::Value << ic.schedule.step1;
    e << YAML::Key << "step2" << YAML::Value << ic.schedule.step2;
    e << YAML::Key << "step3" << YAML::Value << YAML::BeginSeq;
    for (const auto& s : ic.schedule.step3)
      e << YAML::Flow << YAML::BeginMap << YAML::Key << "iters" << YAML::Value << s.iters << YAML::Key << "alpha" << YAML::Value
        << s.alpha << YAML::EndMap;
    e << YAML::EndSeq;
    e << YAML::Key << "misfit" << YAML::Value << (ic.misfit == MisfitNorm::Norm ? "norm" : "half_squared");
    e << YAML::Key << "sigma_arch" << YAML::Value << YAML::Flow << ic.sigma_arch;
    e << YAML::Key << "field_samples" << YAML::Value << ic.field_samples << YAML::EndMap;
  }
  e << YAML::Key << "study" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "train" << YAML::Value << c.study.train;
  e << YAML::Key << "centers" << YAML::Value << YAML::Flow << c.study.centers << YAML::EndMap;
  e << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "dir" << YAML::Value << c.output.dir;
  e << YAML::Key << "checkpoint_stride" << YAML::Value << c.output.checkpoint_stride;
  e << YAML::Key << "nn_errors" << YAML::Value << c.output.nn_errors;
  e << YAML::Key << "timing" << YAML::Value << c.output.timing << YAML::EndMap;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

}  // namespace feinn::cli
