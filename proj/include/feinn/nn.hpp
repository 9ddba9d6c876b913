#pragma once

/// \file nn.hpp
/// Fully-connected feed-forward networks R^2 -> R with a flat parameter
/// vector and a reverse sweep for parameter gradients.
///
/// Parameter layout (layer-major): for each affine layer k = 1..L, the
/// weight matrix W_k (n_k x n_{k-1}, row-major) followed by the bias b_k.

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "feinn/linalg.hpp"
#include "feinn/mesh.hpp"

namespace feinn {

enum class Activation { Tanh, Softplus };

inline std::string to_string(Activation a) { return a == Activation::Tanh ? "tanh" : "softplus"; }

inline Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "softplus") return Activation::Softplus;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

namespace detail {

inline double activate(Activation a, double x) {
  if (a == Activation::Tanh) return std::tanh(x);
  return x > 30.0 ? x : std::log1p(std::exp(x));
}

inline double activate_derivative(Activation a, double x) {
  if (a == Activation::Tanh) {
    double t = std::tanh(x);
    return 1.0 - t * t;
  }
  return 1.0 / (1.0 + std::exp(-x));
}

inline double sign(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace detail

inline std::size_t parameter_count(const std::vector<int>& arch) {
  std::size_t n = 0;
  for (std::size_t k = 1; k < arch.size(); ++k)
    n += static_cast<std::size_t>(arch[k]) * static_cast<std::size_t>(arch[k - 1]) + static_cast<std::size_t>(arch[k]);
  return n;
}

/// Activations of a forward pass, kept for a subsequent reverse sweep.
struct ForwardTape {
  std::size_t npts = 0;
  std::vector<std::vector<double>> pre;  ///< pre-activations per layer, point-major
  std::vector<std::vector<double>> act;  ///< layer inputs; act[0] holds the points
  std::vector<double> output;
};

class Mlp {
 public:
  Mlp() = default;

  /// Glorot-uniform weights, zero biases; reproducible from `seed`.
  static Mlp init(std::vector<int> arch, Activation act, std::uint64_t seed, bool rectify = false) {
    validate(arch);
    Mlp m;
    m.arch_ = std::move(arch);
    m.act_ = act;
    m.rect_ = rectify;
    m.theta_.assign(parameter_count(m.arch_), 0.0);
    std::mt19937_64 rng(seed);
    std::size_t off = 0;
    for (std::size_t k = 1; k < m.arch_.size(); ++k) {
      const int nout = m.arch_[k], nin = m.arch_[k - 1];
      const double lim = std::sqrt(6.0 / (nin + nout));
      for (int i = 0; i < nout * nin; ++i) {
        double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        m.theta_[off++] = lim * (2.0 * u - 1.0);
      }
      off += static_cast<std::size_t>(nout);
    }
    return m;
  }

  /// Network with given parameters (length must match the architecture).
  static Mlp from_params(std::vector<int> arch, Activation act, bool rectify, Vector theta) {
    validate(arch);
    if (theta.size() != parameter_count(arch)) throw std::invalid_argument("Mlp: parameter vector length does not match architecture");
    Mlp m;
    m.arch_ = std::move(arch);
    m.act_ = act;
    m.rect_ = rectify;
    m.theta_ = std::move(theta);
    return m;
  }

  const std::vector<int>& arch() const { return arch_; }
  Activation activation() const { return act_; }
  bool rectified() const { return rect_; }
  std::size_t num_params() const { return theta_.size(); }
  const Vector& params() const { return theta_; }
  Vector& params() { return theta_; }
  void set_params(std::span<const double> t) {
    if (t.size() != theta_.size()) throw std::invalid_argument("Mlp::set_params: length mismatch");
    theta_.assign(t.begin(), t.end());
  }

  /// Network outputs at the points; records the tape when one is given.
  Vector forward(std::span<const Point> pts, ForwardTape* tape = nullptr) const {
    const std::size_t n = pts.size();
    const std::size_t L = arch_.size() - 1;
    std::vector<double> a(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
      a[2 * i] = pts[i].x;
      a[2 * i + 1] = pts[i].y;
    }
    if (tape) {
      tape->npts = n;
      tape->pre.assign(L, {});
      tape->act.assign(L, {});
    }
    std::size_t off = 0;
    std::vector<double> z;
    for (std::size_t k = 0; k < L; ++k) {
      const int nin = arch_[k], nout = arch_[k + 1];
      const double* W = &theta_[off];
      const double* b = W + nout * nin;
      z.assign(n * static_cast<std::size_t>(nout), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double* ai = &a[i * static_cast<std::size_t>(nin)];
        double* zi = &z[i * static_cast<std::size_t>(nout)];
        for (int o = 0; o < nout; ++o) {
          const double* wr = W + o * nin;
          double s = b[o];
          for (int j = 0; j < nin; ++j) s += wr[j] * ai[j];
          zi[o] = s;
        }
      }
      if (tape) {
        tape->act[k] = a;
        tape->pre[k] = z;
      }
      if (k + 1 < L) {
        a.resize(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) a[i] = detail::activate(act_, z[i]);
      }
      off += static_cast<std::size_t>(nout * nin + nout);
    }
    Vector out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = rect_ ? std::abs(z[i]) + 0.01 : z[i];
    if (tape) tape->output = out;
    return out;
  }

  double operator()(Point p) const { return forward(std::span<const Point>(&p, 1))[0]; }

  /// g = d(sum_i w_i N(x_i)) / d theta from a tape of the current parameters.
  Vector vjp_params(const ForwardTape& tape, std::span<const double> w) const {
    if (w.size() != tape.npts) throw std::invalid_argument("Mlp::vjp_params: cotangent length does not match point count");
    const std::size_t n = tape.npts;
    const std::size_t L = arch_.size() - 1;
    Vector g(theta_.size(), 0.0);
    std::vector<std::size_t> offs(L);
    for (std::size_t k = 0, off = 0; k < L; ++k) {
      offs[k] = off;
      off += static_cast<std::size_t>(arch_[k + 1] * arch_[k] + arch_[k + 1]);
    }
    // delta holds dLoss/dz for the current layer, point-major.
    std::vector<double> delta(n);
    const auto& zl = tape.pre[L - 1];
    for (std::size_t i = 0; i < n; ++i) delta[i] = rect_ ? w[i] * detail::sign(zl[i]) : w[i];
    std::vector<double> prev;
    for (std::size_t k = L; k-- > 0;) {
      const int nin = arch_[k], nout = arch_[k + 1];
      const double* W = &theta_[offs[k]];
      double* gW = &g[offs[k]];
      double* gb = gW + nout * nin;
      const auto& a = tape.act[k];
      for (std::size_t i = 0; i < n; ++i) {
        const double* di = &delta[i * static_cast<std::size_t>(nout)];
        const double* ai = &a[i * static_cast<std::size_t>(nin)];
        for (int o = 0; o < nout; ++o) {
          double d = di[o];
          if (d == 0.0) continue;
          gb[o] += d;
          double* row = gW + o * nin;
          for (int j = 0; j < nin; ++j) row[j] += d * ai[j];
        }
      }
      if (k == 0) break;
      const auto& zp = tape.pre[k - 1];
      prev.assign(n * static_cast<std::size_t>(nin), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double* di = &delta[i * static_cast<std::size_t>(nout)];
        double* pi = &prev[i * static_cast<std::size_t>(nin)];
        for (int o = 0; o < nout; ++o) {
          double d = di[o];
          if (d == 0.0) continue;
          const double* wr = W + o * nin;
          for (int j = 0; j < nin; ++j) pi[j] += d * wr[j];
        }
        for (int j = 0; j < nin; ++j) pi[j] *= detail::activate_derivative(act_, zp[i * static_cast<std::size_t>(nin) + static_cast<std::size_t>(j)]);
      }
      delta.swap(prev);
    }
    return g;
  }

  Vector vjp_params(std::span<const Point> pts, std::span<const double> w) const {
    if (w.size() != pts.size()) throw std::invalid_argument("Mlp::vjp_params: cotangent length does not match point count");
    ForwardTape tape;
    forward(pts, &tape);
    return vjp_params(tape, w);
  }

  /// Values and spatial gradients (forward tangent sweep). Used for
  /// diagnostic H1 errors of the network only, never in a loss.
  void forward_with_gradient(std::span<const Point> pts, std::vector<double>& values, std::vector<Point>& grads) const {
    const std::size_t L = arch_.size() - 1;
    values.resize(pts.size());
    grads.resize(pts.size());
    std::vector<double> a, ax, ay, z, zx, zy;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      a = {pts[i].x, pts[i].y};
      ax = {1.0, 0.0};
      ay = {0.0, 1.0};
      std::size_t off = 0;
      for (std::size_t k = 0; k < L; ++k) {
        const int nin = arch_[k], nout = arch_[k + 1];
        const double* W = &theta_[off];
        const double* b = W + nout * nin;
        z.assign(static_cast<std::size_t>(nout), 0.0);
        zx.assign(static_cast<std::size_t>(nout), 0.0);
        zy.assign(static_cast<std::size_t>(nout), 0.0);
        for (int o = 0; o < nout; ++o) {
          double s = b[o], sx = 0.0, sy = 0.0;
          for (int j = 0; j < nin; ++j) {
            double wv = W[o * nin + j];
            s += wv * a[static_cast<std::size_t>(j)];
            sx += wv * ax[static_cast<std::size_t>(j)];
            sy += wv * ay[static_cast<std::size_t>(j)];
          }
          z[static_cast<std::size_t>(o)] = s;
          zx[static_cast<std::size_t>(o)] = sx;
          zy[static_cast<std::size_t>(o)] = sy;
        }
        if (k + 1 < L) {
          a.resize(z.size());
          ax.resize(z.size());
          ay.resize(z.size());
          for (std::size_t o = 0; o < z.size(); ++o) {
            double d = detail::activate_derivative(act_, z[o]);
            a[o] = detail::activate(act_, z[o]);
            ax[o] = d * zx[o];
            ay[o] = d * zy[o];
          }
        }
        off += static_cast<std::size_t>(nout * nin + nout);
      }
      double s = rect_ ? detail::sign(z[0]) : 1.0;
      values[i] = rect_ ? std::abs(z[0]) + 0.01 : z[0];
      grads[i] = {s * zx[0], s * zy[0]};
    }
  }

  /// Text snapshot: a "feinn-mlp v1" header line, the architecture, the
  /// activation, the rectification flag, then one parameter per line.
  void save(std::ostream& os) const {
    os << "feinn-mlp v1\n" << arch_.size();
    for (int w : arch_) os << ' ' << w;
    os << '\n' << to_string(act_) << '\n' << (rect_ ? 1 : 0) << '\n' << theta_.size() << '\n';
    os.precision(17);
    for (double t : theta_) os << t << '\n';
  }

  static Mlp load(std::istream& is) {
    std::string magic, version;
    is >> magic >> version;
    if (magic != "feinn-mlp" || version != "v1") throw std::runtime_error("Mlp::load: not a feinn-mlp v1 snapshot");
    std::size_t nl = 0;
    is >> nl;
    std::vector<int> arch(nl);
    for (auto& w : arch) is >> w;
    std::string act;
    int rect = 0;
    std::size_t np = 0;
    is >> act >> rect >> np;
    Vector theta(np);
    for (auto& t : theta) is >> t;
    if (!is) throw std::runtime_error("Mlp::load: truncated snapshot");
    return from_params(std::move(arch), activation_from_string(act), rect != 0, std::move(theta));
  }

 private:
  static void validate(const std::vector<int>& arch) {
    if (arch.size() < 2) throw std::invalid_argument("Mlp: architecture needs at least input and output layers");
    if (arch.front() != 2 || arch.back() != 1) throw std::invalid_argument("Mlp: architecture must map 2 inputs to 1 output");
    for (int w : arch)
      if (w < 1) throw std::invalid_argument("Mlp: layer widths must be >= 1");
  }

  std::vector<int> arch_;
  Activation act_ = Activation::Tanh;
  bool rect_ = false;
  Vector theta_;
};

}  // namespace feinn
