#pragma once

/// \file optimize.hpp
/// Quasi-Newton minimization (dense BFGS and L-BFGS) with a strong Wolfe
/// line search.

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "feinn/linalg.hpp"

namespace feinn {

/// Non-finite values or a breakdown the optimizer cannot recover from.
struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// f(x) with its gradient written to `grad` (resized by the callee if needed).
using Objective = std::function<double(std::span<const double>, Vector&)>;

enum class OptMethod { Bfgs, Lbfgs };

struct OptOptions {
  OptMethod method = OptMethod::Lbfgs;
  int memory = 20;
  int max_iters = 1000;
  double grad_tol = 1e-9;
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_evals = 25;
};

struct IterationInfo {
  int iter = 0;
  double f = 0.0;
  double grad_inf = 0.0;
  long evaluations = 0;
  bool fallback = false;  ///< step came from the steepest-descent fallback
  std::span<const double> x;
};

enum class OptStatus { MaxIters, GradTol, Stalled, Stopped };

inline std::string to_string(OptStatus s) {
  switch (s) {
    case OptStatus::MaxIters: return "max_iters";
    case OptStatus::GradTol: return "grad_tol";
    case OptStatus::Stalled: return "stalled";
    case OptStatus::Stopped: return "stopped";
  }
  return "?";
}

struct OptResult {
  Vector x;
  double f = 0.0;
  Vector grad;
  int iterations = 0;
  long evaluations = 0;
  int fallbacks = 0;
  OptStatus status = OptStatus::MaxIters;
};

namespace detail {

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline bool finite_all(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

/// Minimizer of the cubic interpolating (a, fa, ga), (b, fb, gb), clamped to
/// the interior of [min(a,b), max(a,b)]; bisection when degenerate.
inline double cubic_step(double a, double fa, double ga, double b, double fb, double gb) {
  double lo = std::min(a, b), hi = std::max(a, b);
  double d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
  double disc = d1 * d1 - ga * gb;
  double t = 0.5 * (a + b);
  if (disc >= 0.0) {
    double d2 = std::copysign(std::sqrt(disc), b - a);
    double denom = gb - ga + 2.0 * d2;
    if (denom != 0.0) t = b - (b - a) * (gb + d2 - d1) / denom;
  }
  double margin = 0.1 * (hi - lo);
  if (!std::isfinite(t) || t < lo + margin || t > hi - margin) t = 0.5 * (a + b);
  return t;
}

struct LineSearchResult {
  bool ok = false;
  double alpha = 0.0;
  double f = 0.0;
  Vector x;
  Vector g;
  long evals = 0;
};

/// Strong Wolfe line search along d from (x0, f0, g0).
inline LineSearchResult wolfe_search(const Objective& fn, std::span<const double> x0, double f0, std::span<const double> g0,
                                     std::span<const double> d, double alpha0, const OptOptions& o) {
  LineSearchResult out;
  const double dg0 = dot(g0, d);
  Vector x(x0.size()), g;
  auto eval = [&](double a, double& f, double& dg) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = x0[i] + a * d[i];
    f = fn(x, g);
    ++out.evals;
    dg = dot(g, d);
    return std::isfinite(f) && std::isfinite(dg) && finite_all(g);
  };
  auto accept = [&](double a, double f) {
    out.ok = true;
    out.alpha = a;
    out.f = f;
    out.x = x;
    out.g = g;
  };

  double a_prev = 0.0, f_prev = f0, dg_prev = dg0;
  double a = alpha0;
  bool first = true;
  while (out.evals < o.max_line_evals) {
    double f, dg;
    if (!eval(a, f, dg)) {
      a = 0.5 * (a_prev + a);  // non-finite trial: pull back toward the last good step
      continue;
    }
    if (f > f0 + o.c1 * a * dg0 || (!first && f >= f_prev)) {
      // zoom on [a_prev, a]
      double lo = a_prev, flo = f_prev, dglo = dg_prev;
      double hi = a, fhi = f, dghi = dg;
      while (out.evals < o.max_line_evals) {
        double t = cubic_step(lo, flo, dglo, hi, fhi, dghi);
        double ft, dgt;
        if (!eval(t, ft, dgt)) {
          hi = t;
          fhi = std::numeric_limits<double>::infinity();
          dghi = 0.0;
          continue;
        }
        if (ft > f0 + o.c1 * t * dg0 || ft >= flo) {
          hi = t, fhi = ft, dghi = dgt;
        } else {
          if (std::abs(dgt) <= -o.c2 * dg0) {
            accept(t, ft);
            return out;
          }
          if (dgt * (hi - lo) >= 0.0) hi = lo, fhi = flo, dghi = dglo;
          lo = t, flo = ft, dglo = dgt;
        }
        if (std::abs(hi - lo) <= 1e-16 * std::max(1.0, std::abs(lo))) break;
      }
      // Budget exhausted: accept the best sufficient-decrease point if any.
      if (lo > 0.0 && flo < f0) {
        eval(lo, flo, dglo);
        accept(lo, flo);
      }
      return out;
    }
    if (std::abs(dg) <= -o.c2 * dg0) {
      accept(a, f);
      return out;
    }
    if (dg >= 0.0) {
      double lo = a, flo = f, dglo = dg;
      double hi = a_prev, fhi = f_prev, dghi = dg_prev;
      while (out.evals < o.max_line_evals) {
        double t = cubic_step(lo, flo, dglo, hi, fhi, dghi);
        double ft, dgt;
        if (!eval(t, ft, dgt)) break;
        if (ft > f0 + o.c1 * t * dg0 || ft >= flo) {
          hi = t, fhi = ft, dghi = dgt;
        } else {
          if (std::abs(dgt) <= -o.c2 * dg0) {
            accept(t, ft);
            return out;
          }
          if (dgt * (hi - lo) >= 0.0) hi = lo, fhi = flo, dghi = dglo;
          lo = t, flo = ft, dglo = dgt;
        }
      }
      eval(lo, flo, dglo);
      if (flo < f0) accept(lo, flo);
      return out;
    }
    first = false;
    a_prev = a, f_prev = f, dg_prev = dg;
    a *= 2.0;
  }
  return out;
}

/// Armijo backtracking along -g; used when the Wolfe search fails.
inline LineSearchResult backtrack_steepest(const Objective& fn, std::span<const double> x0, double f0, std::span<const double> g0,
                                           const OptOptions& o) {
  LineSearchResult out;
  double gn = std::sqrt(dot(g0, g0));
  if (gn == 0.0) return out;
  Vector x(x0.size()), g;
  double a = 1.0 / gn;
  for (int k = 0; k < 60; ++k, a *= 0.5) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = x0[i] - a * g0[i];
    double f = fn(x, g);
    ++out.evals;
    if (std::isfinite(f) && finite_all(g) && f <= f0 - o.c1 * a * gn * gn) {
      out.ok = true;
      out.alpha = a;
      out.f = f;
      out.x = x;
      out.g = g;
      return out;
    }
  }
  return out;
}

}  // namespace detail

/// Minimizes `fn` from x0. `on_iter` runs after every accepted step (and once
/// for the starting point with iter 0); returning false stops the run.
inline OptResult minimize(const Objective& fn, Vector x0, const OptOptions& opts,
                          const std::function<bool(const IterationInfo&)>& on_iter = {}) {
  if (opts.method == OptMethod::Lbfgs && opts.memory < 1) throw std::invalid_argument("minimize: L-BFGS memory must be >= 1");
  if (!(opts.c1 > 0.0 && opts.c1 < opts.c2 && opts.c2 < 1.0)) throw std::invalid_argument("minimize: need 0 < c1 < c2 < 1");
  const std::size_t n = x0.size();
  OptResult res;
  res.x = std::move(x0);
  res.f = fn(res.x, res.grad);
  res.evaluations = 1;
  if (!std::isfinite(res.f) || !detail::finite_all(res.grad)) {
    throw NumericalFailure("minimize: non-finite loss or gradient at the starting point (f = " + std::to_string(res.f) + ")");
  }
  auto report = [&](bool fb) {
    if (!on_iter) return true;
    IterationInfo info{res.iterations, res.f, norm_inf(res.grad), res.evaluations, fb, res.x};
    return on_iter(info);
  };
  if (!report(false)) {
    res.status = OptStatus::Stopped;
    return res;
  }

  std::deque<Vector> S, Y;
  std::deque<double> rho;
  std::vector<double> H;  // dense inverse Hessian (BFGS)
  bool h_initialized = false;
  Vector d(n), alpha_hist;

  while (true) {
    if (norm_inf(res.grad) <= opts.grad_tol) {
      res.status = OptStatus::GradTol;
      return res;
    }
    if (res.iterations >= opts.max_iters) {
      res.status = OptStatus::MaxIters;
      return res;
    }
    // search direction
    bool have_curvature = opts.method == OptMethod::Lbfgs ? !S.empty() : h_initialized;
    if (opts.method == OptMethod::Lbfgs) {
      Vector q = res.grad;
      alpha_hist.assign(S.size(), 0.0);
      for (std::size_t i = S.size(); i-- > 0;) {
        alpha_hist[i] = rho[i] * dot(S[i], q);
        detail::axpy(-alpha_hist[i], Y[i], q);
      }
      if (!S.empty()) {
        double gam = dot(S.back(), Y.back()) / dot(Y.back(), Y.back());
        for (double& v : q) v *= gam;
      }
      for (std::size_t i = 0; i < S.size(); ++i) {
        double beta = rho[i] * dot(Y[i], q);
        detail::axpy(alpha_hist[i] - beta, S[i], q);
      }
      for (std::size_t i = 0; i < n; ++i) d[i] = -q[i];
    } else if (h_initialized) {
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        const double* row = &H[i * n];
        for (std::size_t j = 0; j < n; ++j) s += row[j] * res.grad[j];
        d[i] = -s;
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) d[i] = -res.grad[i];
    }
    if (dot(d, res.grad) >= 0.0) {  // not a descent direction: reset curvature
      S.clear(), Y.clear(), rho.clear();
      h_initialized = false;
      have_curvature = false;
      for (std::size_t i = 0; i < n; ++i) d[i] = -res.grad[i];
    }
    double alpha0 = have_curvature ? 1.0 : std::min(1.0, 1.0 / norm_inf(res.grad));

    auto ls = detail::wolfe_search(fn, res.x, res.f, res.grad, d, alpha0, opts);
    res.evaluations += ls.evals;
    bool fallback = false;
    if (!ls.ok) {
      ls = detail::backtrack_steepest(fn, res.x, res.f, res.grad, opts);
      res.evaluations += ls.evals;
      fallback = true;
      ++res.fallbacks;
      S.clear(), Y.clear(), rho.clear();
      h_initialized = false;
      if (!ls.ok) {
        if (!std::isfinite(res.f)) throw NumericalFailure("minimize: non-finite loss");
        res.status = OptStatus::Stalled;
        return res;
      }
    }
    Vector s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = ls.x[i] - res.x[i];
      y[i] = ls.g[i] - res.grad[i];
    }
    res.x = std::move(ls.x);
    res.grad = std::move(ls.g);
    res.f = ls.f;
    ++res.iterations;

    double sy = dot(s, y);
    if (sy > 1e-10 * std::sqrt(dot(s, s) * dot(y, y))) {
      if (opts.method == OptMethod::Lbfgs) {
        S.push_back(std::move(s));
        Y.push_back(std::move(y));
        rho.push_back(1.0 / sy);
        if (static_cast<int>(S.size()) > opts.memory) S.pop_front(), Y.pop_front(), rho.pop_front();
      } else {
        if (!h_initialized) {
          H.assign(n * n, 0.0);
          double gam = sy / dot(y, y);
          for (std::size_t i = 0; i < n; ++i) H[i * n + i] = gam;
          h_initialized = true;
        }
        // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
        double r = 1.0 / sy;
        Vector hy(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += H[i * n + j] * y[j];
          hy[i] = acc;
        }
        double yhy = dot(y, hy);
        double c = (1.0 + r * yhy) * r;
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) H[i * n + j] += c * s[i] * s[j] - r * (hy[i] * s[j] + s[i] * hy[j]);
      }
    }
    if (!report(fallback)) {
      res.status = OptStatus::Stopped;
      return res;
    }
  }
}

}  // namespace feinn
