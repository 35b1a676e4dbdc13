#pragma once

// Unconstrained BFGS with central finite-difference gradients and a
// backtracking Armijo line search.

#include <cmath>
#include <cstddef>
#include <algorithm>
#include <span>
#include <utility>
#include <vector>

#include "hpcadvisor/error.hpp"

namespace hpcadvisor {

struct OptimizerConfig {
  double grad_tolerance = 1e-8;
  int max_iterations = 200;
  double fd_step = 1e-6;
  double armijo_c1 = 1e-4;
  double backtrack_factor = 0.5;
  int max_backtracks = 50;
};

struct OptimizeResult {
  std::vector<double> x_min;
  double f_min = 0.0;
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
};

inline void validate(const OptimizerConfig& c) {
  if (!(c.grad_tolerance > 0.0)) throw ValidationError("grad_tolerance must be > 0");
  if (c.max_iterations < 1) throw ValidationError("max_iterations must be >= 1");
  if (!(c.fd_step > 0.0)) throw ValidationError("fd_step must be > 0");
  if (!(c.armijo_c1 > 0.0 && c.armijo_c1 < 1.0)) throw ValidationError("armijo c1 must lie in (0,1)");
  if (!(c.backtrack_factor > 0.0 && c.backtrack_factor < 1.0))
    throw ValidationError("backtrack factor must lie in (0,1)");
  if (c.max_backtracks < 1) throw ValidationError("max_backtracks must be >= 1");
}

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

template <typename F>
std::vector<double> central_gradient(F& f, std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    x[i] = xi + h;
    const double fp = f(std::as_const(x));
    x[i] = xi - h;
    const double fm = f(std::as_const(x));
    x[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace detail

// Minimizes `f` starting from `x0`. `f` is called as f(const std::vector<double>&).
//
// The inverse Hessian starts at the identity and receives the standard BFGS
// update after every accepted step, except when the curvature s'y is not
// safely positive, in which case the update is skipped to keep it SPD.
// Throws DivergedError if f ever returns a non-finite value.
template <typename F>
OptimizeResult minimize(F&& f, std::vector<double> x0, const OptimizerConfig& config = {}) {
  validate(config);
  const std::size_t d = x0.size();
  if (d == 0) throw ValidationError("minimize: empty starting point");

  auto eval = [&](const std::vector<double>& x) -> double { return f(x); };

  OptimizeResult res;
  res.x_min = std::move(x0);
  res.f_min = eval(res.x_min);
  if (!std::isfinite(res.f_min)) throw DivergedError(res.x_min, res.f_min);

  auto gradient = [&](const std::vector<double>& x) {
    auto g = detail::central_gradient(eval, x, config.fd_step);
    for (double gi : g)
      if (!std::isfinite(gi)) throw DivergedError(res.x_min, res.f_min);
    return g;
  };

  std::vector<double> g = gradient(res.x_min);
  std::vector<double> H(d * d, 0.0);  // row-major inverse Hessian
  auto reset_identity = [&] {
    std::fill(H.begin(), H.end(), 0.0);
    for (std::size_t i = 0; i < d; ++i) H[i * d + i] = 1.0;
  };
  reset_identity();

  std::vector<double> p(d), x_new(d), s(d), y(d), Hy(d);
  res.gradient_norm = detail::norm(g);

  while (res.iterations < config.max_iterations) {
    if (res.gradient_norm <= config.grad_tolerance) {
      res.converged = true;
      return res;
    }

    for (std::size_t i = 0; i < d; ++i) {
      p[i] = 0.0;
      for (std::size_t j = 0; j < d; ++j) p[i] -= H[i * d + j] * g[j];
    }
    double slope = detail::dot(g, p);
    if (!(slope < 0.0)) {
      // Lost descent (finite-difference noise); restart from steepest descent.
      reset_identity();
      for (std::size_t i = 0; i < d; ++i) p[i] = -g[i];
      slope = -res.gradient_norm * res.gradient_norm;
    }

    double alpha = 1.0;
    double f_new = 0.0;
    bool accepted = false;
    for (int k = 0; k < config.max_backtracks; ++k) {
      for (std::size_t i = 0; i < d; ++i) x_new[i] = res.x_min[i] + alpha * p[i];
      f_new = eval(x_new);
      if (!std::isfinite(f_new)) throw DivergedError(res.x_min, res.f_min);
      if (f_new <= res.f_min + config.armijo_c1 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= config.backtrack_factor;
    }
    if (!accepted) return res;

    std::vector<double> g_new = gradient(x_new);
    for (std::size_t i = 0; i < d; ++i) {
      s[i] = x_new[i] - res.x_min[i];
      y[i] = g_new[i] - g[i];
    }
    const double sy = detail::dot(s, y);
    if (sy > 1e-12 * detail::norm(s) * detail::norm(y)) {
      // H <- (I - rho s y') H (I - rho y s') + rho s s'
      const double rho = 1.0 / sy;
      for (std::size_t i = 0; i < d; ++i) {
        Hy[i] = 0.0;
        for (std::size_t j = 0; j < d; ++j) Hy[i] += H[i * d + j] * y[j];
      }
      const double yHy = detail::dot(y, Hy);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
          H[i * d + j] += rho * ((1.0 + rho * yHy) * s[i] * s[j] - Hy[i] * s[j] - s[i] * Hy[j]);
    }

    res.x_min = x_new;
    res.f_min = f_new;
    g = std::move(g_new);
    res.gradient_norm = detail::norm(g);
    ++res.iterations;
  }
  res.converged = res.gradient_norm <= config.grad_tolerance;
  return res;
}

}  // namespace hpcadvisor
