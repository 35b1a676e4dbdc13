#pragma once

// Execution-time prediction from sparse data:
//  - across VM types, by fitting one multiplicative factor that maps a fully
//    measured source curve onto a few probe points of the target SKU;
//  - across application inputs, by scaling times with the input-size ratio.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hpcadvisor/dataset.hpp"
#include "hpcadvisor/error.hpp"
#include "hpcadvisor/optimizer.hpp"

namespace hpcadvisor {

inline constexpr double kMinExtrapolatedTime = 1e-9;

enum class Extrapolation { none, linear };

struct ScalingFit {
  double factor = 0.0;
  double residual = 0.0;  // J at `factor`
  int iterations = 0;
  bool converged = false;
};

// Piecewise-linear time at `n` VMs. Exact at knots.
inline double interpolate(const ScalingCurve& curve, double n,
                          Extrapolation mode = Extrapolation::none) {
  const auto& pts = curve.points;
  if (pts.empty()) throw ValidationError("cannot interpolate an empty curve");
  const double lo = pts.front().n_vms;
  const double hi = pts.back().n_vms;

  if (n < lo || n > hi) {
    if (mode == Extrapolation::none) throw OutOfRangeError(n, lo, hi);
    if (pts.size() == 1) return std::max(pts.front().exec_time_s, kMinExtrapolatedTime);
    const auto& a = n < lo ? pts[0] : pts[pts.size() - 2];
    const auto& b = n < lo ? pts[1] : pts[pts.size() - 1];
    const double slope = (b.exec_time_s - a.exec_time_s) / (b.n_vms - a.n_vms);
    return std::max(a.exec_time_s + (n - a.n_vms) * slope, kMinExtrapolatedTime);
  }

  auto it = std::lower_bound(pts.begin(), pts.end(), n,
                             [](const CurvePoint& p, double v) { return p.n_vms < v; });
  if (it->n_vms == n) return it->exec_time_s;
  const auto& b = *it;
  const auto& a = *(it - 1);
  return a.exec_time_s + (n - a.n_vms) * (b.exec_time_s - a.exec_time_s) / (b.n_vms - a.n_vms);
}

// J(s) = sum_i (s * interp(source, n_i) - t_i)^2
inline double scaling_objective(const ScalingCurve& source, std::span<const CurvePoint> targets,
                                double factor) {
  double j = 0.0;
  for (const auto& t : targets) {
    const double r = factor * interpolate(source, t.n_vms) - t.exec_time_s;
    j += r * r;
  }
  return j;
}

// Least-squares scaling factor from `source` onto the target SKU's probe points.
// Targets must lie inside the source's node range and share its application input.
inline ScalingFit fit_scaling_factor(const ScalingCurve& source, std::span<const CurvePoint> targets,
                                     const OptimizerConfig& config = {}) {
  validate(source);
  if (targets.empty()) throw ValidationError("scaling-factor fit needs at least one target point");

  std::vector<double> f(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (!(targets[i].exec_time_s > 0.0))
      throw ValidationError("target execution times must be > 0");
    f[i] = interpolate(source, targets[i].n_vms);
  }
  const double start = targets.front().exec_time_s / f.front();

  // Optimize x = s / start over J normalized by sum (start * f_i)^2, so the
  // curvature is 2 regardless of the time scale and the gradient tolerance is
  // a relative accuracy on s. Same minimizer as J.
  double scale = 0.0;
  for (double fi : f) scale += (start * fi) * (start * fi);
  auto normalized = [&](const std::vector<double>& x) {
    double j = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double r = start * x[0] * f[i] - targets[i].exec_time_s;
      j += r * r;
    }
    return j / scale;
  };

  const auto res = minimize(normalized, {1.0}, config);
  ScalingFit fit;
  fit.factor = start * res.x_min[0];
  fit.iterations = res.iterations;
  fit.converged = res.converged && fit.factor > 0.0;
  fit.residual = scaling_objective(source, targets, fit.factor);
  return fit;
}

inline ScalingFit fit_scaling_factor(const ScalingCurve& source, const ScalingCurve& target_probes,
                                     const OptimizerConfig& config = {}) {
  return fit_scaling_factor(source, std::span<const CurvePoint>(target_probes.points), config);
}

// The source curve with every time multiplied by the fitted factor, relabelled
// as `target_sku`. `target_procs` overrides procs_per_vm when the two SKUs
// resolve the same process policy to different counts.
inline ScalingCurve predict_cross_vm(const ScalingCurve& source, const ScalingFit& fit,
                                     const std::string& target_sku,
                                     std::optional<int> target_procs = std::nullopt) {
  if (!(fit.factor > 0.0) || !std::isfinite(fit.factor))
    throw ValidationError("scaling factor must be > 0");
  if (target_sku.empty()) throw ValidationError("target SKU name is empty");
  ScalingCurve out = source;
  out.sku_name = target_sku;
  if (target_procs) out.procs_per_vm = *target_procs;
  for (auto& p : out.points) p.exec_time_s *= fit.factor;
  validate(out);
  return out;
}

// How an application parameter is allowed to drive cross-input prediction.
enum class InputScaling { linear, none };

struct InputScalingPolicy {
  InputScaling fallback = InputScaling::linear;
  std::map<std::string, InputScaling> per_param;

  InputScaling kind(const std::string& param_name) const {
    auto it = per_param.find(param_name);
    return it == per_param.end() ? fallback : it->second;
  }
};

inline ScalingCurve predict_cross_input(const ScalingCurve& curve, const AppInput& target_input,
                                        InputScaling scaling = InputScaling::linear) {
  if (curve.input.param_name != target_input.param_name)
    throw ValidationError("input parameter mismatch: curve has '" + curve.input.param_name +
                          "', target has '" + target_input.param_name + "'");
  if (curve.input.app_name != target_input.app_name)
    throw ValidationError("application mismatch: '" + curve.input.app_name + "' vs '" +
                          target_input.app_name + "'");
  if (!(curve.input.value > 0.0) || !(target_input.value > 0.0))
    throw ValidationError("input values must be > 0");
  if (scaling == InputScaling::none)
    throw ValidationError("parameter '" + target_input.param_name +
                          "' is configured with scaling 'none'; refusing cross-input prediction");

  const double ratio = target_input.value / curve.input.value;
  ScalingCurve out = curve;
  out.input = target_input;
  for (auto& p : out.points) p.exec_time_s *= ratio;
  validate(out);
  return out;
}

}  // namespace hpcadvisor
