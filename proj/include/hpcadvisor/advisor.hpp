#pragma once

// Cost model and (time, cost) Pareto recommendation.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "hpcadvisor/dataset.hpp"
#include "hpcadvisor/error.hpp"

namespace hpcadvisor {

enum class BillingMode { per_minute, exact };

// Time that is actually charged: per-minute billing rounds up to whole minutes.
inline double billed_seconds(double exec_time_s, BillingMode billing = BillingMode::per_minute) {
  if (billing == BillingMode::exact) return exec_time_s;
  return std::ceil(exec_time_s / 60.0) * 60.0;
}

inline double compute_cost(double exec_time_s, int n_vms, const VmSku& sku,
                           BillingMode billing = BillingMode::per_minute) {
  if (!(exec_time_s > 0.0)) throw ValidationError("execution time must be > 0");
  if (n_vms < 1) throw ValidationError("n_vms must be >= 1");
  return billed_seconds(exec_time_s, billing) / 3600.0 * n_vms * sku.price_per_hour;
}

struct CostedPoint {
  Scenario scenario;
  double exec_time_s = 0.0;
  double cost = 0.0;  // USD
  Provenance provenance = Provenance::measured;
  std::optional<std::string> method;

  friend bool operator==(const CostedPoint&, const CostedPoint&) = default;
};

inline CostedPoint make_costed_point(const BenchmarkRecord& r, const VmCatalog& catalog,
                                     BillingMode billing = BillingMode::per_minute) {
  const auto& sku = catalog.at(r.scenario.sku_name);
  return {r.scenario, r.exec_time_s, compute_cost(r.exec_time_s, r.scenario.n_vms, sku, billing),
          r.provenance, r.method};
}

struct ParetoResult {
  std::vector<CostedPoint> front;      // time ascending, cost strictly descending
  std::vector<CostedPoint> dominated;  // canonical order
};

// Total order used for ties: objectives first, then scenario key, then provenance.
inline bool costed_less(const CostedPoint& a, const CostedPoint& b) {
  if (a.exec_time_s != b.exec_time_s) return a.exec_time_s < b.exec_time_s;
  if (a.cost != b.cost) return a.cost < b.cost;
  if (scenario_less(a.scenario, b.scenario)) return true;
  if (scenario_less(b.scenario, a.scenario)) return false;
  return a.provenance < b.provenance;
}

// Minimizes both time and cost. Among exact duplicates in both objectives, only
// the first in canonical scenario order stays on the front.
inline ParetoResult pareto_front(std::vector<CostedPoint> points) {
  if (points.empty()) throw ValidationError("Pareto front of an empty point set");
  std::sort(points.begin(), points.end(), costed_less);
  ParetoResult out;
  double best_cost = 0.0;
  for (auto& p : points) {
    if (out.front.empty() || p.cost < best_cost) {
      best_cost = p.cost;
      out.front.push_back(std::move(p));
    } else {
      out.dominated.push_back(std::move(p));
    }
  }
  return out;
}

// Convenience annotations over the front; they never filter it.
struct FrontInsights {
  CostedPoint fastest;
  CostedPoint cheapest;
  CostedPoint best_time_cost_product;
};

inline FrontInsights summarize(const ParetoResult& result) {
  if (result.front.empty()) throw ValidationError("empty Pareto front");
  FrontInsights in{result.front.front(), result.front.back(), result.front.front()};
  for (const auto& p : result.front)
    if (p.exec_time_s * p.cost < in.best_time_cost_product.exec_time_s * in.best_time_cost_product.cost)
      in.best_time_cost_product = p;
  return in;
}

inline bool same_workload(const AppInput& a, const AppInput& b) {
  return a.param_name == b.param_name && a.value == b.value &&
         (a.app_name.empty() || b.app_name.empty() || a.app_name == b.app_name);
}

// All records for `input` (any provenance) costed and split into front and
// dominated. An empty app_name in `input` matches any application.
inline ParetoResult recommend(const Dataset& dataset, const VmCatalog& catalog, const AppInput& input,
                              BillingMode billing = BillingMode::per_minute) {
  std::vector<CostedPoint> points;
  for (const auto& r : dataset.records())
    if (same_workload(r.scenario.input, input)) points.push_back(make_costed_point(r, catalog, billing));
  if (points.empty())
    throw NotFoundError("no data for " + (input.app_name.empty() ? std::string("any app") : input.app_name) +
                        " with " + input.param_name + "=" + json(input.value).dump());
  return pareto_front(std::move(points));
}

}  // namespace hpcadvisor
