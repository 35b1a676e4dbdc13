#pragma once

// Scenario reduction: execute the baseline SKU's full curve plus one or two
// probes per other SKU, predict the rest, and measure how good the
// predictions were against ground truth.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "hpcadvisor/dataset.hpp"
#include "hpcadvisor/error.hpp"
#include "hpcadvisor/executor.hpp"
#include "hpcadvisor/optimizer.hpp"
#include "hpcadvisor/predictor.hpp"

namespace hpcadvisor {

inline constexpr const char* kMethodCrossVm = "cross-vm";
inline constexpr const char* kMethodCrossInput = "cross-input";
inline constexpr const char* kMethodCrossInputCalibrated = "cross-input-calibrated";

struct ScenarioGrid {
  std::vector<std::string> sku_names;
  std::vector<int> node_counts;  // strictly increasing
  std::vector<AppInput> inputs;  // first one is the base input
  std::optional<int> procs_per_vm;  // nullopt: all cores of each SKU
};

inline void validate(const ScenarioGrid& g) {
  if (g.sku_names.empty() || g.node_counts.empty() || g.inputs.empty())
    throw ValidationError("grid axes must be non-empty");
  if (std::set<std::string>(g.sku_names.begin(), g.sku_names.end()).size() != g.sku_names.size())
    throw ValidationError("grid SKU names must be unique");
  for (std::size_t i = 0; i < g.node_counts.size(); ++i) {
    if (g.node_counts[i] < 1) throw ValidationError("grid node counts must be >= 1");
    if (i > 0 && g.node_counts[i] <= g.node_counts[i - 1])
      throw ValidationError("grid node counts must be strictly increasing");
  }
  for (const auto& in : g.inputs) {
    validate(in);
    if (in.param_name != g.inputs.front().param_name || in.app_name != g.inputs.front().app_name)
      throw ValidationError("grid inputs must share app_name and param_name");
  }
  for (std::size_t i = 0; i < g.inputs.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (g.inputs[i].value == g.inputs[j].value) throw ValidationError("grid input values must be distinct");
  if (g.procs_per_vm && *g.procs_per_vm < 1) throw ValidationError("procs_per_vm must be >= 1");
}

inline int resolve_procs(const ScenarioGrid& g, const std::string& sku_name, const VmCatalog& catalog) {
  const auto& sku = catalog.at(sku_name);
  if (!g.procs_per_vm) return sku.cores_per_vm;
  if (*g.procs_per_vm > sku.cores_per_vm)
    throw ValidationError("procs_per_vm " + std::to_string(*g.procs_per_vm) + " exceeds " +
                          std::to_string(sku.cores_per_vm) + " cores of " + sku_name);
  return *g.procs_per_vm;
}

// Every scenario of the grid: SKU-major, then input, then node count.
inline std::vector<Scenario> expand(const ScenarioGrid& g, const VmCatalog& catalog) {
  validate(g);
  std::vector<Scenario> out;
  for (const auto& sku : g.sku_names) {
    const int procs = resolve_procs(g, sku, catalog);
    for (const auto& in : g.inputs)
      for (int n : g.node_counts) out.push_back({sku, n, procs, in});
  }
  return out;
}

// Grid file: a single JSON object.
//   {"app_name": "openfoam", "param_name": "cells", "inputs": [1e6, 2e6],
//    "skus": ["HC", "HBv3"], "node_counts": [1, 2, 4], "procs_per_vm": "all-cores"}
inline ScenarioGrid grid_from_json(const json& obj) {
  ScenarioGrid g;
  g.sku_names = detail::required<std::vector<std::string>>(obj, "skus");
  g.node_counts = detail::required<std::vector<int>>(obj, "node_counts");
  const auto app = detail::required<std::string>(obj, "app_name");
  const auto param = detail::required<std::string>(obj, "param_name");
  for (double v : detail::required<std::vector<double>>(obj, "inputs")) g.inputs.push_back({app, param, v});
  if (auto it = obj.find("procs_per_vm"); it != obj.end()) {
    if (it->is_number_integer())
      g.procs_per_vm = it->get<int>();
    else if (!(it->is_string() && it->get<std::string>() == "all-cores"))
      throw ValidationError("procs_per_vm must be an integer or \"all-cores\"");
  }
  validate(g);
  return g;
}

inline ScenarioGrid load_grid(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  json obj;
  try {
    obj = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string(), 1, e.what());
  }
  try {
    return grid_from_json(obj);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Plan

struct PlannedPrediction {
  Scenario scenario;
  std::string method;
};

struct PlanOptions {
  int probes_per_sku = 2;
  std::optional<std::string> baseline;  // default: lexicographically first SKU
  // Adds one run of the baseline SKU at the largest node count for every
  // extra input and rescales that input's predictions by measured/predicted.
  bool calibrate_inputs = false;
};

struct ScenarioPlan {
  ScenarioGrid grid;
  std::map<std::string, int> procs;  // resolved procs_per_vm per SKU
  std::string baseline_sku;
  std::vector<int> probe_nodes;
  std::vector<Scenario> executed;
  std::vector<PlannedPrediction> predicted;
  std::map<std::string, int> probe_counts;  // non-baseline SKUs only
  bool calibrate_inputs = false;

  std::size_t total() const noexcept { return executed.size() + predicted.size(); }
  double reduction_pct() const noexcept {
    return total() == 0 ? 0.0 : 100.0 * static_cast<double>(predicted.size()) / static_cast<double>(total());
  }
};

inline ScenarioPlan plan(const ScenarioGrid& grid, const VmCatalog& catalog, const PlanOptions& opts = {}) {
  validate(grid);
  if (opts.probes_per_sku != 1 && opts.probes_per_sku != 2)
    throw ValidationError("probes per SKU must be 1 or 2, got " + std::to_string(opts.probes_per_sku));

  ScenarioPlan p;
  p.grid = grid;
  p.calibrate_inputs = opts.calibrate_inputs;
  for (const auto& s : grid.sku_names) p.procs[s] = resolve_procs(grid, s, catalog);

  if (opts.baseline) {
    if (std::find(grid.sku_names.begin(), grid.sku_names.end(), *opts.baseline) == grid.sku_names.end())
      throw NotFoundError("unknown baseline SKU '" + *opts.baseline + "'");
    p.baseline_sku = *opts.baseline;
  } else {
    p.baseline_sku = *std::min_element(grid.sku_names.begin(), grid.sku_names.end());
  }

  const int largest = grid.node_counts.back();
  if (opts.probes_per_sku == 2 && grid.node_counts.size() > 1) p.probe_nodes.push_back(grid.node_counts.front());
  p.probe_nodes.push_back(largest);

  const AppInput& base = grid.inputs.front();
  for (const auto& sku : grid.sku_names) {
    const int procs = p.procs[sku];
    const bool is_baseline = sku == p.baseline_sku;
    for (int n : grid.node_counts) {
      Scenario s{sku, n, procs, base};
      const bool probe = std::find(p.probe_nodes.begin(), p.probe_nodes.end(), n) != p.probe_nodes.end();
      if (is_baseline) {
        p.executed.push_back(s);
      } else if (probe) {
        p.executed.push_back(s);
        ++p.probe_counts[sku];
      } else {
        p.predicted.push_back({s, kMethodCrossVm});
      }
    }
    for (std::size_t i = 1; i < grid.inputs.size(); ++i) {
      for (int n : grid.node_counts) {
        Scenario s{sku, n, procs, grid.inputs[i]};
        if (opts.calibrate_inputs && is_baseline && n == largest)
          p.executed.push_back(s);
        else
          p.predicted.push_back({s, opts.calibrate_inputs ? kMethodCrossInputCalibrated : kMethodCrossInput});
      }
    }
  }
  return p;
}

inline std::string summary_line(const ScenarioPlan& p) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "executed %zu / %zu (%.1f%% reduction)", p.executed.size(), p.total(),
                p.reduction_pct());
  return buf;
}

// Key/value report of a plan, one field per line.
inline std::string format_plan(const ScenarioPlan& p) {
  std::ostringstream os;
  os << "baseline: " << p.baseline_sku << '\n';
  os << "scenarios: " << p.total() << '\n';
  os << "executed: " << p.executed.size() << '\n';
  os << "predicted: " << p.predicted.size() << '\n';
  char pct[32];
  std::snprintf(pct, sizeof(pct), "%.1f", p.reduction_pct());
  os << "reduction_pct: " << pct << '\n';
  os << "probe_nodes:";
  for (int n : p.probe_nodes) os << ' ' << n;
  os << '\n';
  os << "probes:";
  for (const auto& [sku, count] : p.probe_counts) os << ' ' << sku << '=' << count;
  os << '\n';
  os << "calibrate_inputs: " << (p.calibrate_inputs ? "true" : "false") << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Execution

struct ExecuteOptions {
  int parallelism = 1;
  std::string timestamp;  // stamped on every new record; empty means now
  OptimizerConfig optimizer;
  InputScalingPolicy input_scaling;
};

struct ExecutionReport {
  Dataset dataset;
  std::vector<ExecutionOutcome> failures;      // executed scenarios that failed
  std::vector<ExecutionOutcome> unpredicted;   // planned predictions that could not be made
  std::map<std::string, ScalingFit> fits;      // per non-baseline SKU
  std::map<double, double> calibration;        // input value -> applied ratio
  std::vector<std::string> warnings;
};

namespace detail {

inline std::vector<ExecutionOutcome> run_all(const std::vector<Scenario>& scenarios, const Executor& executor,
                                             const VmCatalog& catalog, int parallelism) {
  std::vector<ExecutionOutcome> outcomes(scenarios.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < scenarios.size();) {
      try {
        outcomes[i] = executor.run(scenarios[i], catalog);
      } catch (const std::exception& e) {
        outcomes[i] = failed_outcome(scenarios[i], e.what());
      }
      if (outcomes[i].ok() && !(outcomes[i].exec_time_s > 0.0))
        outcomes[i] = failed_outcome(scenarios[i], "backend returned a non-positive time");
    }
  };
  const auto extra = std::min<std::size_t>(static_cast<std::size_t>(std::max(parallelism, 1)), scenarios.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < extra; ++t) pool.emplace_back(worker);
    worker();
  }
  return outcomes;
}

}  // namespace detail

// Runs the plan's executed scenarios, fits a cross-VM factor per non-baseline
// SKU, then fills every planned prediction. Executor failures degrade the
// result; a SKU without any usable probe is a PlannerError.
inline ExecutionReport execute_plan(const ScenarioPlan& plan, const Executor& executor, const VmCatalog& catalog,
                                    Dataset dataset, const ExecuteOptions& opts = {}) {
  if (opts.parallelism < 1) throw ValidationError("parallelism must be >= 1");
  const std::string stamp = opts.timestamp.empty() ? utc_now() : opts.timestamp;
  ExecutionReport report;

  const auto outcomes = detail::run_all(plan.executed, executor, catalog, opts.parallelism);
  for (const auto& o : outcomes) {
    if (o.ok())
      dataset.upsert({o.scenario, o.exec_time_s, executor.provenance(), std::nullopt, stamp});
    else
      report.failures.push_back(o);
  }

  const AppInput& base = plan.grid.inputs.front();
  std::vector<BenchmarkRecord> predictions;
  auto add_prediction = [&](const Scenario& s, double t, const std::string& method) {
    predictions.push_back({s, t, Provenance::predicted, method, stamp});
  };
  auto skip = [&](const Scenario& s, const std::string& why) {
    report.unpredicted.push_back(failed_outcome(s, why));
  };

  std::map<std::string, std::vector<const PlannedPrediction*>> cross_vm;
  std::map<std::string, std::vector<const PlannedPrediction*>> cross_input;
  for (const auto& pp : plan.predicted)
    (pp.method == kMethodCrossVm ? cross_vm : cross_input)[pp.scenario.sku_name].push_back(&pp);

  // Cross-VM: fit each SKU's probes against the baseline's observed curve.
  std::optional<ScalingCurve> baseline_curve;
  try {
    baseline_curve = extract_curve(dataset, plan.baseline_sku, base, plan.procs.at(plan.baseline_sku),
                                   ProvenanceFilter::observed());
  } catch (const NotFoundError&) {
    if (plan.grid.sku_names.size() > 1)
      throw PlannerError("baseline SKU '" + plan.baseline_sku + "' has no successful runs");
  }

  for (const auto& sku : plan.grid.sku_names) {
    if (sku == plan.baseline_sku) continue;
    std::vector<CurvePoint> probes;
    for (const auto& o : outcomes)
      if (o.ok() && o.scenario.sku_name == sku && o.scenario.input == base)
        probes.push_back({o.scenario.n_vms, o.exec_time_s});
    if (probes.empty()) throw PlannerError("no successful probe runs for SKU '" + sku + "'");

    ScalingFit fit;
    try {
      fit = fit_scaling_factor(*baseline_curve, probes, opts.optimizer);
    } catch (const Error& e) {
      throw PlannerError("scaling-factor fit failed for SKU '" + sku + "': " + e.what());
    }
    if (!fit.converged) report.warnings.push_back("scaling-factor fit for " + sku + " did not converge");
    report.fits[sku] = fit;

    const auto curve = predict_cross_vm(*baseline_curve, fit, sku, plan.procs.at(sku));
    for (const auto* pp : cross_vm[sku]) {
      try {
        add_prediction(pp->scenario, interpolate(curve, pp->scenario.n_vms), kMethodCrossVm);
      } catch (const OutOfRangeError& e) {
        skip(pp->scenario, e.what());
      }
    }
  }
  for (auto& r : predictions) dataset.upsert(r);
  predictions.clear();

  // Cross-input: scale each SKU's base-input curve (observed preferred over predicted).
  for (const auto& sku : plan.grid.sku_names) {
    const auto& pending = cross_input[sku];
    if (pending.empty()) continue;
    std::optional<ScalingCurve> base_curve;
    try {
      base_curve = extract_curve(dataset, sku, base, plan.procs.at(sku), ProvenanceFilter::all());
    } catch (const NotFoundError& e) {
      for (const auto* pp : pending) skip(pp->scenario, e.what());
      continue;
    }
    for (const auto* pp : pending) {
      try {
        const auto curve = predict_cross_input(*base_curve, pp->scenario.input,
                                               opts.input_scaling.kind(pp->scenario.input.param_name));
        add_prediction(pp->scenario, interpolate(curve, pp->scenario.n_vms), pp->method);
      } catch (const Error& e) {
        skip(pp->scenario, e.what());
      }
    }
  }

  if (plan.calibrate_inputs) {
    const int largest = plan.grid.node_counts.back();
    for (std::size_t i = 1; i < plan.grid.inputs.size(); ++i) {
      const auto& in = plan.grid.inputs[i];
      const Scenario probe{plan.baseline_sku, largest, plan.procs.at(plan.baseline_sku), in};
      const BenchmarkRecord* observed = dataset.find(probe, executor.provenance());
      if (!observed || !baseline_curve) {
        report.warnings.push_back("no calibration run for input " + json(in.value).dump());
        continue;
      }
      const double uncalibrated =
          interpolate(predict_cross_input(*baseline_curve, in, opts.input_scaling.kind(in.param_name)), largest);
      const double ratio = observed->exec_time_s / uncalibrated;
      report.calibration[in.value] = ratio;
      for (auto& r : predictions)
        if (r.scenario.input == in) r.exec_time_s *= ratio;
    }
  }
  for (auto& r : predictions) dataset.upsert(r);

  report.dataset = std::move(dataset);
  return report;
}

// ---------------------------------------------------------------------------
// Evaluation

struct PredictionError {
  Scenario scenario;
  double actual = 0.0;
  double predicted = 0.0;
  double ape = 0.0;  // percent
};

struct PredictionReport {
  std::vector<PredictionError> entries;
  double mape = 0.0;
  double max_ape = 0.0;
  std::size_t count() const noexcept { return entries.size(); }
};

// Compares every predicted record against the observed (measured, else
// simulated) record for the same scenario in `ground_truth`.
inline PredictionReport evaluate(const Dataset& predicted, const Dataset& ground_truth) {
  PredictionReport rep;
  double sum = 0.0;
  for (const auto& r : predicted.records()) {
    if (r.provenance != Provenance::predicted) continue;
    const BenchmarkRecord* truth = ground_truth.find(r.scenario, Provenance::measured);
    if (!truth) truth = ground_truth.find(r.scenario, Provenance::simulated);
    if (!truth) throw NotFoundError("no ground truth for " + describe(r.scenario));
    const double ape = std::abs(r.exec_time_s - truth->exec_time_s) / truth->exec_time_s * 100.0;
    rep.entries.push_back({r.scenario, truth->exec_time_s, r.exec_time_s, ape});
    sum += ape;
    rep.max_ape = std::max(rep.max_ape, ape);
  }
  if (!rep.entries.empty()) rep.mape = sum / static_cast<double>(rep.entries.size());
  return rep;
}

}  // namespace hpcadvisor
