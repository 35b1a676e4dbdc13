#pragma once

// Scenario execution backends: a deterministic synthetic-performance
// simulator, a replay backend over recorded data, and a cloud placeholder.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>

#include "hpcadvisor/dataset.hpp"
#include "hpcadvisor/error.hpp"

namespace hpcadvisor {

enum class RunStatus { ok, failed };

struct ExecutionOutcome {
  Scenario scenario;
  double exec_time_s = 0.0;
  RunStatus status = RunStatus::failed;
  std::string detail;

  bool ok() const noexcept { return status == RunStatus::ok; }
};

inline ExecutionOutcome failed_outcome(const Scenario& s, std::string detail) {
  return {s, 0.0, RunStatus::failed, std::move(detail)};
}

// run() must be reentrant: execute_plan may call it from several threads.
class Executor {
 public:
  virtual ~Executor() = default;
  virtual ExecutionOutcome run(const Scenario& scenario, const VmCatalog& catalog) const = 0;
  // Provenance stamped on records produced by this backend.
  virtual Provenance provenance() const = 0;
  virtual std::string_view name() const = 0;
};

// Returns an empty string when the scenario can run on the catalog.
inline std::string check_against_catalog(const Scenario& s, const VmCatalog& catalog) {
  try {
    validate(s);
  } catch (const ValidationError& e) {
    return e.what();
  }
  const auto* sku = catalog.find(s.sku_name);
  if (!sku) return "unknown VM SKU '" + s.sku_name + "'";
  if (s.procs_per_vm > sku->cores_per_vm)
    return "procs_per_vm " + std::to_string(s.procs_per_vm) + " exceeds " +
           std::to_string(sku->cores_per_vm) + " cores of " + sku->name;
  return {};
}

// ---------------------------------------------------------------------------
// Synthetic model
//
//   cores = n_vms * procs_per_vm
//   t = (p/p0) * (t_s + t_p / cores^alpha) + gamma * log2(max(n_vms, 2))
//
// The t_p term is divided by cache_speedup when the per-VM input share
// p / n_vms drops below cache_threshold, which produces super-linear speedup.
// The result is multiplied by exp(sigma * Z), Z ~ N(0,1) drawn from a stream
// keyed by (seed, scenario), so it does not depend on execution order.

struct SkuModel {
  double serial_time_s = 0.0;
  double parallel_work_s = 1.0;
  double alpha = 1.0;
  double comm_coeff_s = 0.0;
  std::optional<double> cache_threshold;
  double cache_speedup = 1.0;
};

struct SyntheticModel {
  double reference_input = 1.0;  // p0
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  std::map<std::string, SkuModel> skus;
};

inline void validate(const SkuModel& m, const std::string& name) {
  auto fail = [&](const char* what) { throw ValidationError("model for '" + name + "': " + what); };
  if (!(m.serial_time_s >= 0.0)) fail("serial_time_s must be >= 0");
  if (!(m.parallel_work_s > 0.0)) fail("parallel_work_s must be > 0");
  if (!(m.alpha > 0.0 && m.alpha <= 1.0)) fail("alpha must lie in (0, 1]");
  if (!(m.comm_coeff_s >= 0.0)) fail("comm_coeff_s must be >= 0");
  if (m.cache_threshold && !(*m.cache_threshold > 0.0)) fail("cache_threshold must be > 0");
  if (!(m.cache_speedup >= 1.0)) fail("cache_speedup must be >= 1");
}

inline void validate(const SyntheticModel& m) {
  if (!(m.reference_input > 0.0)) throw ValidationError("reference_input must be > 0");
  if (!(m.noise_sigma >= 0.0)) throw ValidationError("noise_sigma must be >= 0");
  for (const auto& [name, sku] : m.skus) validate(sku, name);
}

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline double keyed_normal(std::uint64_t seed, const Scenario& s) {
  const std::uint64_t h = fnv1a(describe(s));
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> z(0.0, 1.0);
  return z(rng);
}

}  // namespace detail

inline double simulate(const SyntheticModel& model, const Scenario& scenario, const VmCatalog& catalog) {
  auto it = model.skus.find(scenario.sku_name);
  if (it == model.skus.end() || !catalog.find(scenario.sku_name))
    throw NotFoundError("unknown VM SKU '" + scenario.sku_name + "' in model or catalog");
  validate(scenario);
  const SkuModel& m = it->second;

  const double n = scenario.n_vms;
  const double cores = n * scenario.procs_per_vm;
  const double ratio = scenario.input.value / model.reference_input;
  double parallel = ratio * m.parallel_work_s / std::pow(cores, m.alpha);
  if (m.cache_threshold && scenario.input.value / n < *m.cache_threshold) parallel /= m.cache_speedup;
  double t = ratio * m.serial_time_s + parallel + m.comm_coeff_s * std::log2(std::max(n, 2.0));
  if (model.noise_sigma > 0.0) t *= std::exp(model.noise_sigma * detail::keyed_normal(model.seed, scenario));
  return t;
}

class SimulatorExecutor final : public Executor {
 public:
  explicit SimulatorExecutor(SyntheticModel model) : model_(std::move(model)) { validate(model_); }

  ExecutionOutcome run(const Scenario& scenario, const VmCatalog& catalog) const override {
    if (auto problem = check_against_catalog(scenario, catalog); !problem.empty())
      return failed_outcome(scenario, problem);
    try {
      return {scenario, simulate(model_, scenario, catalog), RunStatus::ok, {}};
    } catch (const Error& e) {
      return failed_outcome(scenario, e.what());
    }
  }

  Provenance provenance() const override { return Provenance::simulated; }
  std::string_view name() const override { return "simulate"; }
  const SyntheticModel& model() const noexcept { return model_; }

 private:
  SyntheticModel model_;
};

// Looks scenarios up in a recorded dataset (measured first, then simulated).
class ReplayExecutor final : public Executor {
 public:
  explicit ReplayExecutor(Dataset fixture) : fixture_(std::move(fixture)) {}

  ExecutionOutcome run(const Scenario& scenario, const VmCatalog& catalog) const override {
    if (auto problem = check_against_catalog(scenario, catalog); !problem.empty())
      return failed_outcome(scenario, problem);
    for (auto p : {Provenance::measured, Provenance::simulated})
      if (const auto* r = fixture_.find(scenario, p)) return {scenario, r->exec_time_s, RunStatus::ok, {}};
    return failed_outcome(scenario, "no recorded run for " + describe(scenario));
  }

  Provenance provenance() const override { return Provenance::measured; }
  std::string_view name() const override { return "replay"; }

 private:
  Dataset fixture_;
};

// Placeholder for real cloud execution, which is not part of this build.
class CloudStubExecutor final : public Executor {
 public:
  ExecutionOutcome run(const Scenario& scenario, const VmCatalog&) const override {
    return failed_outcome(scenario, "backend not built");
  }
  Provenance provenance() const override { return Provenance::measured; }
  std::string_view name() const override { return "cloud-stub"; }
};

// ---------------------------------------------------------------------------
// Model file: line-delimited JSON. One {"type":"global", ...} line and one
// {"type":"sku", "sku_name": ...} line per SKU.

inline SyntheticModel parse_model(std::istream& in, const std::string& source = "<model>") {
  SyntheticModel model;
  detail::for_each_json_line(in, source, [&](const json& obj, std::size_t line_no) {
    try {
      const auto type = detail::required<std::string>(obj, "type");
      if (type == "global") {
        model.reference_input = detail::required<double>(obj, "reference_input");
        model.noise_sigma = obj.value("noise_sigma", 0.0);
        model.seed = obj.value("seed", std::uint64_t{0});
      } else if (type == "sku") {
        SkuModel m;
        const auto name = detail::required<std::string>(obj, "sku_name");
        m.serial_time_s = obj.value("serial_time_s", 0.0);
        m.parallel_work_s = detail::required<double>(obj, "parallel_work_s");
        m.alpha = obj.value("alpha", 1.0);
        m.comm_coeff_s = obj.value("comm_coeff_s", 0.0);
        if (auto it = obj.find("cache_threshold"); it != obj.end() && !it->is_null())
          m.cache_threshold = it->get<double>();
        m.cache_speedup = obj.value("cache_speedup", 1.0);
        validate(m, name);
        if (!model.skus.emplace(name, m).second) throw ValidationError("duplicate model for '" + name + "'");
      } else {
        throw ValidationError("unknown record type '" + type + "'");
      }
    } catch (const json::exception& e) {
      throw ParseError(source, line_no, e.what());
    } catch (const ValidationError& e) {
      throw ParseError(source, line_no, e.what());
    }
  });
  validate(model);
  return model;
}

inline SyntheticModel load_model(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return parse_model(in, path.string());
}

inline void write_model(const SyntheticModel& model, std::ostream& out) {
  out << json{{"type", "global"},
              {"reference_input", model.reference_input},
              {"noise_sigma", model.noise_sigma},
              {"seed", model.seed}}
             .dump()
      << '\n';
  for (const auto& [name, m] : model.skus) {
    json obj{{"type", "sku"},
             {"sku_name", name},
             {"serial_time_s", m.serial_time_s},
             {"parallel_work_s", m.parallel_work_s},
             {"alpha", m.alpha},
             {"comm_coeff_s", m.comm_coeff_s},
             {"cache_speedup", m.cache_speedup}};
    if (m.cache_threshold) obj["cache_threshold"] = *m.cache_threshold;
    out << obj.dump() << '\n';
  }
}

}  // namespace hpcadvisor
