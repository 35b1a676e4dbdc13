#pragma once

// Benchmark records, VM catalog, and their line-delimited JSON persistence.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <regex>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hpcadvisor/error.hpp"

namespace hpcadvisor {

using json = nlohmann::json;

struct VmSku {
  std::string name;
  int cores_per_vm = 0;
  double price_per_hour = 0.0;  // USD
  std::string family;
};

struct AppInput {
  std::string app_name;
  std::string param_name;  // e.g. "cells", "atoms"
  double value = 0.0;

  friend bool operator==(const AppInput&, const AppInput&) = default;
};

struct Scenario {
  std::string sku_name;
  int n_vms = 0;
  int procs_per_vm = 0;
  AppInput input;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

enum class Provenance { measured, simulated, predicted };

struct BenchmarkRecord {
  Scenario scenario;
  double exec_time_s = 0.0;
  Provenance provenance = Provenance::measured;
  std::optional<std::string> method;  // present iff provenance == predicted
  std::string timestamp;              // ISO-8601, UTC

  friend bool operator==(const BenchmarkRecord&, const BenchmarkRecord&) = default;
};

struct CurvePoint {
  int n_vms = 0;
  double exec_time_s = 0.0;

  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

// Execution time against number of VMs with everything else held fixed.
struct ScalingCurve {
  std::string sku_name;
  AppInput input;
  int procs_per_vm = 0;
  std::vector<CurvePoint> points;  // n_vms strictly increasing

  friend bool operator==(const ScalingCurve&, const ScalingCurve&) = default;
};

inline std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::measured:
      return "measured";
    case Provenance::simulated:
      return "simulated";
    case Provenance::predicted:
      return "predicted";
  }
  return "unknown";
}

inline std::optional<Provenance> parse_provenance(std::string_view s) {
  if (s == "measured") return Provenance::measured;
  if (s == "simulated") return Provenance::simulated;
  if (s == "predicted") return Provenance::predicted;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Timestamps

inline std::string format_utc(std::time_t t) {
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string utc_now() {
  return format_utc(std::chrono::system_clock::to_time_t(std::chrono::system_clock::now()));
}

inline bool is_iso8601(const std::string& s) {
  static const std::regex pattern(
      R"(^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}(\.\d+)?(Z|[+-]\d{2}:\d{2})$)");
  return std::regex_match(s, pattern);
}

// ---------------------------------------------------------------------------
// Validation

inline void validate(const VmSku& sku) {
  if (sku.name.empty()) throw ValidationError("VM SKU name is empty");
  if (sku.cores_per_vm < 1)
    throw ValidationError("VM SKU '" + sku.name + "': cores_per_vm must be >= 1");
  if (!(sku.price_per_hour > 0.0) || !std::isfinite(sku.price_per_hour))
    throw ValidationError("VM SKU '" + sku.name + "': price_per_hour must be > 0");
}

inline void validate(const AppInput& input) {
  if (input.app_name.empty()) throw ValidationError("app_name is empty");
  if (input.param_name.empty()) throw ValidationError("param_name is empty");
  if (!(input.value > 0.0) || !std::isfinite(input.value))
    throw ValidationError("input " + input.param_name + " must be > 0");
}

inline void validate(const Scenario& s) {
  if (s.sku_name.empty()) throw ValidationError("sku_name is empty");
  if (s.n_vms < 1) throw ValidationError("n_vms must be >= 1");
  if (s.procs_per_vm < 1) throw ValidationError("procs_per_vm must be >= 1");
  validate(s.input);
}

inline void validate(const BenchmarkRecord& r) {
  validate(r.scenario);
  if (!(r.exec_time_s > 0.0) || !std::isfinite(r.exec_time_s))
    throw ValidationError("exec_time_s must be > 0");
  if ((r.provenance == Provenance::predicted) != r.method.has_value())
    throw ValidationError("method must be present exactly when provenance is predicted");
  if (!is_iso8601(r.timestamp)) throw ValidationError("timestamp '" + r.timestamp + "' is not ISO-8601");
}

inline void validate(const ScalingCurve& c) {
  if (c.points.empty()) throw ValidationError("scaling curve has no points");
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    if (c.points[i].n_vms < 1) throw ValidationError("curve node count must be >= 1");
    if (!(c.points[i].exec_time_s > 0.0) || !std::isfinite(c.points[i].exec_time_s))
      throw ValidationError("curve execution time must be > 0");
    if (i > 0 && c.points[i].n_vms <= c.points[i - 1].n_vms)
      throw ValidationError("curve node counts must be strictly increasing");
  }
}

// ---------------------------------------------------------------------------
// Canonical ordering

inline auto scenario_key(const Scenario& s) {
  return std::tie(s.input.app_name, s.input.param_name, s.input.value, s.sku_name, s.n_vms,
                  s.procs_per_vm);
}

inline bool scenario_less(const Scenario& a, const Scenario& b) {
  return scenario_key(a) < scenario_key(b);
}

inline bool record_key_less(const BenchmarkRecord& a, const BenchmarkRecord& b) {
  if (scenario_less(a.scenario, b.scenario)) return true;
  if (scenario_less(b.scenario, a.scenario)) return false;
  return a.provenance < b.provenance;
}

// Stable textual key, used for noise seeding and messages.
inline std::string describe(const Scenario& s) {
  std::ostringstream os;
  os.precision(17);
  os << s.input.app_name << '/' << s.input.param_name << '=' << s.input.value << '/' << s.sku_name
     << "/n=" << s.n_vms << "/ppn=" << s.procs_per_vm;
  return os.str();
}

// ---------------------------------------------------------------------------
// Catalog

class VmCatalog {
 public:
  VmCatalog() = default;

  explicit VmCatalog(std::vector<VmSku> skus) {
    for (auto& s : skus) add(std::move(s));
  }

  void add(VmSku sku) {
    validate(sku);
    if (find(sku.name)) throw ValidationError("duplicate VM SKU name '" + sku.name + "'");
    skus_.push_back(std::move(sku));
  }

  const VmSku* find(std::string_view name) const {
    auto it = std::find_if(skus_.begin(), skus_.end(), [&](const VmSku& s) { return s.name == name; });
    return it == skus_.end() ? nullptr : &*it;
  }

  const VmSku& at(std::string_view name) const {
    if (const auto* s = find(name)) return *s;
    throw NotFoundError("unknown VM SKU '" + std::string(name) + "'");
  }

  const std::vector<VmSku>& skus() const noexcept { return skus_; }
  std::size_t size() const noexcept { return skus_.size(); }
  bool empty() const noexcept { return skus_.empty(); }

 private:
  std::vector<VmSku> skus_;
};

// ---------------------------------------------------------------------------
// Dataset: at most one record per (scenario, provenance), kept in canonical order.

class Dataset {
 public:
  Dataset() = default;

  // Inserts or replaces the record with the same (scenario, provenance).
  void upsert(BenchmarkRecord record) {
    validate(record);
    auto it = std::lower_bound(records_.begin(), records_.end(), record, record_key_less);
    if (it != records_.end() && !record_key_less(record, *it))
      *it = std::move(record);
    else
      records_.insert(it, std::move(record));
  }

  void merge(const Dataset& other) {
    for (const auto& r : other.records_) upsert(r);
  }

  const BenchmarkRecord* find(const Scenario& s, Provenance p) const {
    BenchmarkRecord probe;
    probe.scenario = s;
    probe.provenance = p;
    auto it = std::lower_bound(records_.begin(), records_.end(), probe, record_key_less);
    if (it != records_.end() && it->scenario == s && it->provenance == p) return &*it;
    return nullptr;
  }

  const std::vector<BenchmarkRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<BenchmarkRecord> records_;
};

// ---------------------------------------------------------------------------
// JSON mapping

namespace detail {

template <typename T>
T required(const json& obj, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end()) throw ValidationError(std::string("missing field '") + field + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("field '") + field + "' has the wrong type");
  }
}

template <typename T>
T positive_int(const json& obj, const char* field) {
  const auto& v = obj.find(field);
  if (v == obj.end()) throw ValidationError(std::string("missing field '") + field + "'");
  if (!v->is_number_integer())
    throw ValidationError(std::string("field '") + field + "' must be an integer");
  return v->get<T>();
}

// Calls `on_object(obj, line_no)` for every non-blank line. Malformed JSON is a
// ParseError for the whole stream.
template <typename F>
void for_each_json_line(std::istream& in, const std::string& source, F&& on_object) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(source, line_no, e.what());
    }
    if (!obj.is_object()) throw ParseError(source, line_no, "expected a JSON object");
    on_object(obj, line_no);
  }
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open '" + path.string() + "'");
  return in;
}

}  // namespace detail

inline json to_json(const VmSku& s) {
  return json{{"name", s.name},
              {"cores_per_vm", s.cores_per_vm},
              {"price_per_hour", s.price_per_hour},
              {"family", s.family}};
}

inline VmSku sku_from_json(const json& obj) {
  VmSku s;
  s.name = detail::required<std::string>(obj, "name");
  s.cores_per_vm = detail::positive_int<int>(obj, "cores_per_vm");
  s.price_per_hour = detail::required<double>(obj, "price_per_hour");
  s.family = obj.value("family", std::string{});
  return s;
}

inline json to_json(const BenchmarkRecord& r) {
  json obj{{"app_name", r.scenario.input.app_name},
           {"param_name", r.scenario.input.param_name},
           {"param_value", r.scenario.input.value},
           {"sku_name", r.scenario.sku_name},
           {"n_vms", r.scenario.n_vms},
           {"procs_per_vm", r.scenario.procs_per_vm},
           {"exec_time_s", r.exec_time_s},
           {"provenance", std::string(to_string(r.provenance))},
           {"timestamp", r.timestamp}};
  if (r.method) obj["method"] = *r.method;
  return obj;
}

// Unknown fields are ignored. Throws ValidationError on missing or invalid fields.
inline BenchmarkRecord record_from_json(const json& obj) {
  BenchmarkRecord r;
  r.scenario.input.app_name = detail::required<std::string>(obj, "app_name");
  r.scenario.input.param_name = detail::required<std::string>(obj, "param_name");
  r.scenario.input.value = detail::required<double>(obj, "param_value");
  r.scenario.sku_name = detail::required<std::string>(obj, "sku_name");
  r.scenario.n_vms = detail::positive_int<int>(obj, "n_vms");
  r.scenario.procs_per_vm = detail::positive_int<int>(obj, "procs_per_vm");
  r.exec_time_s = detail::required<double>(obj, "exec_time_s");
  auto prov = detail::required<std::string>(obj, "provenance");
  auto p = parse_provenance(prov);
  if (!p) throw ValidationError("unknown provenance '" + prov + "'");
  r.provenance = *p;
  if (auto it = obj.find("method"); it != obj.end() && !it->is_null())
    r.method = detail::required<std::string>(obj, "method");
  r.timestamp = detail::required<std::string>(obj, "timestamp");
  validate(r);
  return r;
}

// ---------------------------------------------------------------------------
// Catalog I/O

inline VmCatalog parse_catalog(std::istream& in, const std::string& source = "<catalog>") {
  VmCatalog catalog;
  detail::for_each_json_line(in, source, [&](const json& obj, std::size_t line_no) {
    try {
      catalog.add(sku_from_json(obj));
    } catch (const ValidationError& e) {
      throw ValidationError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  });
  return catalog;
}

inline VmCatalog load_catalog(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return parse_catalog(in, path.string());
}

inline void write_catalog(const VmCatalog& catalog, std::ostream& out) {
  for (const auto& s : catalog.skus()) out << to_json(s).dump() << '\n';
}

// ---------------------------------------------------------------------------
// Dataset I/O

struct RejectedRecord {
  std::size_t index = 0;  // 0-based record index within the file
  std::size_t line = 0;
  std::string reason;
};

struct IngestResult {
  Dataset dataset;
  std::size_t accepted = 0;
  std::vector<RejectedRecord> rejected;
};

// Merges records from `in` into a copy of `dataset`. Invalid records are skipped
// and reported; later records replace earlier ones with the same key.
inline IngestResult ingest_records(std::istream& in, Dataset dataset,
                                   const std::string& source = "<records>") {
  IngestResult result;
  std::size_t index = 0;
  detail::for_each_json_line(in, source, [&](const json& obj, std::size_t line_no) {
    try {
      dataset.upsert(record_from_json(obj));
      ++result.accepted;
    } catch (const ValidationError& e) {
      result.rejected.push_back({index, line_no, e.what()});
    }
    ++index;
  });
  result.dataset = std::move(dataset);
  return result;
}

inline IngestResult ingest_records(const std::filesystem::path& path, Dataset dataset) {
  auto in = detail::open_input(path);
  return ingest_records(in, std::move(dataset), path.string());
}

inline void write_dataset(const Dataset& dataset, std::ostream& out) {
  for (const auto& r : dataset.records()) out << to_json(r).dump() << '\n';
}

inline std::string serialize(const Dataset& dataset) {
  std::ostringstream os;
  write_dataset(dataset, os);
  return os.str();
}

// Writes via a sibling temporary file and rename, so readers never observe a
// partially written file.
inline void atomic_write(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'", ErrorKind::internal);
    out << contents;
    if (!out.flush()) throw Error("write failed for '" + tmp.string() + "'", ErrorKind::internal);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("cannot replace '" + path.string() + "': " + ec.message(), ErrorKind::internal);
}

inline void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  atomic_write(path, serialize(dataset));
}

// Missing file is an empty dataset; the CLI creates it on first write.
inline Dataset load_dataset(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return {};
  auto result = ingest_records(path, Dataset{});
  if (!result.rejected.empty()) {
    const auto& r = result.rejected.front();
    throw ParseError(path.string(), r.line, r.reason);
  }
  return std::move(result.dataset);
}

// ---------------------------------------------------------------------------
// Curve extraction

struct ProvenanceFilter {
  bool measured = true;
  bool simulated = true;
  bool predicted = true;

  static constexpr ProvenanceFilter all() { return {true, true, true}; }
  static constexpr ProvenanceFilter observed() { return {true, true, false}; }
  static constexpr ProvenanceFilter only(Provenance p) {
    return {p == Provenance::measured, p == Provenance::simulated, p == Provenance::predicted};
  }

  constexpr bool accepts(Provenance p) const {
    switch (p) {
      case Provenance::measured:
        return measured;
      case Provenance::simulated:
        return simulated;
      case Provenance::predicted:
        return predicted;
    }
    return false;
  }
};

// When several accepted provenances exist for the same node count, the
// measured record wins over simulated, and simulated over predicted.
inline ScalingCurve extract_curve(const Dataset& dataset, const std::string& sku_name,
                                  const AppInput& input, int procs_per_vm,
                                  ProvenanceFilter filter = ProvenanceFilter::all()) {
  ScalingCurve curve{sku_name, input, procs_per_vm, {}};
  std::vector<std::pair<CurvePoint, Provenance>> hits;
  for (const auto& r : dataset.records()) {
    const auto& s = r.scenario;
    if (s.sku_name == sku_name && s.input == input && s.procs_per_vm == procs_per_vm &&
        filter.accepts(r.provenance))
      hits.push_back({{s.n_vms, r.exec_time_s}, r.provenance});
  }
  if (hits.empty())
    throw NotFoundError("no records for " + sku_name + " at " + input.app_name + " " +
                        input.param_name + "=" + json(input.value).dump() +
                        " with procs_per_vm=" + std::to_string(procs_per_vm));
  std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
    return std::tie(a.first.n_vms, a.second) < std::tie(b.first.n_vms, b.second);
  });
  for (const auto& [pt, prov] : hits) {
    if (!curve.points.empty() && curve.points.back().n_vms == pt.n_vms) continue;
    curve.points.push_back(pt);
  }
  return curve;
}

inline std::vector<BenchmarkRecord> curve_records(const ScalingCurve& curve, Provenance provenance,
                                                  std::optional<std::string> method,
                                                  const std::string& timestamp) {
  std::vector<BenchmarkRecord> out;
  out.reserve(curve.points.size());
  for (const auto& p : curve.points)
    out.push_back({{curve.sku_name, p.n_vms, curve.procs_per_vm, curve.input}, p.exec_time_s,
                   provenance, method, timestamp});
  return out;
}

}  // namespace hpcadvisor
