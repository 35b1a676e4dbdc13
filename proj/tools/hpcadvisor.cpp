// hpcadvisor: command-line front end for benchmarking, prediction and advice.
//
// Exit codes: 0 success (possibly with warnings), 1 bad input, 2 backend or
// internal error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hpcadvisor/hpcadvisor.hpp"

namespace fs = std::filesystem;
using namespace hpcadvisor;

namespace {

struct Options {
  std::string catalog = "catalog.jsonl";
  std::string dataset;
  std::string out_dir;
  std::string billing = "per-minute";
  std::optional<std::uint64_t> seed;
  int parallelism = 1;

  // subcommand arguments
  std::vector<std::string> files;
  std::string grid;
  std::string model;
  std::string backend = "simulate";
  std::string replay;
  int probes = 2;
  std::string baseline;
  bool calibrate_inputs = false;
  bool execute = false;
  std::string source;
  std::string target;
  std::string sku;
  std::string input;
  std::string to_input;
  std::string app;
  std::optional<int> procs;
  std::string kind = "all";
};

class UsageError : public Error {
 public:
  using Error::Error;
};

fs::path out_dir(const Options& o) {
  if (!o.out_dir.empty()) return o.out_dir;
  if (const char* home = std::getenv("HPCADVISOR_HOME"); home && *home) return home;
  return "hpcadvisor_out";
}

fs::path dataset_path(const Options& o) {
  return o.dataset.empty() ? out_dir(o) / "dataset.jsonl" : fs::path(o.dataset);
}

fs::path ensure_out_dir(const Options& o) {
  auto dir = out_dir(o);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message(), ErrorKind::internal);
  return dir;
}

// Reproducible builds convention: SOURCE_DATE_EPOCH pins record timestamps.
std::string record_timestamp() {
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch)
    return format_utc(static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10)));
  return utc_now();
}

BillingMode billing_mode(const Options& o) {
  return o.billing == "exact" ? BillingMode::exact : BillingMode::per_minute;
}

void save(const Dataset& ds, const Options& o) {
  auto path = dataset_path(o);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  save_dataset(ds, path);
}

// "cells=1e6" -> (param, value); the application comes from --app or the dataset.
AppInput parse_input(const std::string& text, const std::string& app, const Dataset* dataset) {
  auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("--input must look like param=value, got '" + text + "'");
  AppInput in{app, text.substr(0, eq), 0.0};
  try {
    std::size_t used = 0;
    in.value = std::stod(text.substr(eq + 1), &used);
    if (used != text.size() - eq - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw UsageError("bad input value in '" + text + "'");
  }
  if (!(in.value > 0.0)) throw UsageError("input value must be > 0");
  if (in.app_name.empty() && dataset) {
    std::set<std::string> apps;
    for (const auto& r : dataset->records())
      if (r.scenario.input.param_name == in.param_name) apps.insert(r.scenario.input.app_name);
    if (apps.size() > 1) throw UsageError("several applications use '" + in.param_name + "'; pass --app");
    if (apps.size() == 1) in.app_name = *apps.begin();
  }
  return in;
}

int infer_procs(const Dataset& ds, const std::string& sku, const AppInput& in, std::optional<int> given) {
  if (given) return *given;
  std::set<int> seen;
  for (const auto& r : ds.records())
    if (r.scenario.sku_name == sku && r.scenario.input == in) seen.insert(r.scenario.procs_per_vm);
  if (seen.empty())
    throw NotFoundError("no records for SKU '" + sku + "' at " + in.param_name + "=" + json(in.value).dump());
  if (seen.size() > 1) throw UsageError("SKU '" + sku + "' has several procs_per_vm values; pass --procs");
  return *seen.begin();
}

std::unique_ptr<Executor> make_executor(const Options& o) {
  if (o.backend == "simulate") {
    if (o.model.empty()) throw UsageError("--backend simulate needs --model");
    auto model = load_model(o.model);
    if (o.seed) model.seed = *o.seed;
    return std::make_unique<SimulatorExecutor>(std::move(model));
  }
  if (o.backend == "replay") {
    if (o.replay.empty()) throw UsageError("--backend replay needs --replay");
    return std::make_unique<ReplayExecutor>(load_dataset(o.replay));
  }
  return std::make_unique<CloudStubExecutor>();
}

void print_failures(const std::vector<ExecutionOutcome>& failures, const char* what) {
  for (const auto& f : failures) std::cout << "warning: " << what << ' ' << describe(f.scenario) << ": " << f.detail << '\n';
}

// ---------------------------------------------------------------------------

int cmd_ingest(const Options& o) {
  auto ds = load_dataset(dataset_path(o));
  std::size_t rejected = 0;
  for (const auto& f : o.files) {
    auto res = ingest_records(fs::path(f), std::move(ds));
    ds = std::move(res.dataset);
    std::cout << "ingested " << res.accepted << " records from " << f << '\n';
    for (const auto& r : res.rejected)
      std::cout << "warning: " << f << ":" << r.line << ": record " << r.index << " rejected: " << r.reason << '\n';
    rejected += res.rejected.size();
  }
  save(ds, o);
  std::cout << "dataset " << dataset_path(o).string() << ": " << ds.size() << " records";
  if (rejected) std::cout << " (" << rejected << " rejected)";
  std::cout << '\n';
  return 0;
}

int cmd_simulate(Options o) {
  o.backend = "simulate";
  const auto catalog = load_catalog(o.catalog);
  const auto grid = load_grid(o.grid);
  const auto executor = make_executor(o);
  auto ds = load_dataset(dataset_path(o));
  const auto scenarios = expand(grid, catalog);
  const auto outcomes = detail::run_all(scenarios, *executor, catalog, o.parallelism);
  const auto stamp = record_timestamp();
  std::vector<ExecutionOutcome> failures;
  for (const auto& out : outcomes) {
    if (out.ok())
      ds.upsert({out.scenario, out.exec_time_s, executor->provenance(), std::nullopt, stamp});
    else
      failures.push_back(out);
  }
  print_failures(failures, "run failed:");
  if (failures.size() == outcomes.size()) throw Error("every simulated scenario failed", ErrorKind::internal);
  save(ds, o);
  std::cout << "simulated " << outcomes.size() - failures.size() << " / " << outcomes.size()
            << " scenarios into " << dataset_path(o).string() << '\n';
  return 0;
}

int cmd_plan(const Options& o) {
  const auto catalog = load_catalog(o.catalog);
  const auto grid = load_grid(o.grid);
  PlanOptions popts;
  popts.probes_per_sku = o.probes;
  if (!o.baseline.empty()) popts.baseline = o.baseline;
  popts.calibrate_inputs = o.calibrate_inputs;
  const auto p = plan(grid, catalog, popts);

  std::cout << summary_line(p) << '\n' << format_plan(p);
  const auto dir = ensure_out_dir(o);
  atomic_write(dir / "plan.txt", summary_line(p) + "\n" + format_plan(p));
  if (!o.execute) return 0;

  const auto executor = make_executor(o);
  ExecuteOptions eopts;
  eopts.parallelism = o.parallelism;
  eopts.timestamp = record_timestamp();
  auto report = execute_plan(p, *executor, catalog, load_dataset(dataset_path(o)), eopts);
  print_failures(report.failures, "run failed:");
  print_failures(report.unpredicted, "not predicted:");
  for (const auto& w : report.warnings) std::cout << "warning: " << w << '\n';
  for (const auto& [sku, fit] : report.fits)
    std::cout << "fit " << sku << ": factor " << detail::format_number(fit.factor) << " residual "
              << detail::format_number(fit.residual) << (fit.converged ? "" : " (not converged)") << '\n';
  save(report.dataset, o);
  std::cout << "dataset " << dataset_path(o).string() << ": " << report.dataset.size() << " records\n";
  return 0;
}

int cmd_fit(const Options& o) {
  const auto ds = load_dataset(dataset_path(o));
  const auto in = parse_input(o.input, o.app, &ds);
  const auto source = extract_curve(ds, o.source, in, infer_procs(ds, o.source, in, o.procs), ProvenanceFilter::observed());
  const auto probes = extract_curve(ds, o.target, in, infer_procs(ds, o.target, in, o.procs), ProvenanceFilter::observed());
  const auto fit = fit_scaling_factor(source, probes);
  std::cout << "source " << o.source << " -> target " << o.target << " (" << probes.points.size() << " probe points)\n"
            << "factor: " << detail::format_number(fit.factor) << '\n'
            << "residual: " << detail::format_number(fit.residual) << '\n'
            << "iterations: " << fit.iterations << '\n'
            << "converged: " << (fit.converged ? "true" : "false") << '\n';
  return 0;
}

int cmd_predict(const Options& o) {
  auto ds = load_dataset(dataset_path(o));
  const auto in = parse_input(o.input, o.app, &ds);
  const auto stamp = record_timestamp();
  ScalingCurve predicted;
  std::string method;
  if (!o.to_input.empty()) {
    if (o.sku.empty()) throw UsageError("cross-input prediction needs --sku");
    const auto target = parse_input(o.to_input, in.app_name, nullptr);
    const auto base = extract_curve(ds, o.sku, in, infer_procs(ds, o.sku, in, o.procs), ProvenanceFilter::all());
    predicted = predict_cross_input(base, target);
    method = kMethodCrossInput;
  } else {
    if (o.source.empty() || o.target.empty()) throw UsageError("cross-VM prediction needs --source and --target");
    const auto source = extract_curve(ds, o.source, in, infer_procs(ds, o.source, in, o.procs), ProvenanceFilter::observed());
    const int target_procs = infer_procs(ds, o.target, in, o.procs);
    const auto probes = extract_curve(ds, o.target, in, target_procs, ProvenanceFilter::observed());
    const auto fit = fit_scaling_factor(source, probes);
    predicted = predict_cross_vm(source, fit, o.target, target_procs);
    method = kMethodCrossVm;
    std::cout << "factor " << detail::format_number(fit.factor) << '\n';
  }
  for (auto& r : curve_records(predicted, Provenance::predicted, method, stamp)) ds.upsert(std::move(r));
  save(ds, o);
  for (const auto& p : predicted.points)
    std::cout << predicted.sku_name << " n=" << p.n_vms << " t=" << detail::format_number(p.exec_time_s) << "s ("
              << method << ")\n";
  return 0;
}

void print_pareto(const ParetoResult& res) {
  std::printf("%-4s %-8s %6s %6s %14s %12s  %s\n", "", "sku", "n_vms", "ppn", "time_s", "cost_usd", "provenance");
  auto row = [](const CostedPoint& p, const char* tag) {
    std::printf("%-4s %-8s %6d %6d %14.3f %12.4f  %s\n", tag, p.scenario.sku_name.c_str(), p.scenario.n_vms,
                p.scenario.procs_per_vm, p.exec_time_s, p.cost, std::string(to_string(p.provenance)).c_str());
  };
  for (const auto& p : res.front) row(p, "*");
  for (const auto& p : res.dominated) row(p, "");
  const auto in = summarize(res);
  std::printf("fastest: %s x%d (%.3f s)\n", in.fastest.scenario.sku_name.c_str(), in.fastest.scenario.n_vms,
              in.fastest.exec_time_s);
  std::printf("cheapest: %s x%d ($%.4f)\n", in.cheapest.scenario.sku_name.c_str(), in.cheapest.scenario.n_vms,
              in.cheapest.cost);
  std::printf("best time*cost: %s x%d\n", in.best_time_cost_product.scenario.sku_name.c_str(),
              in.best_time_cost_product.scenario.n_vms);
}

int cmd_advise(const Options& o) {
  const auto catalog = load_catalog(o.catalog);
  const auto ds = load_dataset(dataset_path(o));
  const auto in = parse_input(o.input, o.app, &ds);
  const auto res = recommend(ds, catalog, in, billing_mode(o));
  std::printf("Pareto front for %s (%zu of %zu configurations, * = on front)\n",
              detail::input_caption(in).c_str(), res.front.size(), res.front.size() + res.dominated.size());
  print_pareto(res);
  const auto dir = ensure_out_dir(o);
  emit_table(res, dir / "pareto.csv");
  emit_plot(pareto_plot(res, detail::input_caption(in)), dir / "pareto.svg");
  std::cout << "wrote " << (dir / "pareto.csv").string() << " and " << (dir / "pareto.svg").string() << '\n';
  return 0;
}

int cmd_report(const Options& o) {
  static const std::set<std::string> kinds{"all", "time", "cost", "pareto", "table"};
  if (!kinds.count(o.kind)) throw UsageError("unknown report kind '" + o.kind + "'");
  const auto catalog = load_catalog(o.catalog);
  const auto ds = load_dataset(dataset_path(o));
  if (ds.empty()) throw NotFoundError("dataset " + dataset_path(o).string() + " is empty");
  const auto dir = ensure_out_dir(o);
  const bool all = o.kind == "all";
  std::vector<fs::path> written;
  if (all || o.kind == "table") {
    emit_table(ds, catalog, dir / "dataset.csv", billing_mode(o));
    written.push_back(dir / "dataset.csv");
  }
  if (all || o.kind != "table") {
    if (o.input.empty()) throw UsageError("plots need --input");
    const auto in = parse_input(o.input, o.app, &ds);
    if (all || o.kind == "time") {
      emit_plot(time_plot(ds, in), dir / "time_vs_vms.svg");
      written.push_back(dir / "time_vs_vms.svg");
    }
    if (all || o.kind == "cost") {
      emit_plot(cost_plot(ds, catalog, in, billing_mode(o)), dir / "cost_vs_vms.svg");
      written.push_back(dir / "cost_vs_vms.svg");
    }
    if (all || o.kind == "pareto") {
      const auto res = recommend(ds, catalog, in, billing_mode(o));
      emit_plot(pareto_plot(res, detail::input_caption(in)), dir / "pareto.svg");
      emit_table(res, dir / "pareto.csv");
      written.push_back(dir / "pareto.svg");
      written.push_back(dir / "pareto.csv");
    }
  }
  for (const auto& p : written) std::cout << "wrote " << p.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hpcadvisor: predict execution time and cost across VM types and recommend configurations"};
  app.set_config("--config", "", "TOML/INI file with option values (command-line flags take precedence)");
  app.require_subcommand(1);

  Options o;
  app.add_option("--catalog", o.catalog, "VM catalog file (line-delimited JSON)")->capture_default_str();
  app.add_option("--dataset", o.dataset, "Dataset file (default: <out>/dataset.jsonl)");
  app.add_option("--out", o.out_dir, "Output directory (default: $HPCADVISOR_HOME or ./hpcadvisor_out)");
  app.add_option("--billing", o.billing, "Billing mode")
      ->check(CLI::IsMember({"per-minute", "exact"}))
      ->capture_default_str();
  app.add_option("--seed", o.seed, "Seed for all simulated randomness (overrides the model file)");
  app.add_option("--parallelism", o.parallelism, "Maximum concurrent scenario runs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  auto* ingest = app.add_subcommand("ingest", "Merge benchmark record files into the dataset");
  ingest->add_option("files", o.files, "Record files (line-delimited JSON)")->required()->check(CLI::ExistingFile);

  auto* simulate = app.add_subcommand("simulate", "Run every grid scenario through the synthetic simulator");
  simulate->add_option("--grid", o.grid, "Grid definition file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--model", o.model, "Synthetic model file")->required()->check(CLI::ExistingFile);

  auto* plan_cmd = app.add_subcommand("plan", "Plan which scenarios to execute and which to predict");
  plan_cmd->add_option("--grid", o.grid, "Grid definition file")->required()->check(CLI::ExistingFile);
  plan_cmd->add_option("--probes", o.probes, "Probe runs per non-baseline SKU (1 or 2)")->capture_default_str();
  plan_cmd->add_option("--baseline", o.baseline, "Baseline SKU (default: first by name)");
  plan_cmd->add_flag("--calibrate-inputs", o.calibrate_inputs, "Add one baseline run per extra input");
  plan_cmd->add_flag("--execute", o.execute, "Execute the plan and write the dataset");
  plan_cmd->add_option("--backend", o.backend, "Execution backend")
      ->check(CLI::IsMember({"simulate", "replay", "cloud-stub"}))
      ->capture_default_str();
  plan_cmd->add_option("--model", o.model, "Synthetic model file (simulate backend)")->check(CLI::ExistingFile);
  plan_cmd->add_option("--replay", o.replay, "Recorded dataset (replay backend)")->check(CLI::ExistingFile);

  auto* fit = app.add_subcommand("fit", "Fit the cross-VM scaling factor between two SKUs");
  fit->add_option("--source", o.source, "SKU with the full measured curve")->required();
  fit->add_option("--target", o.target, "SKU with probe points")->required();
  fit->add_option("--input", o.input, "Application input, e.g. cells=1e6")->required();
  fit->add_option("--app", o.app, "Application name (default: inferred from the dataset)");
  fit->add_option("--procs", o.procs, "Processes per VM (default: inferred from the dataset)");

  auto* predict = app.add_subcommand("predict", "Write predicted records (cross-VM or cross-input)");
  predict->add_option("--input", o.input, "Application input of the known data, e.g. cells=1e6")->required();
  predict->add_option("--source", o.source, "Cross-VM: SKU with the full curve");
  predict->add_option("--target", o.target, "Cross-VM: SKU to predict");
  predict->add_option("--sku", o.sku, "Cross-input: SKU whose curve is rescaled");
  predict->add_option("--to", o.to_input, "Cross-input: target input, e.g. cells=2e6");
  predict->add_option("--app", o.app, "Application name (default: inferred from the dataset)");
  predict->add_option("--procs", o.procs, "Processes per VM (default: inferred from the dataset)");

  auto* advise = app.add_subcommand("advise", "Print the time/cost Pareto front and write pareto.csv/.svg");
  advise->add_option("--input", o.input, "Application input, e.g. cells=1e6")->required();
  advise->add_option("--app", o.app, "Application name (default: inferred from the dataset)");

  auto* report = app.add_subcommand("report", "Write tables and plots");
  report->add_option("--kind", o.kind, "all, time, cost, pareto or table")->capture_default_str();
  report->add_option("--input", o.input, "Application input for plots, e.g. cells=1e6");
  report->add_option("--app", o.app, "Application name (default: inferred from the dataset)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*ingest) return cmd_ingest(o);
    if (*simulate) return cmd_simulate(o);
    if (*plan_cmd) return cmd_plan(o);
    if (*fit) return cmd_fit(o);
    if (*predict) return cmd_predict(o);
    if (*advise) return cmd_advise(o);
    if (*report) return cmd_report(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::user ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
