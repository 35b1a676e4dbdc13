// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <sys/wait.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "hpcadvisor/hpcadvisor.hpp"
#include "oracles.hpp"

using namespace hpcadvisor;
namespace fs = std::filesystem;

namespace {

const std::string kStamp = "2024-06-01T00:00:00Z";
const fs::path kData = HPCADVISOR_DATA_DIR;

struct Outcome {
  bool ok;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (out.ok && secs >= budget_s) out = {false, out.detail + "; over time budget"};
  if (!out.ok) ++failures;
  std::printf("%s  %d %-22s %s (%.2fs / %.0fs)\n", out.ok ? "PASS" : "FAIL", id, name, out.detail.c_str(), secs,
              budget_s);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

VmCatalog catalog() { return load_catalog(kData / "catalog.jsonl"); }

ScenarioGrid grid() { return load_grid(kData / "demo.grid"); }

Dataset exhaustive(const ScenarioGrid& g, const Executor& exec, const VmCatalog& cat) {
  Dataset d;
  for (const auto& s : expand(g, cat)) {
    auto o = exec.run(s, cat);
    if (!o.ok()) throw std::runtime_error(o.detail);
    d.upsert({s, o.exec_time_s, exec.provenance(), std::nullopt, kStamp});
  }
  return d;
}

ExecuteOptions exec_opts() {
  ExecuteOptions o;
  o.timestamp = kStamp;
  return o;
}

std::vector<std::pair<double, double>> pairs(const std::vector<CurvePoint>& pts) {
  std::vector<std::pair<double, double>> out;
  for (const auto& p : pts) out.push_back({static_cast<double>(p.n_vms), p.exec_time_s});
  return out;
}

ScalingCurve random_curve(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> npts(3, 8), gap(1, 4);
  std::uniform_real_distribution<double> time(1.0, 1e4);
  ScalingCurve c{"HBv2", {"openfoam", "cells", 1e6}, 120, {}};
  int n = 1;
  for (int i = 0, k = npts(rng); i < k; ++i, n += gap(rng)) c.points.push_back({n, time(rng)});
  return c;
}

int sh(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string cli(const fs::path& out, const std::string& args) {
  return "SOURCE_DATE_EPOCH=1717200000 '" + std::string(HPCADVISOR_CLI) + "' --catalog '" +
         (kData / "catalog.jsonl").string() + "' --out '" + out.string() + "' " + args + " > /dev/null 2>&1";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main() {
  criterion(1, "optimizer-oracle", 5, [] {
    std::mt19937_64 rng(1001);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const int d = 1 + trial % 5;
      const auto q = oracle::random_spd_quadratic(d, rng);
      const auto x_star = oracle::gaussian_solve(q.A, q.b);
      OptimizerConfig cfg;
      cfg.fd_step = 1e-7;
      cfg.grad_tolerance = 1e-9;
      auto res = minimize([&](std::span<const double> x) { return q({x.begin(), x.end()}); },
                          std::vector<double>(d, 0.0), cfg);
      for (int i = 0; i < d; ++i) worst = std::max(worst, std::abs(res.x_min[i] - x_star[i]));
    }
    auto rb = minimize([](std::span<const double> x) { return oracle::rosenbrock({x.begin(), x.end()}); },
                       {-1.2, 1.0});
    const double rb_err = std::max(std::abs(rb.x_min[0] - 1.0), std::abs(rb.x_min[1] - 1.0));
    return Outcome{worst <= 1e-6 && rb_err <= 1e-4,
                   fmt("quadratic max |x-x*| %.2e (<=1e-6), rosenbrock err %.2e (<=1e-4)", worst, rb_err)};
  });

  criterion(2, "fit-oracle", 5, [] {
    std::mt19937_64 rng(2002);
    std::uniform_real_distribution<double> log_kappa(-2.0, 2.0), jitter(0.8, 1.25);
    double worst_rel = 0.0, worst_gap = -INFINITY;
    for (int trial = 0; trial < 100; ++trial) {
      const auto src = random_curve(rng);
      std::uniform_int_distribution<int> node(src.points.front().n_vms, src.points.back().n_vms);
      const double kappa = std::pow(10.0, log_kappa(rng));
      std::vector<CurvePoint> targets;
      for (int i = 0; i < 3; ++i) {
        const int m = node(rng);
        if (std::any_of(targets.begin(), targets.end(), [&](const CurvePoint& p) { return p.n_vms == m; })) continue;
        targets.push_back({m, kappa * oracle::interp(pairs(src.points), m) * jitter(rng)});
      }
      const double s_star = oracle::closed_form_factor(pairs(src.points), pairs(targets));
      const auto fit = fit_scaling_factor(src, targets);
      worst_rel = std::max(worst_rel, std::abs(fit.factor - s_star) / s_star);
      const double j_fit = oracle::objective(pairs(src.points), pairs(targets), fit.factor);
      for (int k = 0; k < 100; ++k) {
        const double s = s_star / 10.0 * std::pow(100.0, k / 99.0);
        worst_gap = std::max(worst_gap, j_fit - oracle::objective(pairs(src.points), pairs(targets), s));
      }
    }
    return Outcome{worst_rel <= 1e-6 && worst_gap <= 1e-9,
                   fmt("max rel err %.2e (<=1e-6), max J(fit)-J(s) %.2e (<=1e-9)", worst_rel, worst_gap)};
  });

  criterion(3, "pareto-oracle", 2, [] {
    std::mt19937_64 rng(3003);
    std::uniform_int_distribution<int> size(1, 12), val(1, 6);
    int mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<CostedPoint> in;
      std::vector<std::pair<double, double>> obj;
      std::vector<int> rank;
      const int k = size(rng);
      for (int i = 0; i < k; ++i) {
        const double t = val(rng), c = val(rng);
        in.push_back({{"HBv3", i + 1, 120, {"openfoam", "cells", 1e6}}, t, c, Provenance::measured, std::nullopt});
        obj.push_back({t, c});
        rank.push_back(i);
      }
      const auto expected = oracle::brute_force_front(obj, rank);
      const auto res = pareto_front(in);
      for (int i = 0; i < k; ++i) {
        const bool on = std::find(res.front.begin(), res.front.end(), in[i]) != res.front.end();
        mismatches += on != expected[i];
      }
    }
    return Outcome{mismatches == 0, fmt("%.0f misclassified points over 1000 sets", mismatches)};
  });

  criterion(4, "exact-recovery", 5, [] {
    const auto cat = catalog();
    SyntheticModel m;
    m.reference_input = 1e6;
    for (const auto& [name, kappa] : std::map<std::string, double>{{"HC", 1.0}, {"HBv2", 0.6}, {"HBv3", 0.45}}) {
      const int procs = cat.at(name).cores_per_vm;
      // Shared g(n) = 20 + 36000/n per unit input; SKUs differ by kappa only.
      m.skus[name] = {kappa * 20.0, kappa * 36000.0 * procs, 1.0, 0.0, std::nullopt, 1.0};
    }
    const SimulatorExecutor sim(m);
    const auto p = plan(grid(), cat);
    const auto rep = execute_plan(p, sim, cat, Dataset{}, exec_opts());
    const auto eval = evaluate(rep.dataset, exhaustive(grid(), sim, cat));
    const bool ok = eval.mape <= 0.1 && p.executed.size() == 9 && p.total() == 45 && eval.count() == 36;
    return Outcome{ok, fmt("mape %.2e%% (<=0.1%%), executed %.0f / %.0f", eval.mape,
                           static_cast<double>(p.executed.size()), static_cast<double>(p.total()))};
  });

  criterion(5, "robustness-regime", 10, [] {
    const auto cat = catalog();
    SyntheticModel m = load_model(kData / "demo_model.jsonl");
    m.noise_sigma = 0.02;
    m.seed = 42;
    for (const auto& [name, alpha] : std::map<std::string, double>{{"HC", 1.0}, {"HBv2", 0.95}, {"HBv3", 0.9}}) {
      m.skus.at(name).alpha = alpha;
      m.skus.at(name).cache_threshold.reset();
    }
    const SimulatorExecutor sim(m);
    const auto rep = execute_plan(plan(grid(), cat), sim, cat, Dataset{}, exec_opts());
    const auto eval = evaluate(rep.dataset, exhaustive(grid(), sim, cat));
    return Outcome{eval.count() == 36 && eval.mape <= 15.0 && eval.max_ape <= 30.0,
                   fmt("mape %.2f%% (<=15%%), max_ape %.2f%% (<=30%%), %.0f predictions", eval.mape, eval.max_ape,
                       static_cast<double>(eval.count()))};
  });

  criterion(6, "cross-input-props", 5, [] {
    std::mt19937_64 rng(6006);
    std::uniform_real_distribution<double> value(1e4, 1e8);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const auto c = random_curve(rng);
      const AppInput p1{"openfoam", "cells", value(rng)}, p2{"openfoam", "cells", value(rng)};
      const auto two = predict_cross_input(predict_cross_input(c, p1), p2);
      const auto direct = predict_cross_input(c, p2);
      const auto same = predict_cross_input(c, c.input);
      for (std::size_t i = 0; i < c.points.size(); ++i) {
        worst = std::max(worst, std::abs(two.points[i].exec_time_s - direct.points[i].exec_time_s) /
                                    direct.points[i].exec_time_s);
        worst = std::max(worst, std::abs(same.points[i].exec_time_s - c.points[i].exec_time_s) /
                                    c.points[i].exec_time_s);
      }
    }
    return Outcome{worst <= 1e-12, fmt("max relative deviation %.2e (<=1e-12)", worst)};
  });

  const fs::path work = fs::temp_directory_path() / "hpcadvisor_acceptance";
  fs::remove_all(work);

  criterion(7, "determinism", 10, [&] {
    const std::string grid_arg = "'" + (kData / "demo.grid").string() + "'";
    const std::string model_arg = "'" + (kData / "demo_model.jsonl").string() + "'";
    std::vector<fs::path> outs;
    for (int par : {1, 8}) {
      const auto out = work / ("det_p" + std::to_string(par));
      const std::string pstr = " --parallelism " + std::to_string(par) + " --seed 7 ";
      if (sh(cli(out, pstr + "plan --execute --backend simulate --grid " + grid_arg + " --model " + model_arg)) != 0 ||
          sh(cli(out, pstr + "advise --input cells=1e6")) != 0 ||
          sh(cli(out, pstr + "report --kind all --input cells=1e6")) != 0)
        return Outcome{false, "pipeline command failed"};
      outs.push_back(out);
    }
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(outs[0])) {
      const auto other = outs[1] / entry.path().filename();
      if (!fs::exists(other) || slurp(entry.path()) != slurp(other))
        return Outcome{false, "differs: " + entry.path().filename().string()};
      ++files;
    }
    const bool ok = files >= 6 && files == static_cast<std::size_t>(std::distance(
                                                 fs::directory_iterator(outs[1]), fs::directory_iterator{}));
    return Outcome{ok, fmt("%.0f files byte-identical for parallelism 1 and 8", static_cast<double>(files))};
  });

  criterion(8, "end-to-end-demo", 10, [&] {
    const auto out = work / "demo";
    if (sh(cli(out, "simulate --grid '" + (kData / "demo.grid").string() + "' --model '" +
                        (kData / "demo_model.jsonl").string() + "'")) != 0 ||
        sh(cli(out, "advise --input cells=1e6")) != 0 || sh(cli(out, "report --kind all --input cells=1e6")) != 0)
      return Outcome{false, "pipeline command failed"};
    for (const char* f : {"time_vs_vms.svg", "cost_vs_vms.svg", "pareto.svg"}) {
      boost::property_tree::ptree tree;
      std::ifstream in(out / f);
      boost::property_tree::read_xml(in, tree);
      if (tree.get<std::string>("svg.<xmlattr>.data-kind", "") + ".svg" != f)
        return Outcome{false, std::string("bad plot ") + f};
    }
    const auto rows = parse_table(slurp(out / "pareto.csv"));
    const auto front = std::count_if(rows.begin(), rows.end(), [](const TableRow& r) { return r.on_front.value(); });
    return Outcome{!rows.empty() && front > 0,
                   fmt("3 plots parsed, pareto table %.0f rows (%.0f on front)", static_cast<double>(rows.size()),
                       static_cast<double>(front))};
  });

  fs::remove_all(work);
  std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
