// tmatch: command-line driver for matching runs, experiments and bound
// calculators. Exit status: 0 success / matched, 1 not matched, 2 config or
// validity error, 3 numerical failure during integration.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "tmatch/report.hpp"
#include "tmatch/tmatch.hpp"

namespace fs = std::filesystem;
using namespace tmatch;

namespace {

constexpr int kOk = 0;
constexpr int kNotMatched = 1;
constexpr int kConfigError = 2;
constexpr int kNumericError = 3;

struct CommonArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
  bool json = false;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool config_required) {
  auto* c = cmd->add_option("--config", a.config, "TOML config file");
  if (config_required) c->required();
  c->check(CLI::ExistingFile);
  cmd->add_option("--out", a.out, "directory for CSV / JSON artifacts");
  cmd->add_option("--seed", a.seed, "random seed (overrides run.seed)");
  cmd->add_option("--set", a.sets, "override, key=value (repeatable)")->take_all();
  cmd->add_flag("--json", a.json, "print the JSON report to stdout");
}

Settings load(const CommonArgs& a) {
  Settings s = a.config.empty() ? Settings{} : load_settings(a.config);
  for (const auto& kv : a.sets) apply_override(s, kv);
  if (a.seed) s.run.seed = *a.seed;
  return s;
}

std::optional<fs::path> out_dir(const CommonArgs& a) {
  if (a.out.empty()) return std::nullopt;
  fs::create_directories(a.out);
  return fs::path(a.out);
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw InputError("cannot write '" + p.string() + "'");
  f << text;
}

void write_json(const fs::path& p, const Json& j) { write_text(p, j.dump(2) + "\n"); }

Json envelope(const char* command, const Settings& s, Json result) {
  return {{"command", command}, {"config", to_json(s)}, {"result", std::move(result)}};
}

void emit(const CommonArgs& a, const Json& doc) {
  if (a.json) std::cout << doc.dump(2) << "\n";
}

// --- match ---------------------------------------------------------------

MatchReport match_once(const Settings& s) {
  const ScalarField image = load_image_source(s.match.image, s.match.grid, s.match.base_dir);
  std::vector<ScalarField> templates;
  for (const auto& t : s.match.templates) templates.push_back(load_image_source(t, s.match.grid, s.match.base_dir));
  return run_match(image, templates, s.run);
}

void print_match(const MatchReport& r) {
  for (std::size_t i = 0; i < r.templates.size(); ++i) {
    const auto& t = r.templates[i];
    fmt::print("template {}: {}  theta1_hat={:.6g} theta2_hat={:.6g} residual_zero={} synchronized={} "
               "max_residual_final={:.3g}\n",
               i + 1, t.matched ? "MATCHED" : "not matched", t.theta1_hat, t.theta2_hat, t.residual_zero,
               t.synchronized, t.max_residual_final);
  }
}

int cmd_match(const CommonArgs& a) {
  const Settings s = load(a);
  const MatchReport r = match_once(s);
  const Json doc = envelope("match", s, to_json(r));
  if (auto dir = out_dir(a)) {
    r.trajectory.write_csv((*dir / "trajectory.csv").string());
    write_json(*dir / "report.json", doc);
    write_text(*dir / "effective_config.toml", to_toml(s));
  }
  if (!a.json) print_match(r);
  emit(a, doc);
  for (const auto& t : r.templates)
    if (t.matched) return kOk;
  return kNotMatched;
}

// --- sweep ---------------------------------------------------------------

int cmd_sweep(const CommonArgs& a) {
  const Settings s = load(a);
  if (s.sweep.axis.empty()) throw ConfigError("sweep.axis is not set");
  const auto reports = sweep(s, s.sweep.axis, s.sweep.values, [](const Settings& x) {
    try {
      return match_once(x);
    } catch (const ValidityError& e) {
      return e.partial();
    }
  });
  Json runs = Json::array();
  std::string csv = "value,template,ran,valid,matched,residual_zero,synchronized,theta1_hat,theta2_hat,"
                    "max_residual_final,sync_max_x\n";
  for (std::size_t k = 0; k < reports.size(); ++k) {
    const auto& r = reports[k];
    runs.push_back({{"value", s.sweep.values[k]}, {"report", to_json(r)}});
    for (std::size_t i = 0; i < r.templates.size(); ++i) {
      const auto& t = r.templates[i];
      csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", format_double(s.sweep.values[k]), i + 1, int(r.ran),
                         int(t.validity.ok()), int(t.matched), int(t.residual_zero), int(t.synchronized),
                         format_double(t.theta1_hat), format_double(t.theta2_hat),
                         format_double(t.max_residual_final), format_double(t.sync.max_x));
    }
    if (!a.json)
      for (std::size_t i = 0; i < r.templates.size(); ++i)
        fmt::print("{} = {}: template {} {} {}\n", s.sweep.axis, s.sweep.values[k], i + 1,
                   r.ran ? "ran" : "rejected",
                   r.ran ? (r.templates[i].matched ? "matched" : "not matched") : r.templates[i].validity.failures());
  }
  const Json doc = envelope("sweep", s, {{"axis", s.sweep.axis}, {"runs", runs}});
  if (auto dir = out_dir(a)) {
    write_json(*dir / "sweep.json", doc);
    write_text(*dir / "sweep_plot.csv", csv);
    write_text(*dir / "effective_config.toml", to_toml(s));
  }
  emit(a, doc);
  return kOk;
}

// --- garner --------------------------------------------------------------

int cmd_garner(const CommonArgs& a) {
  const Settings s = load(a);
  const auto dir = out_dir(a);
  if (dir) fs::create_directories(*dir / "members");
  const auto& g = s.garner;
  const GarnerCensus c = run_garner(
      g.spec, g.rotation, g.brightness, g.ensemble, s.run, g.linkage_deg * std::numbers::pi / 180.0, g.tv_fraction,
      [&dir](std::size_t k, const MatchReport& r) {
        if (dir) r.trajectory.write_csv((*dir / "members" / fmt::format("member_{:03d}.csv", k)).string());
      });
  const Json doc = envelope("garner", s, to_json(c));
  const double tol = 2.0 * std::numbers::pi / 180.0;
  const bool ok = c.census() == static_cast<std::size_t>(2 * c.order) && c.convergence_rate() >= 0.9 &&
                  census_spacing_error(c) <= tol && c.max_spread() <= tol;
  if (dir) {
    write_json(*dir / "census.json", doc);
    std::string csv = "seed,lambda2_init,lambda3_init,theta1_hat,theta2_hat,branch,converged,residual_zero,"
                      "theta2_variation_final\n";
    for (const auto& m : c.members)
      csv += fmt::format("{},{},{},{},{},{},{},{},{}\n", m.seed, format_double(m.lambda2_init),
                         format_double(m.lambda3_init), format_double(m.theta1_hat), format_double(m.theta2_hat),
                         m.branch, int(m.converged), int(m.residual_zero), format_double(m.theta2_variation_final));
    write_text(*dir / "garner_plot.csv", csv);
    write_text(*dir / "effective_config.toml", to_toml(s));
  }
  if (!a.json) {
    fmt::print("order {}: census {} (expected {}), converged {}/{}, spacing error {:.3g} deg, max spread {:.3g} deg\n",
               c.order, c.census(), 2 * c.order, c.converged(), c.members.size(),
               census_spacing_error(c) * 180.0 / std::numbers::pi, c.max_spread() * 180.0 / std::numbers::pi);
    for (const auto& k : c.clusters)
      fmt::print("  branch {:+d} angle {:.4f} rad ({} members)\n", k.branch, k.angle, k.size);
  }
  emit(a, doc);
  return ok ? kOk : kNotMatched;
}

// --- microscope ----------------------------------------------------------

int cmd_microscope(const CommonArgs& a) {
  const Settings s = load(a);
  const MicroscopeScenario scn = s.microscope.scenario();
  const MicroscopeReport r = run_microscope(scn, s.run);
  const Json doc = envelope("microscope", s, to_json(r));
  if (auto dir = out_dir(a)) {
    r.match.trajectory.write_csv((*dir / "trajectory.csv").string());
    write_json(*dir / "report.json", doc);
    const MicroscopeSignal sig = synth_microscope(scn, s.run.seed, s.run.horizon);
    const auto& tr = r.match.trajectory;
    const auto& th1 = tr.channel("theta1_hat_1");
    const auto& th2 = tr.channel("theta2_hat_1");
    const auto& e = tr.channel("e_1");
    std::string csv = "t,x,f0,theta1_true,theta1_hat,theta2_true,theta2_hat,e\n";
    for (std::size_t k = 0; k < tr.rows(); ++k) {
      const double t = tr.times()[k];
      csv += fmt::format("{},{},{},{},{},{},{},{}\n", format_double(t), format_double(sig.position(t)),
                         format_double(sig(t)), format_double(scn.theta1_at(t)), format_double(th1[k]),
                         format_double(scn.theta2), format_double(th2[k]), format_double(e[k]));
    }
    write_text(*dir / "microscope_plot.csv", csv);
    write_text(*dir / "effective_config.toml", to_toml(s));
  }
  if (!a.json) {
    print_match(r.match);
    fmt::print("theta1 relative error at end: {:.3g}\n", r.theta1_rel_error);
  }
  emit(a, doc);
  return r.match.templates.front().matched ? kOk : kNotMatched;
}

// --- bounds --------------------------------------------------------------

int cmd_bounds(const CommonArgs& a) {
  const Settings s = load(a);
  const auto& k = s.run.constants;
  std::vector<std::string> missing;
  for (auto [name, v] : {std::pair{"D", k.D}, {"D2", k.D2}, {"D3", k.D3}, {"D4", k.D4}, {"Delta", k.Delta}})
    if (!v) missing.push_back(std::string("constants.") + name);
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw ConfigError("bounds needs " + list);
  }
  MatchConstants c;
  c.D = *k.D;
  c.D2 = *k.D2;
  c.D3 = *k.D3;
  c.D4 = *k.D4;
  c.Delta = *k.Delta;
  const auto& p = s.run.adapt;
  p.validate();
  const double eps = table3_epsilon(c, p);
  const double g2 = table3_gamma2_max(c, p);
  const double sync = sync_upper_bound(s.bounds.n, s.run.detector.hr);
  const auto& hr = s.run.detector.hr;
  Json inputs = {{"tau", p.tau},
                 {"k", p.k},
                 {"gamma1", p.gamma1},
                 {"gamma2", p.gamma2},
                 {"theta1_max", p.theta1_range.hi},
                 {"theta2_range", {p.theta2_range.lo, p.theta2_range.hi}},
                 {"D", c.D},
                 {"D2", c.D2},
                 {"D3", c.D3},
                 {"D4", c.D4},
                 {"Delta", c.Delta},
                 {"M1", c.M1(p)},
                 {"n", s.bounds.n},
                 {"a", hr.a},
                 {"b", hr.b},
                 {"d", hr.d}};
  Json result = {{"inputs", inputs},
                 {"table3_epsilon", report_detail::num(eps)},
                 {"table3_gamma2_max", report_detail::num(g2)},
                 {"sync_upper_bound", report_detail::num(sync)}};
  if (auto dir = out_dir(a)) write_json(*dir / "bounds.json", result);
  if (a.json) {
    std::cout << result.dump(2) << "\n";
  } else {
    fmt::print("inputs: tau={} k={} gamma1={} gamma2={} theta1_max={} theta2_range=[{}, {}]\n", p.tau, p.k, p.gamma1,
               p.gamma2, p.theta1_range.hi, p.theta2_range.lo, p.theta2_range.hi);
    fmt::print("        D={} D2={} D3={} D4={} Delta={} M1={}\n", c.D, c.D2, c.D3, c.D4, c.Delta, c.M1(p));
    fmt::print("        n={} a={} b={} d={}\n", s.bounds.n, hr.a, hr.b, hr.d);
    fmt::print("table3_epsilon     = {}\n", format_double(eps));
    fmt::print("table3_gamma2_max  = {}\n", format_double(g2));
    fmt::print("sync_upper_bound   = {}\n", format_double(sync));
  }
  return kOk;
}

// --- sample-optimality ---------------------------------------------------

int cmd_sample_optimality(const CommonArgs& a) {
  const Settings s = load(a);
  const auto& t = s.tradeoff;
  std::vector<double> probs = t.probs;
  if (probs.empty()) probs.assign(t.ns, 1.0 / static_cast<double>(t.ns));
  std::vector<std::size_t> ks;
  for (auto k : t.ks) {
    if (k <= 0) throw ConfigError("tradeoff.ks entries must be positive");
    ks.push_back(static_cast<std::size_t>(k));
  }
  if (ks.empty()) ks = power_of_two_divisors(t.nx * t.ny);
  const TradeoffTable tab = sampling_tradeoff(t.nx, t.ny, t.ns, probs, t.lam1, t.lam2, ks);
  const Json doc = envelope("sample-optimality", s, to_json(tab));
  if (auto dir = out_dir(a)) {
    write_json(*dir / "tradeoff.json", doc);
    std::string csv = "k,C,H,Q\n";
    for (const auto& r : tab.rows)
      csv += fmt::format("{},{},{},{}\n", r.k, format_double(r.C), format_double(r.H), format_double(r.Q));
    write_text(*dir / "tradeoff_plot.csv", csv);
  }
  if (!a.json) {
    fmt::print("{:>8} {:>10} {:>10} {:>14}\n", "k", "C", "H", "Q");
    for (const auto& r : tab.rows) fmt::print("{:>8} {:>10.6g} {:>10.6g} {:>14.8g}\n", r.k, r.C, r.H, r.Q);
    fmt::print("argmin k = {} (interior: {}, unimodal: {})\n", tab.argmin_k, tab.argmin_interior(), tab.unimodal());
  }
  emit(a, doc);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive template matching with a synchronizing detector"};
  app.require_subcommand(1);
  CommonArgs args;
  struct Cmd {
    const char* name;
    const char* help;
    bool config_required;
    int (*fn)(const CommonArgs&);
  };
  const Cmd cmds[] = {
      {"match", "match templates against an image", true, cmd_match},
      {"sweep", "repeat match runs over one config field", true, cmd_sweep},
      {"garner", "rotation-matching census on a symmetric dot pattern", true, cmd_garner},
      {"microscope", "track blur and brightness of a synthetic line scan", true, cmd_microscope},
      {"bounds", "evaluate the adaptation and synchronization bounds", true, cmd_bounds},
      {"sample-optimality", "sampling cost / entropy trade-off table", false, cmd_sample_optimality},
  };
  std::vector<std::pair<CLI::App*, const Cmd*>> subs;
  for (const auto& c : cmds) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    add_common(sub, args, c.config_required);
    subs.emplace_back(sub, &c);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  try {
    for (const auto& [sub, c] : subs)
      if (sub->parsed()) return c->fn(args);
  } catch (const ValidityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    for (std::size_t i = 0; i < e.partial().templates.size(); ++i)
      for (const auto& c : e.partial().templates[i].validity.conditions)
        if (c.fatal && !c.pass)
          std::cerr << fmt::format("  template {}: {}: value={:.6g} bound={:.6g}\n", i + 1, c.name, c.value, c.bound);
    return kConfigError;
  } catch (const StepError& e) {
    std::cerr << "integration failed: " << e.what() << "\n";
    return kNumericError;
  } catch (const EvaluationError& e) {
    std::cerr << "integration failed: " << e.what() << "\n";
    return kNumericError;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kConfigError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
  return kConfigError;
}
