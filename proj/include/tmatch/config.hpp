#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tmatch/engine.hpp"
#include "tmatch/experiments.hpp"
#include "tmatch/pgm.hpp"
#include "tmatch/toml.hpp"
#include "tmatch/trajectory.hpp"

namespace tmatch {

/// Image inputs of a match run. Sources are "blob:SEED", "garner:ORDER:SEED"
/// or a PGM path (relative paths resolve against the config file).
struct MatchSettings {
  std::string image = "blob:7";
  std::vector<std::string> templates{"blob:7"};
  std::size_t grid = 32;
  std::string base_dir;
};

struct GarnerSettings {
  GarnerSpec spec{};
  double rotation = 0.7;
  double brightness = 1.0;
  std::size_t ensemble = 40;
  double linkage_deg = 5.0;
  double tv_fraction = 1e-3;
};

struct MicroscopeSettings {
  std::uint64_t profile_seed = 0;
  std::size_t pixels = kMicroscopePixels;
  double theta2 = 0.1;
  double noise_sigma = 0.0;
  std::size_t n_avg = 8;
  double scan_speed = 1.0;
  std::vector<double> bleach_times{0.0};
  std::vector<double> bleach_theta1{1.0};

  MicroscopeScenario scenario() const {
    if (bleach_times.size() != bleach_theta1.size())
      throw ConfigError("microscope.bleach_times and microscope.bleach_theta1 differ in length");
    MicroscopeScenario s;
    s.profile = default_profile(profile_seed, pixels);
    for (std::size_t k = 0; k < bleach_times.size(); ++k) s.bleach.push_back({bleach_times[k], bleach_theta1[k]});
    s.theta2 = theta2;
    s.noise_sigma = noise_sigma;
    s.n_avg = n_avg;
    s.scan_speed = scan_speed;
    s.validate();
    return s;
  }
};

struct SweepSettings {
  std::string axis;
  std::vector<double> values;
};

struct TradeoffSettings {
  std::size_t nx = 16;
  std::size_t ny = 16;
  std::size_t ns = 256;
  double lam1 = 1.0;
  double lam2 = 1e4;
  std::vector<std::int64_t> ks;  // empty: every power of two dividing nx * ny
  std::vector<double> probs;     // empty: uniform
};

struct BoundsSettings {
  std::size_t n = 1;  // detector network has n + 1 nodes
};

/// Everything a config file can set.
struct Settings {
  RunConfig run{};
  MatchSettings match{};
  GarnerSettings garner{};
  MicroscopeSettings microscope{};
  SweepSettings sweep{};
  TradeoffSettings tradeoff{};
  BoundsSettings bounds{};
};

namespace config_detail {

using toml::Value;

inline double as_double(const Value& v, const std::string& key) {
  if (const auto* i = std::get_if<std::int64_t>(&v.v)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&v.v)) return *d;
  throw ConfigError(key + ": expected a number, got " + v.type_name());
}

inline std::int64_t as_int(const Value& v, const std::string& key) {
  if (const auto* i = std::get_if<std::int64_t>(&v.v)) return *i;
  throw ConfigError(key + ": expected an integer, got " + v.type_name());
}

inline std::size_t as_size(const Value& v, const std::string& key) {
  const auto i = as_int(v, key);
  if (i < 0) throw ConfigError(key + ": must not be negative");
  return static_cast<std::size_t>(i);
}

inline bool as_bool(const Value& v, const std::string& key) {
  if (const auto* b = std::get_if<bool>(&v.v)) return *b;
  throw ConfigError(key + ": expected true or false, got " + v.type_name());
}

inline const std::string& as_string(const Value& v, const std::string& key) {
  if (const auto* s = std::get_if<std::string>(&v.v)) return *s;
  throw ConfigError(key + ": expected a string, got " + v.type_name());
}

inline const toml::Array& as_array(const Value& v, const std::string& key) {
  if (const auto* a = std::get_if<toml::Array>(&v.v)) return *a;
  throw ConfigError(key + ": expected an array, got " + v.type_name());
}

inline std::vector<double> as_doubles(const Value& v, const std::string& key) {
  std::vector<double> out;
  for (const auto& e : as_array(v, key)) out.push_back(as_double(e, key));
  return out;
}

inline Value doubles_value(const std::vector<double>& xs) {
  toml::Array a;
  for (double x : xs) a.push_back({x});
  return {a};
}

}  // namespace config_detail

/// One configurable field: its dotted key, a setter and a getter. Getters of
/// optional fields return nullopt while unset.
struct Binding {
  std::string key;
  bool numeric = false;  // scalar number, usable as a sweep axis
  std::function<void(Settings&, const toml::Value&)> set;
  std::function<std::optional<toml::Value>(const Settings&)> get;
};

inline const std::vector<Binding>& bindings() {
  using namespace config_detail;
  static const std::vector<Binding> table = [] {
    std::vector<Binding> b;
    auto real = [&b](const std::string& key, auto acc) {
      b.push_back({key, true, [key, acc](Settings& s, const Value& v) { acc(s) = as_double(v, key); },
                   [acc](const Settings& s) -> std::optional<Value> { return Value{acc(const_cast<Settings&>(s))}; }});
    };
    auto opt_real = [&b](const std::string& key, auto acc) {
      b.push_back({key, true, [key, acc](Settings& s, const Value& v) { acc(s) = as_double(v, key); },
                   [acc](const Settings& s) -> std::optional<Value> {
                     const auto& o = acc(const_cast<Settings&>(s));
                     if (!o) return std::nullopt;
                     return Value{*o};
                   }});
    };
    auto count = [&b](const std::string& key, auto acc) {
      b.push_back({key, true,
                   [key, acc](Settings& s, const Value& v) {
                     acc(s) = static_cast<std::remove_reference_t<decltype(acc(s))>>(as_size(v, key));
                   },
                   [acc](const Settings& s) -> std::optional<Value> {
                     return Value{static_cast<std::int64_t>(acc(const_cast<Settings&>(s)))};
                   }});
    };
    auto flag = [&b](const std::string& key, auto acc) {
      b.push_back({key, false, [key, acc](Settings& s, const Value& v) { acc(s) = as_bool(v, key); },
                   [acc](const Settings& s) -> std::optional<Value> { return Value{acc(const_cast<Settings&>(s))}; }});
    };
    auto text = [&b](const std::string& key, auto acc) {
      b.push_back({key, false, [key, acc](Settings& s, const Value& v) { acc(s) = as_string(v, key); },
                   [acc](const Settings& s) -> std::optional<Value> { return Value{acc(const_cast<Settings&>(s))}; }});
    };
    auto interval = [&b](const std::string& key, auto acc) {
      b.push_back({key, false,
                   [key, acc](Settings& s, const Value& v) {
                     const auto xs = as_doubles(v, key);
                     if (xs.size() != 2) throw ConfigError(key + ": expected [lo, hi]");
                     acc(s) = Interval{xs[0], xs[1]};
                   },
                   [acc](const Settings& s) -> std::optional<Value> {
                     const Interval& i = acc(const_cast<Settings&>(s));
                     return doubles_value({i.lo, i.hi});
                   }});
    };
    auto real_list = [&b](const std::string& key, auto acc) {
      b.push_back({key, false, [key, acc](Settings& s, const Value& v) { acc(s) = as_doubles(v, key); },
                   [acc](const Settings& s) -> std::optional<Value> {
                     return doubles_value(acc(const_cast<Settings&>(s)));
                   }});
    };
    // Enumerations stored as their canonical names.
    auto choice = [&b](const std::string& key, auto parse, auto acc) {
      b.push_back({key, false, [key, parse, acc](Settings& s, const Value& v) { acc(s) = parse(as_string(v, key)); },
                   [acc](const Settings& s) -> std::optional<Value> {
                     return Value{std::string(to_string(acc(const_cast<Settings&>(s))))};
                   }});
    };

    real("run.dt", [](Settings& s) -> double& { return s.run.dt; });
    real("run.horizon", [](Settings& s) -> double& { return s.run.horizon; });
    count("run.seed", [](Settings& s) -> std::uint64_t& { return s.run.seed; });
    count("run.record_stride", [](Settings& s) -> std::size_t& { return s.run.record_stride; });
    real("run.final_window", [](Settings& s) -> double& { return s.run.final_window; });
    flag("run.record_nodes", [](Settings& s) -> bool& { return s.run.record_nodes; });
    choice("run.kind", [](const std::string& v) { return parse_perturb_kind(v); },
           [](Settings& s) -> PerturbKind& { return s.run.kind; });
    real("run.theta1", [](Settings& s) -> double& { return s.run.theta1; });
    real("run.theta2", [](Settings& s) -> double& { return s.run.theta2; });
    opt_real("run.pin_theta2", [](Settings& s) -> std::optional<double>& { return s.run.pin_theta2; });

    real("adapt.tau", [](Settings& s) -> double& { return s.run.adapt.tau; });
    real("adapt.k", [](Settings& s) -> double& { return s.run.adapt.k; });
    real("adapt.gamma1", [](Settings& s) -> double& { return s.run.adapt.gamma1; });
    real("adapt.gamma2", [](Settings& s) -> double& { return s.run.adapt.gamma2; });
    real("adapt.epsilon", [](Settings& s) -> double& { return s.run.adapt.epsilon; });
    interval("adapt.theta1_range", [](Settings& s) -> Interval& { return s.run.adapt.theta1_range; });
    interval("adapt.theta2_range", [](Settings& s) -> Interval& { return s.run.adapt.theta2_range; });
    real("adapt.min_gamma_ratio", [](Settings& s) -> double& { return s.run.adapt.min_gamma_ratio; });
    flag("adapt.enforce_epsilon", [](Settings& s) -> bool& { return s.run.adapt.enforce_epsilon; });
    flag("adapt.renormalize", [](Settings& s) -> bool& { return s.run.adapt.renormalize; });

    choice("encoder.mode", [](const std::string& v) { return parse_schedule_mode(v); },
           [](Settings& s) -> ScheduleMode& { return s.run.encoder.mode; });
    count("encoder.strips_h", [](Settings& s) -> std::size_t& { return s.run.encoder.strips_h; });
    count("encoder.strips_v", [](Settings& s) -> std::size_t& { return s.run.encoder.strips_v; });
    real("encoder.omega_base", [](Settings& s) -> double& { return s.run.encoder.omega_base; });
    count("encoder.sweep_nx", [](Settings& s) -> std::size_t& { return s.run.encoder.sweep_nx; });
    count("encoder.sweep_ny", [](Settings& s) -> std::size_t& { return s.run.encoder.sweep_ny; });
    real("encoder.sweep_period", [](Settings& s) -> double& { return s.run.encoder.sweep_period; });
    real("encoder.scan_x_min", [](Settings& s) -> double& { return s.run.encoder.scan.x_min; });
    real("encoder.scan_x_max", [](Settings& s) -> double& { return s.run.encoder.scan.x_max; });
    real("encoder.scan_speed", [](Settings& s) -> double& { return s.run.encoder.scan.k_s; });
    real("encoder.scan_y", [](Settings& s) -> double& { return s.run.encoder.scan.y; });
    choice("encoder.functional", [](const std::string& v) { return parse_functional_kind(v); },
           [](Settings& s) -> FunctionalKind& { return s.run.encoder.functional.kind; });
    real("encoder.kernel_x0", [](Settings& s) -> double& { return s.run.encoder.functional.x0; });
    real("encoder.kernel_y0", [](Settings& s) -> double& { return s.run.encoder.functional.y0; });
    b.push_back({"encoder.band", false,
                 [](Settings& s, const Value& v) {
                   const auto xs = as_doubles(v, "encoder.band");
                   if (xs.size() != 4) throw ConfigError("encoder.band: expected four numbers");
                   std::copy(xs.begin(), xs.end(), s.run.encoder.functional.band.begin());
                 },
                 [](const Settings& s) -> std::optional<Value> {
                   const auto& a = s.run.encoder.functional.band;
                   return doubles_value({a.begin(), a.end()});
                 }});
    opt_real("encoder.bias", [](Settings& s) -> std::optional<double>& { return s.run.encoder.bias; });
    real("encoder.bias_floor_fraction", [](Settings& s) -> double& { return s.run.encoder.bias_floor_fraction; });
    count("encoder.table_points", [](Settings& s) -> std::size_t& { return s.run.encoder.table_points; });
    choice("encoder.lookup", [](const std::string& v) { return parse_theta2_lookup(v); },
           [](Settings& s) -> Theta2Lookup& { return s.run.encoder.lookup; });
    count("encoder.scan_samples", [](Settings& s) -> std::size_t& { return s.run.encoder.scan_samples; });

    flag("constants.composite", [](Settings& s) -> bool& { return s.run.constants.composite; });
    real("constants.safety", [](Settings& s) -> double& { return s.run.constants.safety; });
    count("constants.time_samples", [](Settings& s) -> std::size_t& { return s.run.constants.time_samples; });
    opt_real("constants.D", [](Settings& s) -> std::optional<double>& { return s.run.constants.D; });
    opt_real("constants.D2", [](Settings& s) -> std::optional<double>& { return s.run.constants.D2; });
    opt_real("constants.D3", [](Settings& s) -> std::optional<double>& { return s.run.constants.D3; });
    opt_real("constants.D4", [](Settings& s) -> std::optional<double>& { return s.run.constants.D4; });
    opt_real("constants.Delta", [](Settings& s) -> std::optional<double>& { return s.run.constants.Delta; });

    flag("detector.enabled", [](Settings& s) -> bool& { return s.run.detector.enabled; });
    real("detector.gamma", [](Settings& s) -> double& { return s.run.detector.gamma; });
    real("detector.delta_thresh", [](Settings& s) -> double& { return s.run.detector.delta_thresh; });
    real("detector.window_fraction", [](Settings& s) -> double& { return s.run.detector.window_fraction; });
    real("detector.input_gain", [](Settings& s) -> double& { return s.run.detector.input_gain; });
    real("detector.a", [](Settings& s) -> double& { return s.run.detector.hr.a; });
    real("detector.b", [](Settings& s) -> double& { return s.run.detector.hr.b; });
    real("detector.c", [](Settings& s) -> double& { return s.run.detector.hr.c; });
    real("detector.d", [](Settings& s) -> double& { return s.run.detector.hr.d; });
    real("detector.s", [](Settings& s) -> double& { return s.run.detector.hr.s; });
    real("detector.x0", [](Settings& s) -> double& { return s.run.detector.hr.x0; });
    real("detector.eps", [](Settings& s) -> double& { return s.run.detector.hr.eps; });
    real("detector.I", [](Settings& s) -> double& { return s.run.detector.hr.I; });

    real("init.lambda1", [](Settings& s) -> double& { return s.run.init.lambda1; });
    real("init.lambda2", [](Settings& s) -> double& { return s.run.init.lambda2; });
    real("init.lambda3", [](Settings& s) -> double& { return s.run.init.lambda3; });
    flag("init.random", [](Settings& s) -> bool& { return s.run.init.random; });

    text("match.image", [](Settings& s) -> std::string& { return s.match.image; });
    b.push_back({"match.templates", false,
                 [](Settings& s, const Value& v) {
                   s.match.templates.clear();
                   for (const auto& e : as_array(v, "match.templates"))
                     s.match.templates.push_back(as_string(e, "match.templates"));
                 },
                 [](const Settings& s) -> std::optional<Value> {
                   toml::Array a;
                   for (const auto& t : s.match.templates) a.push_back({t});
                   return Value{a};
                 }});
    count("match.grid", [](Settings& s) -> std::size_t& { return s.match.grid; });

    b.push_back({"garner.order", true,
                 [](Settings& s, const Value& v) { s.garner.spec.order = static_cast<int>(as_int(v, "garner.order")); },
                 [](const Settings& s) -> std::optional<Value> {
                   return Value{static_cast<std::int64_t>(s.garner.spec.order)};
                 }});
    count("garner.grid", [](Settings& s) -> std::size_t& { return s.garner.spec.grid; });
    count("garner.layout_seed", [](Settings& s) -> std::uint64_t& { return s.garner.spec.layout_seed; });
    real("garner.spacing", [](Settings& s) -> double& { return s.garner.spec.spacing; });
    real("garner.sigma", [](Settings& s) -> double& { return s.garner.spec.sigma; });
    real("garner.rotation", [](Settings& s) -> double& { return s.garner.rotation; });
    real("garner.brightness", [](Settings& s) -> double& { return s.garner.brightness; });
    count("garner.ensemble", [](Settings& s) -> std::size_t& { return s.garner.ensemble; });
    real("garner.linkage_deg", [](Settings& s) -> double& { return s.garner.linkage_deg; });
    real("garner.tv_fraction", [](Settings& s) -> double& { return s.garner.tv_fraction; });

    count("microscope.profile_seed", [](Settings& s) -> std::uint64_t& { return s.microscope.profile_seed; });
    count("microscope.pixels", [](Settings& s) -> std::size_t& { return s.microscope.pixels; });
    real("microscope.theta2", [](Settings& s) -> double& { return s.microscope.theta2; });
    real("microscope.noise_sigma", [](Settings& s) -> double& { return s.microscope.noise_sigma; });
    count("microscope.n_avg", [](Settings& s) -> std::size_t& { return s.microscope.n_avg; });
    real("microscope.scan_speed", [](Settings& s) -> double& { return s.microscope.scan_speed; });
    real_list("microscope.bleach_times", [](Settings& s) -> std::vector<double>& { return s.microscope.bleach_times; });
    real_list("microscope.bleach_theta1", [](Settings& s) -> std::vector<double>& { return s.microscope.bleach_theta1; });

    text("sweep.axis", [](Settings& s) -> std::string& { return s.sweep.axis; });
    real_list("sweep.values", [](Settings& s) -> std::vector<double>& { return s.sweep.values; });

    count("tradeoff.nx", [](Settings& s) -> std::size_t& { return s.tradeoff.nx; });
    count("tradeoff.ny", [](Settings& s) -> std::size_t& { return s.tradeoff.ny; });
    count("tradeoff.ns", [](Settings& s) -> std::size_t& { return s.tradeoff.ns; });
    real("tradeoff.lam1", [](Settings& s) -> double& { return s.tradeoff.lam1; });
    real("tradeoff.lam2", [](Settings& s) -> double& { return s.tradeoff.lam2; });
    b.push_back({"tradeoff.ks", false,
                 [](Settings& s, const Value& v) {
                   s.tradeoff.ks.clear();
                   for (const auto& e : as_array(v, "tradeoff.ks")) s.tradeoff.ks.push_back(as_int(e, "tradeoff.ks"));
                 },
                 [](const Settings& s) -> std::optional<Value> {
                   toml::Array a;
                   for (auto k : s.tradeoff.ks) a.push_back({k});
                   return Value{a};
                 }});
    real_list("tradeoff.probs", [](Settings& s) -> std::vector<double>& { return s.tradeoff.probs; });

    count("bounds.n", [](Settings& s) -> std::size_t& { return s.bounds.n; });
    return b;
  }();
  return table;
}

inline const Binding* find_binding(const std::string& key) {
  for (const auto& b : bindings())
    if (b.key == key) return &b;
  return nullptr;
}

inline void apply_value(Settings& s, const std::string& key, const toml::Value& v) {
  const Binding* b = find_binding(key);
  if (!b) throw ConfigError("unknown config key '" + key + "'");
  b->set(s, v);
}

inline void apply_document(Settings& s, const toml::Document& doc) {
  for (const auto& [k, v] : doc) apply_value(s, k, v);
}

/// Applies a "table.key=value" override.
inline void apply_override(Settings& s, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  std::string key = assignment.substr(0, eq);
  while (!key.empty() && key.back() == ' ') key.pop_back();
  std::string rhs = assignment.substr(eq + 1);
  while (!rhs.empty() && rhs.front() == ' ') rhs.erase(0, 1);
  apply_value(s, key, toml::parse_scalar(rhs));
}

inline Settings load_settings(const std::string& path) {
  Settings s;
  apply_document(s, toml::parse_file(path));
  s.match.base_dir = std::filesystem::path(path).parent_path().string();
  return s;
}

inline Settings settings_from_string(const std::string& text) {
  Settings s;
  apply_document(s, toml::parse(text));
  return s;
}

/// Current values of every set field, keyed like the config file.
inline toml::Document to_document(const Settings& s) {
  toml::Document d;
  for (const auto& b : bindings())
    if (auto v = b.get(s)) d.emplace(b.key, *v);
  return d;
}

namespace config_detail {

inline std::string toml_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::string s = format_double(v);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

inline std::string toml_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

inline std::string toml_value(const toml::Value& v) {
  struct Visitor {
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(double d) const { return toml_double(d); }
    std::string operator()(const std::string& s) const { return toml_string(s); }
    std::string operator()(const toml::Array& a) const {
      std::string out = "[";
      for (std::size_t k = 0; k < a.size(); ++k) out += (k ? ", " : "") + toml_value(a[k]);
      return out + "]";
    }
  };
  return std::visit(Visitor{}, v.v);
}

}  // namespace config_detail

/// Effective configuration as TOML, tables in binding order.
inline std::string to_toml(const Settings& s) {
  std::ostringstream out;
  std::string table;
  for (const auto& b : bindings()) {
    const auto v = b.get(s);
    if (!v) continue;
    const auto dot = b.key.find('.');
    const std::string t = b.key.substr(0, dot);
    if (t != table) {
      out << (table.empty() ? "" : "\n") << '[' << t << "]\n";
      table = t;
    }
    out << b.key.substr(dot + 1) << " = " << config_detail::toml_value(*v) << '\n';
  }
  return out.str();
}

/// Resolves an image source string to a field.
inline ScalarField load_image_source(const std::string& src, std::size_t grid, const std::string& base_dir = "") {
  auto fields = [&src] {
    std::vector<std::string> parts;
    std::stringstream ss(src);
    std::string p;
    while (std::getline(ss, p, ':')) parts.push_back(p);
    return parts;
  }();
  auto number = [&src](const std::string& s) -> std::uint64_t {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("bad number in image source '" + src + "'");
    }
  };
  if (!fields.empty() && fields[0] == "blob") {
    if (fields.size() != 2) throw ConfigError("image source '" + src + "' must be blob:SEED");
    return blob_pattern(grid, number(fields[1]));
  }
  if (!fields.empty() && fields[0] == "garner") {
    if (fields.size() != 3) throw ConfigError("image source '" + src + "' must be garner:ORDER:SEED");
    GarnerSpec g;
    g.order = static_cast<int>(number(fields[1]));
    g.layout_seed = number(fields[2]);
    g.grid = grid;
    return garner_pattern(g);
  }
  std::filesystem::path p(src);
  if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
  return read_pgm(p.string());
}

/// Independent runs of `run` with one numeric field set to each value in
/// turn; seeds and everything else stay as in `base`.
inline std::vector<MatchReport> sweep(const Settings& base, const std::string& axis, const std::vector<double>& values,
                                      const std::function<MatchReport(const Settings&)>& run) {
  const Binding* b = find_binding(axis);
  if (!b || !b->numeric) throw ConfigError("unknown sweep axis '" + axis + "'");
  std::vector<MatchReport> out;
  out.reserve(values.size());
  for (double v : values) {
    Settings s = base;
    toml::Value val{v};
    if (std::holds_alternative<std::int64_t>(b->get(s).value_or(toml::Value{0.0}).v)) {
      if (v != std::floor(v)) throw ConfigError("sweep axis '" + axis + "' needs integer values");
      val = toml::Value{static_cast<std::int64_t>(v)};
    }
    b->set(s, val);
    out.push_back(run(s));
  }
  return out;
}

/// RunConfig-level sweep over run / adapt / encoder / constants / detector /
/// init fields.
inline std::vector<MatchReport> sweep(const RunConfig& base, const std::string& axis, const std::vector<double>& values,
                                      const std::function<MatchReport(const RunConfig&)>& run) {
  const std::string table = axis.substr(0, axis.find('.'));
  static const std::vector<std::string> run_tables{"run", "adapt", "encoder", "constants", "detector", "init"};
  if (std::find(run_tables.begin(), run_tables.end(), table) == run_tables.end())
    throw ConfigError("unknown sweep axis '" + axis + "'");
  Settings s;
  s.run = base;
  return sweep(s, axis, values, [&run](const Settings& x) { return run(x.run); });
}

}  // namespace tmatch
