#pragma once

// JSON views of run reports. Keys keep insertion order so output is stable.

#include <cmath>
#include <string>

#include <json.hpp>

#include "tmatch/config.hpp"

namespace tmatch {

using Json = nlohmann::ordered_json;

namespace report_detail {

// Non-finite numbers become null.
inline Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json value_json(const toml::Value& v) {
  struct Visitor {
    Json operator()(bool b) const { return b; }
    Json operator()(std::int64_t i) const { return i; }
    Json operator()(double d) const { return num(d); }
    Json operator()(const std::string& s) const { return s; }
    Json operator()(const toml::Array& a) const {
      Json out = Json::array();
      for (const auto& e : a) out.push_back(value_json(e));
      return out;
    }
  };
  return std::visit(Visitor{}, v.v);
}

}  // namespace report_detail

/// Settings as nested tables, mirroring the config file layout.
inline Json to_json(const Settings& s) {
  Json out = Json::object();
  for (const auto& b : bindings()) {
    const auto v = b.get(s);
    if (!v) continue;
    const auto dot = b.key.find('.');
    out[b.key.substr(0, dot)][b.key.substr(dot + 1)] = report_detail::value_json(*v);
  }
  return out;
}

namespace report_detail {

inline toml::Value toml_from_json(const Json& j, const std::string& key) {
  if (j.is_boolean()) return toml::Value{j.get<bool>()};
  if (j.is_number_integer()) return toml::Value{j.get<std::int64_t>()};
  if (j.is_number_float()) return toml::Value{j.get<double>()};
  if (j.is_string()) return toml::Value{j.get<std::string>()};
  if (j.is_array()) {
    toml::Array a;
    for (const auto& e : j) a.push_back(toml_from_json(e, key));
    return toml::Value{a};
  }
  throw ConfigError("config key '" + key + "' has an unsupported JSON value");
}

}  // namespace report_detail

/// Inverse of to_json(Settings): reads the nested-table object back. Null
/// entries (non-finite numbers) are skipped.
inline Settings settings_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("config JSON must be an object");
  Settings s;
  for (const auto& [table, fields] : j.items()) {
    if (!fields.is_object()) throw ConfigError("config JSON table '" + table + "' must be an object");
    for (const auto& [key, v] : fields.items()) {
      if (v.is_null()) continue;
      const std::string full = table + "." + key;
      apply_value(s, full, report_detail::toml_from_json(v, full));
    }
  }
  return s;
}

inline Json to_json(const ValidityReport& r) {
  using report_detail::num;
  Json out = Json::array();
  for (const auto& c : r.conditions)
    out.push_back({{"name", c.name},
                   {"pass", c.pass},
                   {"fatal", c.fatal},
                   {"value", num(c.value)},
                   {"bound", num(c.bound)},
                   {"margin", num(c.margin)},
                   {"note", c.note}});
  return out;
}

inline Json to_json(const MatchConstants& c) {
  using report_detail::num;
  return {{"D", num(c.D)},   {"D2", num(c.D2)},       {"D3", num(c.D3)},
          {"D4", num(c.D4)}, {"Delta", num(c.Delta)}, {"recommended_bias", num(c.recommended_bias)}};
}

inline Json to_json(const PairSync& p) {
  using report_detail::num;
  return {{"i", p.i},
          {"j", p.j},
          {"rms_x", num(p.rms_x)},
          {"rms_y", num(p.rms_y)},
          {"rms_z", num(p.rms_z)},
          {"max_x", num(p.max_x)},
          {"max_y", num(p.max_y)},
          {"max_z", num(p.max_z)},
          {"t_syn", num(p.t_syn)},
          {"synchronized", p.synchronized}};
}

inline Json to_json(const MatchReport& r) {
  using report_detail::num;
  Json tpls = Json::array();
  for (std::size_t i = 0; i < r.templates.size(); ++i) {
    const auto& t = r.templates[i];
    tpls.push_back({{"index", i + 1},
                    {"matched", t.matched},
                    {"residual_zero", t.residual_zero},
                    {"synchronized", t.synchronized},
                    {"theta1_hat", num(t.theta1_hat)},
                    {"theta2_hat", num(t.theta2_hat)},
                    {"lambda1", num(t.lambda1)},
                    {"lambda2", num(t.lambda2)},
                    {"lambda3", num(t.lambda3)},
                    {"final_error", num(t.final_error)},
                    {"max_residual_final", num(t.max_residual_final)},
                    {"max_residual", num(t.max_residual)},
                    {"last_active_time", num(t.last_active_time)},
                    {"theta2_variation_final", num(t.theta2_variation_final)},
                    {"state_bound", num(t.state_bound)},
                    {"sync", to_json(t.sync)},
                    {"constants", to_json(t.constants)},
                    {"bounds", {{"epsilon_min", num(t.epsilon_min)}, {"gamma2_max", num(t.gamma2_max)}}},
                    {"validity", to_json(t.validity)}});
  }
  return {{"ran", r.ran},
          {"bias", num(r.bias)},
          {"sync_bound", num(r.sync_bound)},
          {"t_end", num(r.t_end)},
          {"templates", tpls}};
}

inline Json to_json(const GarnerCensus& c) {
  using report_detail::num;
  Json members = Json::array();
  for (const auto& m : c.members)
    members.push_back({{"seed", m.seed},
                       {"lambda2_init", num(m.lambda2_init)},
                       {"lambda3_init", num(m.lambda3_init)},
                       {"theta1_hat", num(m.theta1_hat)},
                       {"theta2_hat", num(m.theta2_hat)},
                       {"branch", m.branch},
                       {"converged", m.converged},
                       {"residual_zero", m.residual_zero},
                       {"theta2_variation_final", num(m.theta2_variation_final)},
                       {"max_residual_final", num(m.max_residual_final)}});
  Json clusters = Json::array();
  for (const auto& k : c.clusters)
    clusters.push_back({{"branch", k.branch}, {"angle", num(k.angle)}, {"spread", num(k.spread)}, {"size", k.size}});
  return {{"order", c.order},
          {"rotation", num(c.rotation)},
          {"brightness", num(c.brightness)},
          {"ensemble", c.members.size()},
          {"converged", c.converged()},
          {"convergence_rate", num(c.convergence_rate())},
          {"census", c.census()},
          {"expected_census", 2 * c.order},
          {"max_cluster_spread", num(c.max_spread())},
          {"spacing_error", num(census_spacing_error(c))},
          {"clusters", clusters},
          {"members", members}};
}

inline Json to_json(const MicroscopeReport& r) {
  using report_detail::num;
  return {{"theta1_true_end", num(r.theta1_true_end)},
          {"theta1_rel_error", num(r.theta1_rel_error)},
          {"theta2_true", num(r.theta2_true)},
          {"noise_sd_effective", num(r.noise_sd_effective)},
          {"match", to_json(r.match)}};
}

inline Json to_json(const TradeoffTable& t) {
  using report_detail::num;
  Json rows = Json::array();
  for (const auto& r : t.rows) rows.push_back({{"k", r.k}, {"C", num(r.C)}, {"H", num(r.H)}, {"Q", num(r.Q)}});
  return {{"argmin_k", t.argmin_k}, {"unimodal", t.unimodal()}, {"argmin_interior", t.argmin_interior()}, {"rows", rows}};
}

}  // namespace tmatch
