#pragma once

// JSON scenario documents. Schema (SI units):
//
// {
//   "name": "two_magnet_chain",
//   "interval": {"t0": 0.0, "t_end": 1.0},
//   "circuit_dt": 0.005,
//   "output_dir": "out",
//   "netlist": { ...netlist document... } | "path/relative/to/scenario.json",
//   "solver": {"mode": "plain"|"accelerated", "tol", "k_max", "windows",
//              "exchange_dt", "parallel", "elastic_at": "end"|"peak_current"},
//   "magnets": [{
//     "id": "M1",
//     "geometry":  {"length", "n_elements", "coil_first", "coil_last",
//                   "depth", "turns", "coil_height"},
//     "materials": {"sigma_eddy", "sigma_eddy_outside", "sigma_n", "nu",
//                   "rho_cp", "k", "youngs", "expansion", "heat_source"},
//     "T_bath", "T_ref", "dt_magnet", "feed_eddy_losses",
//     "quench": {"enabled", "T_c0", "B_c", "J_c", "dT_q",
//                "trigger": {"time", "first_element", "last_element"}}
//   }, ...]
// }
//
// Every key except "netlist" and "magnets" has a default.

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "quenchwr/circuit.hpp"
#include "quenchwr/errors.hpp"
#include "quenchwr/scenario.hpp"

namespace quenchwr {

namespace detail {

class JsonReader {
 public:
  JsonReader(const nlohmann::json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) fail("must be an object");
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ValidationError((path_.empty() ? std::string("scenario") : path_) + ": " + what);
  }

  std::string at(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  bool has(const char* key) const { return doc_.contains(key); }

  void allow_only(std::initializer_list<std::string_view> keys) const {
    for (const auto& [k, _] : doc_.items()) {
      bool known = false;
      for (auto allowed : keys) known = known || k == allowed;
      if (!known) throw ValidationError(at(k) + ": unknown key");
    }
  }

  JsonReader child(const char* key) const {
    if (!has(key)) throw ValidationError(at(key) + ": missing");
    return JsonReader(doc_[key], at(key));
  }

  double number(const char* key, double fallback) const {
    if (!has(key)) return fallback;
    const auto& v = doc_[key];
    if (!v.is_number()) throw ValidationError(at(key) + ": must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ValidationError(at(key) + ": must be finite");
    return x;
  }

  double positive(const char* key, double fallback) const {
    const double x = number(key, fallback);
    if (!(x > 0.0)) throw ValidationError(at(key) + ": must be positive (got " + std::to_string(x) + ")");
    return x;
  }

  double nonnegative(const char* key, double fallback) const {
    const double x = number(key, fallback);
    if (x < 0.0) throw ValidationError(at(key) + ": must be nonnegative (got " + std::to_string(x) + ")");
    return x;
  }

  std::size_t count(const char* key, std::size_t fallback) const {
    if (!has(key)) return fallback;
    const auto& v = doc_[key];
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw ValidationError(at(key) + ": must be a nonnegative integer");
    }
    return v.get<std::size_t>();
  }

  bool flag(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!doc_[key].is_boolean()) throw ValidationError(at(key) + ": must be true or false");
    return doc_[key].get<bool>();
  }

  std::string text(const char* key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    if (!doc_[key].is_string()) throw ValidationError(at(key) + ": must be a string");
    return doc_[key].get<std::string>();
  }

  const nlohmann::json& raw(const char* key) const { return doc_[key]; }

 private:
  const nlohmann::json& doc_;
  std::string path_;
};

inline QuenchParams read_quench(const JsonReader& r, double T_bath, std::size_t n_elements) {
  r.allow_only({"enabled", "T_c0", "B_c", "J_c", "dT_q", "trigger"});
  QuenchParams q;
  q.enabled = r.flag("enabled", q.enabled);
  q.T_c0 = r.positive("T_c0", q.T_c0);
  q.B_c = r.positive("B_c", q.B_c);
  q.J_c = r.positive("J_c", q.J_c);
  q.dT_q = r.positive("dT_q", q.dT_q);
  if (!(q.T_c0 > T_bath)) throw ValidationError(r.at("T_c0") + ": must exceed T_bath");
  if (r.has("trigger") && !r.raw("trigger").is_null()) {
    const JsonReader t = r.child("trigger");
    t.allow_only({"time", "first_element", "last_element"});
    QuenchTrigger trig;
    trig.time = t.number("time", 0.0);
    trig.first_element = t.count("first_element", 0);
    trig.last_element = t.count("last_element", n_elements);
    if (trig.first_element >= trig.last_element || trig.last_element > n_elements) {
      throw ValidationError(t.at("last_element") + ": element range [" +
                            std::to_string(trig.first_element) + ", " +
                            std::to_string(trig.last_element) + ") is empty or beyond n_elements = " +
                            std::to_string(n_elements));
    }
    q.trigger = trig;
  }
  return q;
}

inline MagnetSpec read_magnet(const JsonReader& r) {
  r.allow_only({"id", "geometry", "materials", "T_bath", "T_ref", "dt_magnet", "feed_eddy_losses",
                "quench"});
  MagnetSpec m;
  if (!r.has("id")) throw ValidationError(r.at("id") + ": missing");
  m.id = r.text("id", "");
  if (m.id.empty()) throw ValidationError(r.at("id") + ": must not be empty");

  const JsonReader g = r.child("geometry");
  g.allow_only({"length", "n_elements", "coil_first", "coil_last", "depth", "turns", "coil_height"});
  m.length = g.positive("length", m.length);
  m.n_elements = g.count("n_elements", m.n_elements);
  if (m.n_elements < 2) throw ValidationError(g.at("n_elements") + ": must be >= 2");
  m.coil_first = g.count("coil_first", m.coil_first);
  m.coil_last = g.count("coil_last", m.coil_last);
  if (m.coil_first >= m.coil_last || m.coil_last > m.n_elements) {
    throw ValidationError(g.at("coil_last") + ": coil range [" + std::to_string(m.coil_first) + ", " +
                          std::to_string(m.coil_last) + ") is empty or beyond n_elements");
  }
  m.depth = g.positive("depth", m.depth);
  m.turns = g.positive("turns", m.turns);
  m.coil_height = g.positive("coil_height", m.coil_height);

  const JsonReader mat = r.child("materials");
  mat.allow_only({"sigma_eddy", "sigma_eddy_outside", "sigma_n", "nu", "rho_cp", "k", "youngs",
                  "expansion", "heat_source"});
  m.sigma_eddy = mat.nonnegative("sigma_eddy", m.sigma_eddy);
  m.sigma_eddy_outside = mat.nonnegative("sigma_eddy_outside", m.sigma_eddy_outside);
  m.sigma_n = mat.positive("sigma_n", m.sigma_n);
  m.nu = mat.positive("nu", m.nu);
  m.rho_cp = mat.positive("rho_cp", m.rho_cp);
  m.k = mat.positive("k", m.k);
  m.youngs = mat.positive("youngs", m.youngs);
  m.expansion = mat.nonnegative("expansion", m.expansion);
  m.heat_source = mat.number("heat_source", m.heat_source);

  m.T_bath = r.positive("T_bath", m.T_bath);
  m.T_ref = r.positive("T_ref", m.T_ref);
  m.dt_magnet = r.positive("dt_magnet", m.dt_magnet);
  m.feed_eddy_losses = r.flag("feed_eddy_losses", m.feed_eddy_losses);
  if (r.has("quench")) m.quench = read_quench(r.child("quench"), m.T_bath, m.n_elements);
  return m;
}

inline WrConfig read_solver(const JsonReader& r) {
  r.allow_only({"mode", "tol", "k_max", "windows", "exchange_dt", "parallel", "elastic_at"});
  WrConfig c;
  const std::string mode = r.text("mode", "plain");
  if (mode == "plain") c.mode = WrMode::Plain;
  else if (mode == "accelerated") c.mode = WrMode::Accelerated;
  else throw ValidationError(r.at("mode") + ": expected 'plain' or 'accelerated', got '" + mode + "'");
  c.tol = r.positive("tol", c.tol);
  c.k_max = r.count("k_max", c.k_max);
  if (c.k_max < 1) throw ValidationError(r.at("k_max") + ": must be >= 1");
  c.windows = r.count("windows", c.windows);
  if (c.windows < 1) throw ValidationError(r.at("windows") + ": must be >= 1");
  if (r.has("exchange_dt") && !r.raw("exchange_dt").is_null()) c.exchange_dt = r.positive("exchange_dt", 0.0);
  c.parallel = r.flag("parallel", c.parallel);
  const std::string at = r.text("elastic_at", "end");
  if (at == "end") c.elastic_at = ElasticSnapshot::End;
  else if (at == "peak_current") c.elastic_at = ElasticSnapshot::PeakCurrent;
  else throw ValidationError(r.at("elastic_at") + ": expected 'end' or 'peak_current', got '" + at + "'");
  return c;
}

inline nlohmann::json read_json_file(const std::filesystem::path& path, const std::string& what) {
  std::ifstream in(path);
  if (!in) throw ValidationError(what + ": cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(what + " '" + path.string() + "': " + e.what());
  }
}

}  // namespace detail

/// Parses and validates a scenario document. A netlist given as a string is
/// a path resolved against `base_dir`.
inline Scenario parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir = {}) {
  const detail::JsonReader r(doc, "");
  r.allow_only({"name", "interval", "circuit_dt", "output_dir", "netlist", "solver", "magnets"});
  Scenario sc;
  sc.name = r.text("name", "");
  if (r.has("interval")) {
    const detail::JsonReader iv = r.child("interval");
    iv.allow_only({"t0", "t_end"});
    sc.t0 = iv.number("t0", sc.t0);
    sc.t_end = iv.number("t_end", sc.t_end);
    if (!(sc.t_end > sc.t0)) {
      throw ValidationError("interval.t_end: must exceed interval.t0 (t0 = " + std::to_string(sc.t0) +
                            ", t_end = " + std::to_string(sc.t_end) + ")");
    }
  }
  sc.circuit_dt = r.positive("circuit_dt", sc.circuit_dt);
  sc.output_dir = r.text("output_dir", sc.output_dir);
  if (r.has("solver")) sc.solver = detail::read_solver(r.child("solver"));

  if (!r.has("magnets") || !doc["magnets"].is_array()) {
    throw ValidationError("magnets: missing or not a list");
  }
  std::vector<MagnetSpec> specs;
  for (std::size_t m = 0; m < doc["magnets"].size(); ++m) {
    specs.push_back(detail::read_magnet(
        detail::JsonReader(doc["magnets"][m], "magnets[" + std::to_string(m) + "]")));
  }
  std::vector<std::string> ids;
  for (const auto& s : specs) {
    if (std::find(ids.begin(), ids.end(), s.id) != ids.end()) {
      throw ValidationError("magnets: duplicate id '" + s.id + "'");
    }
    ids.push_back(s.id);
  }

  if (!r.has("netlist")) throw ValidationError("netlist: missing");
  nlohmann::json net_doc = doc["netlist"];
  if (net_doc.is_string()) {
    std::filesystem::path p = net_doc.get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    net_doc = detail::read_json_file(p, "netlist");
  }
  try {
    sc.netlist = parse_netlist(net_doc, ids);
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    throw ValidationError(what.starts_with("netlist") ? what : "netlist: " + what);
  }

  // one MagnetSpec per netlist magnet branch, in branch order
  const auto used = sc.netlist.magnet_ids();
  for (const auto& id : ids) {
    if (std::find(used.begin(), used.end(), id) == used.end()) {
      throw ValidationError("magnets: id '" + id +
                            "' has no magnet element in the netlist (netlist magnets: " +
                            [&] {
                              std::string s;
                              for (const auto& u : used) s += (s.empty() ? "" : ", ") + u;
                              return s.empty() ? std::string("none") : s;
                            }() +
                            ")");
    }
  }
  for (const auto& id : used) {
    for (const auto& s : specs) {
      if (s.id == id) sc.magnets.push_back(s);
    }
  }
  for (std::size_t m = 0; m < sc.magnets.size(); ++m) {
    try {
      build_magnet(sc.magnets[m]);
    } catch (const ValidationError& e) {
      throw ValidationError("magnets[" + std::to_string(m) + "]: " + e.what());
    }
  }
  sc.validate();
  return sc;
}

inline Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir = {}) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("scenario: ") + e.what());
  }
  return parse_scenario(doc, base_dir);
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  return parse_scenario(detail::read_json_file(path, "scenario"), path.parent_path());
}

/// Canonical form: every field explicit, netlist embedded.
inline nlohmann::json to_json(const Scenario& sc) {
  nlohmann::json doc;
  doc["name"] = sc.name;
  doc["interval"] = {{"t0", sc.t0}, {"t_end", sc.t_end}};
  doc["circuit_dt"] = sc.circuit_dt;
  doc["output_dir"] = sc.output_dir;
  doc["netlist"] = to_json(sc.netlist);
  nlohmann::json solver{{"mode", to_string(sc.solver.mode)},
                        {"tol", sc.solver.tol},
                        {"k_max", sc.solver.k_max},
                        {"windows", sc.solver.windows},
                        {"parallel", sc.solver.parallel},
                        {"elastic_at", to_string(sc.solver.elastic_at)}};
  solver["exchange_dt"] = sc.solver.exchange_dt ? nlohmann::json(*sc.solver.exchange_dt) : nlohmann::json();
  doc["solver"] = std::move(solver);
  doc["magnets"] = nlohmann::json::array();
  for (const auto& m : sc.magnets) {
    nlohmann::json quench{{"enabled", m.quench.enabled},
                          {"T_c0", m.quench.T_c0},
                          {"B_c", m.quench.B_c},
                          {"J_c", m.quench.J_c},
                          {"dT_q", m.quench.dT_q}};
    if (m.quench.trigger) {
      quench["trigger"] = {{"time", m.quench.trigger->time},
                           {"first_element", m.quench.trigger->first_element},
                           {"last_element", m.quench.trigger->last_element}};
    } else {
      quench["trigger"] = nullptr;
    }
    doc["magnets"].push_back({
        {"id", m.id},
        {"geometry",
         {{"length", m.length},
          {"n_elements", m.n_elements},
          {"coil_first", m.coil_first},
          {"coil_last", m.coil_last},
          {"depth", m.depth},
          {"turns", m.turns},
          {"coil_height", m.coil_height}}},
        {"materials",
         {{"sigma_eddy", m.sigma_eddy},
          {"sigma_eddy_outside", m.sigma_eddy_outside},
          {"sigma_n", m.sigma_n},
          {"nu", m.nu},
          {"rho_cp", m.rho_cp},
          {"k", m.k},
          {"youngs", m.youngs},
          {"expansion", m.expansion},
          {"heat_source", m.heat_source}}},
        {"T_bath", m.T_bath},
        {"T_ref", m.T_ref},
        {"dt_magnet", m.dt_magnet},
        {"feed_eddy_losses", m.feed_eddy_losses},
        {"quench", std::move(quench)},
    });
  }
  return doc;
}

}  // namespace quenchwr
