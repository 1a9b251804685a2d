#pragma once

// Modified nodal analysis of a lumped network with magnet branches,
// integrated with implicit Euler. Unknowns are ordered
//     x = [phi (non-ground nodes), i_L, i_V, i_m]
// and the rows are KCL per node, one row per inductor, voltage source and
// magnet. Every element current flows from its + terminal to its - terminal;
// the incidence entry is +1 at the + node.

#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "quenchwr/errors.hpp"
#include "quenchwr/waveform.hpp"

namespace quenchwr {

enum class ElementKind { Resistor, Capacitor, Inductor, VoltageSource, CurrentSource, Magnet };

inline std::string_view to_string(ElementKind kind) {
  switch (kind) {
    case ElementKind::Resistor: return "resistor";
    case ElementKind::Capacitor: return "capacitor";
    case ElementKind::Inductor: return "inductor";
    case ElementKind::VoltageSource: return "vsource";
    case ElementKind::CurrentSource: return "isource";
    case ElementKind::Magnet: return "magnet";
  }
  return "?";
}

/// A source signal: a constant or a table held at its end values outside the
/// table span.
class Signal {
 public:
  Signal() = default;
  explicit Signal(double constant) : value_(constant) {}
  explicit Signal(Waveform table) : value_(std::move(table)) {}

  double at(double t) const {
    if (const auto* c = std::get_if<double>(&value_)) return *c;
    const auto& w = std::get<Waveform>(value_);
    if (t <= w.t0()) return w[0];
    if (t >= w.t_end()) return w[w.size() - 1];
    return sample(w, t);
  }

  bool is_constant() const { return std::holds_alternative<double>(value_); }
  double constant() const { return std::get<double>(value_); }
  const Waveform& table() const { return std::get<Waveform>(value_); }

  bool operator==(const Signal&) const = default;

 private:
  std::variant<double, Waveform> value_{0.0};
};

inline constexpr std::size_t kGround = static_cast<std::size_t>(-1);
inline constexpr std::string_view kGroundName = "gnd";

struct Element {
  ElementKind kind = ElementKind::Resistor;
  std::string name;
  std::size_t node_plus = kGround;
  std::size_t node_minus = kGround;
  double value = 0.0;   ///< R, C, L, or the constant of a source without `source`
  std::string source;   ///< named source signal (sources only)
  std::string magnet;   ///< magnet id (magnet branches only)

  bool operator==(const Element&) const = default;
};

struct Netlist {
  std::vector<std::string> nodes;  ///< non-ground nodes in declaration order
  std::vector<Element> elements;
  std::map<std::string, Signal> sources;

  std::size_t num_nodes() const { return nodes.size(); }

  std::vector<std::size_t> indices(ElementKind kind) const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < elements.size(); ++k) {
      if (elements[k].kind == kind) out.push_back(k);
    }
    return out;
  }

  std::size_t count(ElementKind kind) const { return indices(kind).size(); }

  double source_value(const Element& e, double t) const {
    if (e.source.empty()) return e.value;
    return sources.at(e.source).at(t);
  }

  std::string node_name(std::size_t node) const {
    return node == kGround ? std::string(kGroundName) : nodes[node];
  }

  /// Magnet ids of the magnet branches in declaration order.
  std::vector<std::string> magnet_ids() const {
    std::vector<std::string> ids;
    for (const auto& e : elements) {
      if (e.kind == ElementKind::Magnet) ids.push_back(e.magnet);
    }
    return ids;
  }

  bool operator==(const Netlist&) const = default;
};

namespace detail {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent_[a] = b;
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
};

// Ground is slot n in the disjoint-set numbering.
inline std::size_t slot(std::size_t node, std::size_t n) { return node == kGround ? n : node; }

}  // namespace detail

/// Structural checks: parameters, references, ground connectivity, no loop
/// of voltage sources, no cutset of current sources.
inline void validate_netlist(const Netlist& net, std::span<const std::string> magnet_ids = {}) {
  const std::size_t n = net.num_nodes();
  std::map<std::string, std::size_t> names;
  std::map<std::string, std::string> magnet_users;
  for (std::size_t k = 0; k < net.elements.size(); ++k) {
    const Element& e = net.elements[k];
    const std::string ctx = "element #" + std::to_string(k) + " '" + e.name + "' (" +
                            std::string(to_string(e.kind)) + ")";
    if (e.name.empty()) throw ValidationError(ctx + ": missing name");
    if (!names.emplace(e.name, k).second) throw ValidationError(ctx + ": duplicate element name");
    for (std::size_t node : {e.node_plus, e.node_minus}) {
      if (node != kGround && node >= n) throw ValidationError(ctx + ": unknown node index");
    }
    if (e.node_plus == e.node_minus) {
      throw ValidationError(ctx + ": both terminals on node '" + net.node_name(e.node_plus) + "'");
    }
    switch (e.kind) {
      case ElementKind::Resistor:
      case ElementKind::Capacitor:
      case ElementKind::Inductor:
        if (!(e.value > 0.0) || !std::isfinite(e.value)) {
          throw ValidationError(ctx + ": parameter must be positive (got " + std::to_string(e.value) + ")");
        }
        break;
      case ElementKind::VoltageSource:
      case ElementKind::CurrentSource:
        if (!e.source.empty() && !net.sources.contains(e.source)) {
          throw ValidationError(ctx + ": unknown source '" + e.source + "'");
        }
        if (e.source.empty() && !std::isfinite(e.value)) {
          throw ValidationError(ctx + ": non-finite source value");
        }
        break;
      case ElementKind::Magnet: {
        if (e.magnet.empty()) throw ValidationError(ctx + ": missing magnet id");
        if (!magnet_ids.empty() &&
            std::find(magnet_ids.begin(), magnet_ids.end(), e.magnet) == magnet_ids.end()) {
          std::string known;
          for (const auto& id : magnet_ids) known += (known.empty() ? "" : ", ") + id;
          throw ValidationError(ctx + ": references undefined magnet id '" + e.magnet +
                                "' (magnets defined: " + known + ")");
        }
        auto [it, fresh] = magnet_users.emplace(e.magnet, e.name);
        if (!fresh) {
          throw ValidationError(ctx + ": magnet id '" + e.magnet + "' already used by element '" +
                                it->second + "'");
        }
        break;
      }
    }
  }

  detail::DisjointSets all(n + 1);
  detail::DisjointSets no_isource(n + 1);
  detail::DisjointSets vsources(n + 1);
  for (const Element& e : net.elements) {
    const std::size_t a = detail::slot(e.node_plus, n);
    const std::size_t b = detail::slot(e.node_minus, n);
    all.unite(a, b);
    if (e.kind != ElementKind::CurrentSource) no_isource.unite(a, b);
    if (e.kind == ElementKind::VoltageSource && !vsources.unite(a, b)) {
      throw ValidationError("element '" + e.name + "' closes a loop of voltage sources");
    }
  }
  for (std::size_t node = 0; node < n; ++node) {
    if (all.find(node) != all.find(n)) {
      throw ValidationError("node '" + net.nodes[node] + "' is dangling (not connected to ground)");
    }
    if (no_isource.find(node) != no_isource.find(n)) {
      throw ValidationError("node '" + net.nodes[node] +
                            "' is separated from ground by a cutset of current sources");
    }
  }
}

/// Netlist document:
///   { "nodes": ["gnd", ...],
///     "elements": [ {"kind", "name", "node_plus", "node_minus",
///                    "value" | "source" | "magnet"}, ... ],
///     "sources": { "<name>": {"constant": v} | {"table": [[t, v], ...]} } }
inline Netlist parse_netlist(const nlohmann::json& doc, std::span<const std::string> magnet_ids = {}) {
  if (!doc.is_object()) throw ValidationError("netlist: document must be an object");
  Netlist net;
  if (!doc.contains("nodes") || !doc["nodes"].is_array()) {
    throw ValidationError("netlist: missing 'nodes' list");
  }
  bool has_ground = false;
  std::map<std::string, std::size_t> node_index;
  for (const auto& item : doc["nodes"]) {
    if (!item.is_string()) throw ValidationError("netlist: node names must be strings");
    const std::string name = item.get<std::string>();
    if (name == kGroundName) {
      has_ground = true;
      continue;
    }
    if (!node_index.emplace(name, net.nodes.size()).second) {
      throw ValidationError("netlist: duplicate node '" + name + "'");
    }
    net.nodes.push_back(name);
  }
  if (!has_ground) throw ValidationError("netlist: 'nodes' must include the ground node 'gnd'");

  if (doc.contains("sources")) {
    if (!doc["sources"].is_object()) throw ValidationError("netlist: 'sources' must be an object");
    for (const auto& [name, spec] : doc["sources"].items()) {
      const std::string ctx = "netlist source '" + name + "'";
      if (spec.contains("constant")) {
        if (!spec["constant"].is_number()) throw ValidationError(ctx + ": 'constant' must be a number");
        net.sources.emplace(name, Signal(spec["constant"].get<double>()));
      } else if (spec.contains("table")) {
        std::vector<double> t;
        std::vector<double> v;
        for (const auto& row : spec["table"]) {
          if (!row.is_array() || row.size() != 2 || !row[0].is_number() || !row[1].is_number()) {
            throw ValidationError(ctx + ": table rows must be [t, value] pairs");
          }
          t.push_back(row[0].get<double>());
          v.push_back(row[1].get<double>());
        }
        try {
          net.sources.emplace(name, Signal(Waveform(TimeGrid(std::move(t)), std::move(v))));
        } catch (const ValidationError& e) {
          throw ValidationError(ctx + ": " + e.what());
        }
      } else {
        throw ValidationError(ctx + ": expected 'constant' or 'table'");
      }
    }
  }

  if (!doc.contains("elements") || !doc["elements"].is_array()) {
    throw ValidationError("netlist: missing 'elements' list");
  }
  std::size_t k = 0;
  for (const auto& item : doc["elements"]) {
    const std::string ctx = "netlist element #" + std::to_string(k++);
    if (!item.is_object()) throw ValidationError(ctx + ": must be an object");
    Element e;
    e.name = item.value("name", "");
    const std::string ectx = ctx + " '" + e.name + "'";
    const std::string kind = item.value("kind", "");
    if (kind == "resistor") e.kind = ElementKind::Resistor;
    else if (kind == "capacitor") e.kind = ElementKind::Capacitor;
    else if (kind == "inductor") e.kind = ElementKind::Inductor;
    else if (kind == "vsource") e.kind = ElementKind::VoltageSource;
    else if (kind == "isource") e.kind = ElementKind::CurrentSource;
    else if (kind == "magnet") e.kind = ElementKind::Magnet;
    else throw ValidationError(ectx + ": unknown element kind '" + kind + "'");

    auto node_of = [&](const char* key) {
      if (!item.contains(key) || !item[key].is_string()) {
        throw ValidationError(ectx + ": missing '" + key + "'");
      }
      const std::string name = item[key].get<std::string>();
      if (name == kGroundName) return kGround;
      auto it = node_index.find(name);
      if (it == node_index.end()) {
        throw ValidationError(ectx + ": dangling node '" + name + "' (not declared in 'nodes')");
      }
      return it->second;
    };
    e.node_plus = node_of("node_plus");
    e.node_minus = node_of("node_minus");

    if (e.kind == ElementKind::Magnet) {
      if (!item.contains("magnet") || !item["magnet"].is_string()) {
        throw ValidationError(ectx + ": missing 'magnet' id");
      }
      e.magnet = item["magnet"].get<std::string>();
    } else if (e.kind == ElementKind::VoltageSource || e.kind == ElementKind::CurrentSource) {
      if (item.contains("source")) {
        e.source = item["source"].get<std::string>();
      } else if (item.contains("value") && item["value"].is_number()) {
        e.value = item["value"].get<double>();
      } else {
        throw ValidationError(ectx + ": source needs 'value' or 'source'");
      }
    } else {
      if (!item.contains("value") || !item["value"].is_number()) {
        throw ValidationError(ectx + ": missing numeric 'value'");
      }
      e.value = item["value"].get<double>();
    }
    net.elements.push_back(std::move(e));
  }
  validate_netlist(net, magnet_ids);
  return net;
}

inline Netlist parse_netlist(std::string_view text, std::span<const std::string> magnet_ids = {}) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("netlist: ") + e.what());
  }
  return parse_netlist(doc, magnet_ids);
}

inline nlohmann::json to_json(const Netlist& net) {
  nlohmann::json doc;
  doc["nodes"] = nlohmann::json::array({std::string(kGroundName)});
  for (const auto& n : net.nodes) doc["nodes"].push_back(n);
  doc["elements"] = nlohmann::json::array();
  for (const auto& e : net.elements) {
    nlohmann::json j{{"kind", to_string(e.kind)},
                     {"name", e.name},
                     {"node_plus", net.node_name(e.node_plus)},
                     {"node_minus", net.node_name(e.node_minus)}};
    if (e.kind == ElementKind::Magnet) {
      j["magnet"] = e.magnet;
    } else if (!e.source.empty()) {
      j["source"] = e.source;
    } else {
      j["value"] = e.value;
    }
    doc["elements"].push_back(std::move(j));
  }
  doc["sources"] = nlohmann::json::object();
  for (const auto& [name, s] : net.sources) {
    if (s.is_constant()) {
      doc["sources"][name] = {{"constant", s.constant()}};
    } else {
      nlohmann::json rows = nlohmann::json::array();
      const Waveform& w = s.table();
      for (std::size_t k = 0; k < w.size(); ++k) rows.push_back({w.grid()[k], w[k]});
      doc["sources"][name] = {{"table", std::move(rows)}};
    }
  }
  return doc;
}

/// Reduced incidence matrices (ground row removed), one column per element of
/// the kind in declaration order.
struct IncidenceMatrices {
  Eigen::MatrixXd capacitor;
  Eigen::MatrixXd resistor;
  Eigen::MatrixXd inductor;
  Eigen::MatrixXd vsource;
  Eigen::MatrixXd isource;
  Eigen::MatrixXd magnet;
};

inline IncidenceMatrices build_incidence(const Netlist& net) {
  const auto n = static_cast<Eigen::Index>(net.num_nodes());
  auto build = [&](ElementKind kind) {
    const auto idx = net.indices(kind);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) {
      const Element& e = net.elements[idx[c]];
      const auto col = static_cast<Eigen::Index>(c);
      if (e.node_plus != kGround) a(static_cast<Eigen::Index>(e.node_plus), col) = 1.0;
      if (e.node_minus != kGround) a(static_cast<Eigen::Index>(e.node_minus), col) = -1.0;
    }
    return a;
  };
  return {build(ElementKind::Capacitor), build(ElementKind::Resistor),
          build(ElementKind::Inductor),  build(ElementKind::VoltageSource),
          build(ElementKind::CurrentSource), build(ElementKind::Magnet)};
}

struct CircuitState {
  double time = 0.0;
  Eigen::VectorXd phi;  ///< node potentials, V
  Eigen::VectorXd i_L;  ///< inductor currents, A
  Eigen::VectorXd i_V;  ///< voltage-source currents, A
  Eigen::VectorXd i_m;  ///< magnet currents, A

  static CircuitState zero(const Netlist& net, double t0) {
    return {t0, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.num_nodes())),
            Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.count(ElementKind::Inductor))),
            Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.count(ElementKind::VoltageSource))),
            Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.count(ElementKind::Magnet)))};
  }

  bool operator==(const CircuitState& o) const {
    return time == o.time && phi == o.phi && i_L == o.i_L && i_V == o.i_V && i_m == o.i_m;
  }
};

/// Magnet branch constraint at the new time level:
///     A_m^T phi - impedance * i_m = voltage.
struct MagnetBranchLaw {
  double impedance = 0.0;
  double voltage = 0.0;
};

/// Magnet voltages are prescribed waveforms.
struct KnownVoltage {
  std::vector<Waveform> voltage;
};

/// Magnets enter the circuit through the surrogate L d/dt + R(t) plus the
/// defect voltage dv(t) from the previous iterate.
struct ReducedModel {
  std::vector<double> inductance;
  std::vector<Waveform> resistance;
  std::vector<Waveform> defect;
};

using MagnetInterface = std::variant<KnownVoltage, ReducedModel>;

inline std::vector<MagnetBranchLaw> branch_laws(const MagnetInterface& iface,
                                                const CircuitState& old, double t_new, double dt) {
  std::vector<MagnetBranchLaw> laws(static_cast<std::size_t>(old.i_m.size()));
  if (const auto* kv = std::get_if<KnownVoltage>(&iface)) {
    if (kv->voltage.size() != laws.size()) {
      throw ValidationError("KnownVoltage: expected " + std::to_string(laws.size()) + " waveforms");
    }
    for (std::size_t m = 0; m < laws.size(); ++m) laws[m] = {0.0, sample(kv->voltage[m], t_new)};
  } else {
    const auto& rm = std::get<ReducedModel>(iface);
    if (rm.inductance.size() != laws.size() || rm.resistance.size() != laws.size() ||
        rm.defect.size() != laws.size()) {
      throw ValidationError("ReducedModel: expected data for " + std::to_string(laws.size()) +
                            " magnets");
    }
    for (std::size_t m = 0; m < laws.size(); ++m) {
      const double l_over_dt = rm.inductance[m] / dt;
      laws[m] = {l_over_dt + sample(rm.resistance[m], t_new),
                 sample(rm.defect[m], t_new) - l_over_dt * old.i_m(static_cast<Eigen::Index>(m))};
    }
  }
  return laws;
}

struct MnaSystem {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd rhs;
};

class MnaModel {
 public:
  explicit MnaModel(Netlist net) : net_(std::move(net)), inc_(build_incidence(net_)) {
    const auto values = [&](ElementKind kind, bool invert) {
      const auto idx = net_.indices(kind);
      Eigen::VectorXd v(static_cast<Eigen::Index>(idx.size()));
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const double x = net_.elements[idx[k]].value;
        v(static_cast<Eigen::Index>(k)) = invert ? 1.0 / x : x;
      }
      return v;
    };
    capacitance_ = values(ElementKind::Capacitor, false);
    conductance_ = values(ElementKind::Resistor, true);
    inductance_ = values(ElementKind::Inductor, false);
    cap_matrix_ = inc_.capacitor * capacitance_.asDiagonal() * inc_.capacitor.transpose();
    res_matrix_ = inc_.resistor * conductance_.asDiagonal() * inc_.resistor.transpose();
    vsrc_ = net_.indices(ElementKind::VoltageSource);
    isrc_ = net_.indices(ElementKind::CurrentSource);
  }

  const Netlist& netlist() const { return net_; }
  const IncidenceMatrices& incidence() const { return inc_; }

  Eigen::Index num_nodes() const { return inc_.resistor.rows(); }
  Eigen::Index num_inductors() const { return inductance_.size(); }
  Eigen::Index num_vsources() const { return inc_.vsource.cols(); }
  Eigen::Index num_magnets() const { return inc_.magnet.cols(); }
  Eigen::Index size() const { return num_nodes() + num_inductors() + num_vsources() + num_magnets(); }

  Eigen::VectorXd source_currents(double t) const {
    Eigen::VectorXd is(static_cast<Eigen::Index>(isrc_.size()));
    for (std::size_t k = 0; k < isrc_.size(); ++k) {
      is(static_cast<Eigen::Index>(k)) = net_.source_value(net_.elements[isrc_[k]], t);
    }
    return is;
  }

  Eigen::VectorXd source_voltages(double t) const {
    Eigen::VectorXd vs(static_cast<Eigen::Index>(vsrc_.size()));
    for (std::size_t k = 0; k < vsrc_.size(); ++k) {
      vs(static_cast<Eigen::Index>(k)) = net_.source_value(net_.elements[vsrc_[k]], t);
    }
    return vs;
  }

  /// Implicit-Euler system for the step old.time -> old.time + dt.
  MnaSystem assemble(const CircuitState& old, std::span<const MagnetBranchLaw> laws, double dt) const {
    if (!(dt > 0.0)) throw ValidationError("step_circuit: dt must be positive");
    const Eigen::Index n = num_nodes();
    const Eigen::Index nl = num_inductors();
    const Eigen::Index nv = num_vsources();
    const Eigen::Index nm = num_magnets();
    const Eigen::Index ol = n;
    const Eigen::Index ov = n + nl;
    const Eigen::Index om = n + nl + nv;
    const double t_new = old.time + dt;

    MnaSystem sys{Eigen::MatrixXd::Zero(size(), size()), Eigen::VectorXd::Zero(size())};
    Eigen::MatrixXd& a = sys.matrix;
    Eigen::VectorXd& b = sys.rhs;

    a.topLeftCorner(n, n) = cap_matrix_ / dt + res_matrix_;
    a.block(0, ol, n, nl) = inc_.inductor;
    a.block(0, ov, n, nv) = inc_.vsource;
    a.block(0, om, n, nm) = inc_.magnet;
    b.head(n) = cap_matrix_ * old.phi / dt;
    if (!isrc_.empty()) b.head(n) -= inc_.isource * source_currents(t_new);

    // A_L^T phi - L/dt i_L = -L/dt i_L,old
    a.block(ol, 0, nl, n) = inc_.inductor.transpose();
    for (Eigen::Index k = 0; k < nl; ++k) {
      a(ol + k, ol + k) = -inductance_(k) / dt;
      b(ol + k) = -inductance_(k) / dt * old.i_L(k);
    }

    a.block(ov, 0, nv, n) = inc_.vsource.transpose();
    b.segment(ov, nv) = source_voltages(t_new);

    if (static_cast<Eigen::Index>(laws.size()) != nm) {
      throw ValidationError("step_circuit: expected " + std::to_string(nm) + " magnet laws");
    }
    a.block(om, 0, nm, n) = inc_.magnet.transpose();
    for (Eigen::Index k = 0; k < nm; ++k) {
      a(om + k, om + k) = -laws[static_cast<std::size_t>(k)].impedance;
      b(om + k) = laws[static_cast<std::size_t>(k)].voltage;
    }
    return sys;
  }

  CircuitState step(const CircuitState& old, std::span<const MagnetBranchLaw> laws, double dt) const {
    const MnaSystem sys = assemble(old, laws, dt);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(sys.matrix);
    if (!lu.isInvertible()) {
      std::ostringstream msg;
      msg << "step_circuit: singular MNA matrix at t = " << old.time + dt << " (rank " << lu.rank()
          << " of " << sys.matrix.rows()
          << "); suspect a loop of voltage sources and known-voltage magnets, or a node reached "
             "only through current sources";
      throw SolverError(msg.str());
    }
    const Eigen::VectorXd x = lu.solve(sys.rhs);
    if (!x.allFinite()) throw SolverError("step_circuit: non-finite solution at t = " +
                                          std::to_string(old.time + dt));
    const Eigen::Index n = num_nodes();
    const Eigen::Index nl = num_inductors();
    const Eigen::Index nv = num_vsources();
    return {old.time + dt, x.head(n), x.segment(n, nl), x.segment(n + nl, nv),
            x.segment(n + nl + nv, num_magnets())};
  }

  CircuitState step(const CircuitState& old, const MagnetInterface& iface, double dt) const {
    const auto laws = branch_laws(iface, old, old.time + dt, dt);
    return step(old, laws, dt);
  }

  /// KCL residual per node of the step old -> cur.
  Eigen::VectorXd kcl_residual(const CircuitState& old, const CircuitState& cur) const {
    const double dt = cur.time - old.time;
    Eigen::VectorXd r = cap_matrix_ * (cur.phi - old.phi) / dt + res_matrix_ * cur.phi +
                        inc_.inductor * cur.i_L + inc_.vsource * cur.i_V + inc_.magnet * cur.i_m;
    if (!isrc_.empty()) r += inc_.isource * source_currents(cur.time);
    return r;
  }

  /// Scale of the terms entering kcl_residual, for relative checks.
  double kcl_scale(const CircuitState& cur) const {
    double s = (res_matrix_ * cur.phi).cwiseAbs().maxCoeff();
    s = std::max(s, cur.i_L.size() ? cur.i_L.cwiseAbs().maxCoeff() : 0.0);
    s = std::max(s, cur.i_V.size() ? cur.i_V.cwiseAbs().maxCoeff() : 0.0);
    s = std::max(s, cur.i_m.size() ? cur.i_m.cwiseAbs().maxCoeff() : 0.0);
    if (!isrc_.empty()) s = std::max(s, source_currents(cur.time).cwiseAbs().maxCoeff());
    return std::max(s, 1.0);
  }

  /// 1/2 phi^T (A_C C A_C^T) phi + 1/2 i_L^T L i_L
  double stored_energy(const CircuitState& s) const {
    return 0.5 * s.phi.dot(cap_matrix_ * s.phi) + 0.5 * s.i_L.dot(inductance_.asDiagonal() * s.i_L);
  }

  /// Checks the algebraic constraints at t0: voltage-source rows and KCL at
  /// nodes without a capacitor. Magnet rows are not checked: the first step
  /// only reads magnet data at the new time level.
  void check_initial_state(const CircuitState& s) const {
    const Eigen::Index n = num_nodes();
    if (s.phi.size() != n || s.i_L.size() != num_inductors() || s.i_V.size() != num_vsources() ||
        s.i_m.size() != num_magnets()) {
      throw ValidationError("initial circuit state has wrong dimensions");
    }
    std::ostringstream bad;
    const Eigen::VectorXd vres = inc_.vsource.transpose() * s.phi - source_voltages(s.time);
    const Eigen::VectorXd vs = source_voltages(s.time);
    const double vscale = std::max(1.0, (vs.size() ? vs.cwiseAbs().maxCoeff() : 0.0) +
                                            (s.phi.size() ? s.phi.cwiseAbs().maxCoeff() : 0.0));
    for (Eigen::Index k = 0; k < vres.size(); ++k) {
      if (std::abs(vres(k)) > 1e-8 * vscale) {
        bad << " vsource '" << net_.elements[vsrc_[static_cast<std::size_t>(k)]].name
            << "' residual " << vres(k) << ";";
      }
    }
    Eigen::VectorXd kcl = res_matrix_ * s.phi + inc_.inductor * s.i_L + inc_.vsource * s.i_V +
                          inc_.magnet * s.i_m;
    if (!isrc_.empty()) kcl += inc_.isource * source_currents(s.time);
    const double kscale = kcl_scale(s);
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool has_cap = inc_.capacitor.cols() > 0 && inc_.capacitor.row(i).cwiseAbs().sum() > 0.0;
      if (!has_cap && std::abs(kcl(i)) > 1e-8 * kscale) {
        bad << " KCL at node '" << net_.nodes[static_cast<std::size_t>(i)] << "' residual "
            << kcl(i) << ";";
      }
    }
    if (!bad.str().empty()) {
      throw ValidationError("inconsistent initial condition at t0 = " + std::to_string(s.time) +
                            ":" + bad.str());
    }
  }

 private:
  Netlist net_;
  IncidenceMatrices inc_;
  Eigen::VectorXd capacitance_;
  Eigen::VectorXd conductance_;
  Eigen::VectorXd inductance_;
  Eigen::MatrixXd cap_matrix_;
  Eigen::MatrixXd res_matrix_;
  std::vector<std::size_t> vsrc_;
  std::vector<std::size_t> isrc_;
};

inline CircuitState step_circuit(const Netlist& net, const CircuitState& state,
                                 const MagnetInterface& iface, double dt) {
  return MnaModel(net).step(state, iface, dt);
}

struct TransientSolution {
  std::vector<Waveform> potentials;        ///< per node
  std::vector<Waveform> inductor_currents;
  std::vector<Waveform> vsource_currents;
  std::vector<Waveform> magnet_currents;   ///< per magnet branch
  CircuitState final_state;
  double max_kcl_residual = 0.0;           ///< relative to kcl_scale
};

inline TransientSolution solve_transient(const MnaModel& model, const MagnetInterface& iface,
                                         const TimeGrid& grid, const CircuitState& init) {
  CircuitState state = init;
  state.time = grid.t0();
  model.check_initial_state(state);

  const auto n = static_cast<std::size_t>(model.num_nodes());
  const auto nl = static_cast<std::size_t>(model.num_inductors());
  const auto nv = static_cast<std::size_t>(model.num_vsources());
  const auto nm = static_cast<std::size_t>(model.num_magnets());
  using Series = std::vector<std::vector<double>>;
  Series phi(n, std::vector<double>(grid.size()));
  Series il(nl, std::vector<double>(grid.size()));
  Series iv(nv, std::vector<double>(grid.size()));
  Series im(nm, std::vector<double>(grid.size()));
  auto record = [&](std::size_t k, const CircuitState& s) {
    for (std::size_t i = 0; i < n; ++i) phi[i][k] = s.phi(static_cast<Eigen::Index>(i));
    for (std::size_t i = 0; i < nl; ++i) il[i][k] = s.i_L(static_cast<Eigen::Index>(i));
    for (std::size_t i = 0; i < nv; ++i) iv[i][k] = s.i_V(static_cast<Eigen::Index>(i));
    for (std::size_t i = 0; i < nm; ++i) im[i][k] = s.i_m(static_cast<Eigen::Index>(i));
  };
  record(0, state);
  double worst = 0.0;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    CircuitState next = model.step(state, iface, grid[k] - state.time);
    next.time = grid[k];
    const Eigen::VectorXd r = model.kcl_residual(state, next);
    if (r.size()) worst = std::max(worst, r.cwiseAbs().maxCoeff() / model.kcl_scale(next));
    state = std::move(next);
    record(k, state);
  }
  auto wrap = [&](Series& s) {
    std::vector<Waveform> out;
    out.reserve(s.size());
    for (auto& v : s) out.emplace_back(grid, std::move(v));
    return out;
  };
  return {wrap(phi), wrap(il), wrap(iv), wrap(im), std::move(state), worst};
}

inline TransientSolution solve_transient(const Netlist& net, const MagnetInterface& iface,
                                         const TimeGrid& grid, const CircuitState& init) {
  return solve_transient(MnaModel(net), iface, grid, init);
}

}  // namespace quenchwr
