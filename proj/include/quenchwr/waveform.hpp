#pragma once

// Scalar time series exchanged between subsystems. Every subsystem keeps its
// own time grid; data crosses subsystem boundaries as a Waveform and is read
// back with piecewise-linear interpolation.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "quenchwr/errors.hpp"

namespace quenchwr {

class TimeGrid {
 public:
  explicit TimeGrid(std::vector<double> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.size() < 2) {
      throw ValidationError("TimeGrid: at least two nodes are required");
    }
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
      if (!std::isfinite(nodes_[k])) {
        throw ValidationError("TimeGrid: non-finite node " + std::to_string(k));
      }
      if (k > 0 && !(nodes_[k] > nodes_[k - 1])) {
        throw ValidationError("TimeGrid: nodes must be strictly increasing (node " +
                              std::to_string(k) + ")");
      }
    }
  }

  /// `steps` equal intervals; both end points are exact.
  static TimeGrid uniform(double t0, double t_end, std::size_t steps) {
    if (steps == 0) throw ValidationError("TimeGrid::uniform: steps must be >= 1");
    if (!(t_end > t0)) throw ValidationError("TimeGrid::uniform: t_end must exceed t0");
    std::vector<double> nodes(steps + 1);
    const double span = t_end - t0;
    for (std::size_t k = 0; k <= steps; ++k) {
      nodes[k] = t0 + span * (static_cast<double>(k) / static_cast<double>(steps));
    }
    nodes.front() = t0;
    nodes.back() = t_end;
    return TimeGrid(std::move(nodes));
  }

  /// Steps of size `dt`; the last step is shortened to land on `t_end`.
  /// A span that is an integer multiple of `dt` (up to rounding) gives a
  /// uniform grid.
  static TimeGrid with_step(double t0, double t_end, double dt) {
    if (!(dt > 0.0)) throw ValidationError("TimeGrid::with_step: dt must be positive");
    if (!(t_end > t0)) throw ValidationError("TimeGrid::with_step: t_end must exceed t0");
    const double steps = (t_end - t0) / dt;
    const double nearest = std::round(steps);
    if (nearest >= 1.0 && std::abs(steps - nearest) <= 1e-9 * std::max(1.0, steps)) {
      return uniform(t0, t_end, static_cast<std::size_t>(nearest));
    }
    std::vector<double> nodes;
    nodes.reserve(static_cast<std::size_t>(steps) + 2);
    for (std::size_t k = 0;; ++k) {
      const double t = t0 + static_cast<double>(k) * dt;
      if (t >= t_end - 1e-9 * dt) break;
      nodes.push_back(t);
    }
    nodes.push_back(t_end);
    return TimeGrid(std::move(nodes));
  }

  double t0() const { return nodes_.front(); }
  double t_end() const { return nodes_.back(); }
  std::size_t size() const { return nodes_.size(); }
  double operator[](std::size_t k) const { return nodes_[k]; }
  std::span<const double> nodes() const { return nodes_; }

  /// Index k with nodes[k] <= t <= nodes[k+1]; `t` must already be in range.
  std::size_t interval(double t) const {
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
    auto k = static_cast<std::size_t>(std::distance(nodes_.begin(), it));
    if (k == 0) return 0;
    return std::min(k - 1, nodes_.size() - 2);
  }

  /// Slack applied to range checks, absorbing rounding in window arithmetic.
  double slack() const { return 1e-12 * std::max(1.0, std::abs(t_end()) + (t_end() - t0())); }

  bool covers(double t) const { return t >= t0() - slack() && t <= t_end() + slack(); }

  bool operator==(const TimeGrid&) const = default;

 private:
  std::vector<double> nodes_;
};

class Waveform {
 public:
  Waveform(TimeGrid grid, std::vector<double> values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
      throw ValidationError("Waveform: " + std::to_string(values_.size()) + " values for " +
                            std::to_string(grid_.size()) + " grid nodes");
    }
    for (std::size_t k = 0; k < values_.size(); ++k) {
      if (!std::isfinite(values_[k])) {
        throw ValidationError("Waveform: non-finite value at node " + std::to_string(k) +
                              " (t = " + std::to_string(grid_[k]) + ")");
      }
    }
  }

  static Waveform constant(TimeGrid grid, double value) {
    std::vector<double> values(grid.size(), value);
    return Waveform(std::move(grid), std::move(values));
  }

  const TimeGrid& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t k) const { return values_[k]; }
  double t0() const { return grid_.t0(); }
  double t_end() const { return grid_.t_end(); }

  bool operator==(const Waveform&) const = default;

 private:
  TimeGrid grid_;
  std::vector<double> values_;
};

/// Piecewise-linear interpolant of `w` at `t`; exact at grid nodes.
inline double sample(const Waveform& w, double t) {
  const TimeGrid& g = w.grid();
  if (!g.covers(t)) {
    throw OutOfRangeError("sample: t = " + std::to_string(t) + " outside [" +
                          std::to_string(g.t0()) + ", " + std::to_string(g.t_end()) + "]");
  }
  t = std::clamp(t, g.t0(), g.t_end());
  const std::size_t k = g.interval(t);
  const double ta = g[k];
  const double tb = g[k + 1];
  if (t == ta) return w[k];
  if (t == tb) return w[k + 1];
  const double s = (t - ta) / (tb - ta);
  return (1.0 - s) * w[k] + s * w[k + 1];
}

inline Waveform resample(const Waveform& w, const TimeGrid& grid) {
  if (!w.grid().covers(grid.t0()) || !w.grid().covers(grid.t_end())) {
    throw OutOfRangeError("resample: target grid [" + std::to_string(grid.t0()) + ", " +
                          std::to_string(grid.t_end()) + "] extends beyond waveform span [" +
                          std::to_string(w.t0()) + ", " + std::to_string(w.t_end()) + "]");
  }
  if (grid == w.grid()) return w;
  std::vector<double> values(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) values[k] = sample(w, grid[k]);
  return Waveform(grid, std::move(values));
}

/// max |a - b| over the union of both node sets inside the common span.
inline double sup_diff(const Waveform& a, const Waveform& b) {
  const double lo = std::max(a.t0(), b.t0());
  const double hi = std::min(a.t_end(), b.t_end());
  if (lo > hi) {
    throw OutOfRangeError("sup_diff: waveforms have disjoint time spans");
  }
  double result = 0.0;
  auto visit = [&](const Waveform& w) {
    for (double t : w.grid().nodes()) {
      if (t < lo || t > hi) continue;
      result = std::max(result, std::abs(sample(a, t) - sample(b, t)));
    }
  };
  visit(a);
  visit(b);
  return result;
}

inline double sup_norm(const Waveform& w) {
  double result = 0.0;
  for (double v : w.values()) result = std::max(result, std::abs(v));
  return result;
}

/// Backward differences on the waveform's own grid. Node 0 has no
/// predecessor and repeats node 1's value.
inline Waveform derivative(const Waveform& w) {
  const TimeGrid& g = w.grid();
  std::vector<double> d(g.size());
  for (std::size_t k = 1; k < g.size(); ++k) {
    d[k] = (w[k] - w[k - 1]) / (g[k] - g[k - 1]);
  }
  d[0] = d[1];
  return Waveform(g, std::move(d));
}

/// Pointwise combination of waveforms that share one grid.
template <typename Op>
Waveform combine(const Waveform& a, const Waveform& b, Op op) {
  if (!(a.grid() == b.grid())) {
    throw ValidationError("combine: waveforms live on different grids");
  }
  std::vector<double> out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = op(a[k], b[k]);
  return Waveform(a.grid(), std::move(out));
}

/// Concatenates waveforms on consecutive windows; the shared boundary node is
/// taken from the earlier window.
inline Waveform concatenate(std::span<const Waveform> parts) {
  if (parts.empty()) throw ValidationError("concatenate: no parts");
  std::vector<double> t;
  std::vector<double> v;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Waveform& w = parts[p];
    if (p > 0) {
      if (std::abs(w.t0() - t.back()) > w.grid().slack()) {
        throw ValidationError("concatenate: window " + std::to_string(p) +
                              " does not start where the previous one ends");
      }
    }
    for (std::size_t k = p > 0 ? 1 : 0; k < w.size(); ++k) {
      t.push_back(w.grid()[k]);
      v.push_back(w[k]);
    }
  }
  return Waveform(TimeGrid(std::move(t)), std::move(v));
}

namespace detail {

inline std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, const std::string& context) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw ValidationError(context + ": cannot parse number '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace detail

/// CSV with header `t,<name>` and one row per node at 17 significant digits.
inline void write_csv(std::ostream& out, const std::string& name, const Waveform& w) {
  out << "t," << name << '\n';
  for (std::size_t k = 0; k < w.size(); ++k) {
    out << detail::format_double(w.grid()[k]) << ',' << detail::format_double(w[k]) << '\n';
  }
}

struct NamedWaveform {
  std::string name;
  Waveform waveform;
};

inline NamedWaveform read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("read_csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.rfind("t,", 0) != 0) {
    throw ValidationError("read_csv: header must start with 't,' (got '" + line + "')");
  }
  std::string name = line.substr(2);
  std::vector<double> t;
  std::vector<double> v;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw ValidationError("read_csv: row " + std::to_string(row) + " has no comma");
    }
    const std::string ctx = "read_csv row " + std::to_string(row);
    t.push_back(detail::parse_double(std::string_view(line).substr(0, comma), ctx));
    v.push_back(detail::parse_double(std::string_view(line).substr(comma + 1), ctx));
  }
  return {std::move(name), Waveform(TimeGrid(std::move(t)), std::move(v))};
}

inline void write_csv_file(const std::string& path, const std::string& name, const Waveform& w) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_csv(out, name, w);
}

inline NamedWaveform read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  return read_csv(in);
}

}  // namespace quenchwr
