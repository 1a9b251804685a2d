#pragma once

// The per-magnet solution operator: a terminal current waveform goes in, the
// terminal voltage waveform (plus internal field and thermal history) comes
// out. Within one internal step the field is advanced first and the thermal
// model then uses the freshly computed B and J_s.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "quenchwr/errors.hpp"
#include "quenchwr/fem1d.hpp"
#include "quenchwr/magnet_elastic.hpp"
#include "quenchwr/magnet_field.hpp"
#include "quenchwr/magnet_thermal.hpp"
#include "quenchwr/waveform.hpp"

namespace quenchwr {

struct MagnetConfig {
  std::string id;
  FieldModel field;
  ThermalModel thermal;
  QuenchParams quench;
  ElasticModel elastic;
  double dt_magnet = 1e-3;
  bool feed_eddy_losses = false;  ///< add sigma (da/dt)^2 to the heat source

  void validate() const {
    const std::string where = "magnet '" + id + "': ";
    try {
      if (id.empty()) throw ValidationError("empty id");
      field.validate();
      thermal.validate(field);
      quench.validate(thermal.T_bath, field.mesh.num_elements());
      elastic.validate();
      if (!(elastic.mesh == field.mesh)) throw ValidationError("elastic mesh differs from field mesh");
      if (!(dt_magnet > 0.0)) throw ValidationError("dt_magnet must be positive");
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
  }
};

struct MagnetState {
  FieldState field;
  ThermalState thermal;
  CoefficientField quench;  ///< activation used in the most recent step

  static MagnetState at_rest(const MagnetConfig& cfg, double t0) {
    return {FieldState::at_rest(cfg.field, t0), ThermalState::at_bath(cfg.thermal, t0),
            CoefficientField(cfg.field.mesh.num_elements(), 0.0)};
  }

  double time() const { return field.time; }

  bool operator==(const MagnetState&) const = default;
};

struct MagnetStep {
  MagnetState state;
  double flux = 0.0;        ///< Wb
  double resistance = 0.0;  ///< Ohm
};

inline CoefficientField current_density(const FieldModel& field, double current) {
  CoefficientField j(field.chi.size());
  for (std::size_t e = 0; e < j.size(); ++e) j[e] = field.chi[e] * current;
  return j;
}

namespace detail {

inline void require_finite(const MagnetConfig& cfg, const MagnetState& s) {
  auto finite = [](std::span<const double> v) {
    for (double x : v) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  };
  if (!finite(s.field.a) || !finite(s.thermal.T) || !finite(s.quench)) {
    throw SolverError("magnet '" + cfg.id + "': non-finite state at t = " +
                      std::to_string(s.time()));
  }
}

}  // namespace detail

/// Advances field then thermal state by `dt` with terminal current `current`
/// at the new time level.
inline MagnetStep advance_magnet(const MagnetConfig& cfg, const MagnetState& s, double current,
                                 double dt) {
  MagnetStep out;
  out.state.field = step_field(cfg.field, s.field, current, dt);
  const double t_new = out.state.field.time;
  const CoefficientField b = flux_density(cfg.field, out.state.field);
  const CoefficientField j = current_density(cfg.field, current);
  out.state.quench = quench_flag(cfg.quench, cfg.field.chi, s.thermal.T, b, j, t_new);
  CoefficientField heat = joule_power(out.state.quench, j, cfg.thermal.sigma_n);
  if (cfg.feed_eddy_losses) {
    const CoefficientField eddy = eddy_loss_density(cfg.field, s.field, out.state.field, dt);
    for (std::size_t e = 0; e < heat.size(); ++e) heat[e] += eddy[e];
  }
  out.state.thermal = step_thermal(cfg.thermal, s.thermal, heat, dt);
  out.state.thermal.time = t_new;
  detail::require_finite(cfg, out.state);
  out.flux = flux_linkage(cfg.field, out.state.field);
  out.resistance = quench_resistance(cfg.thermal, cfg.field, out.state.quench);
  return out;
}

/// Magnet state at the sample with the largest |i_m| of a solve.
struct PeakSnapshot {
  double time = 0.0;
  double current = 0.0;
  MagnetState state;
};

struct MagnetSolution {
  Waveform voltage;     ///< v_m, V
  Waveform flux;        ///< Phi, Wb
  Waveform resistance;  ///< R_t, Ohm
  Waveform current;     ///< i_m as seen by the magnet, A
  Waveform T_mid;       ///< temperature at the middle node, K
  MagnetState final_state;
  std::vector<std::vector<double>> T_history;  ///< nodal T per exchange node
  PeakSnapshot peak;
};

/// Runs the magnet over `window` with its own step `dt_magnet` (last step
/// shortened) and returns all results on the window's exchange grid.
/// v_m = dPhi/dt + R_t i_m, with dPhi/dt by backward differences on the
/// internal grid.
inline MagnetSolution solve_magnet(const MagnetConfig& cfg, const Waveform& current,
                                   const TimeGrid& window, const MagnetState& init) {
  if (!current.grid().covers(window.t0()) || !current.grid().covers(window.t_end())) {
    throw OutOfRangeError("solve_magnet '" + cfg.id + "': current waveform does not span the window");
  }
  if (init.field.a.size() != cfg.field.mesh.num_nodes() ||
      init.thermal.T.size() != cfg.thermal.mesh.num_nodes()) {
    throw ValidationError("solve_magnet '" + cfg.id + "': initial state does not match the mesh");
  }
  const TimeGrid internal = TimeGrid::with_step(window.t0(), window.t_end(), cfg.dt_magnet);
  const std::size_t n = internal.size();

  std::vector<double> flux(n);
  std::vector<double> resistance(n);
  std::vector<double> amps(n);
  std::vector<std::vector<double>> temps(n);

  MagnetState state = init;
  state.field.time = internal.t0();
  state.thermal.time = internal.t0();
  if (state.quench.size() != cfg.field.mesh.num_elements()) {
    state.quench.assign(cfg.field.mesh.num_elements(), 0.0);
  }
  amps[0] = sample(current, internal.t0());
  flux[0] = flux_linkage(cfg.field, state.field);
  resistance[0] = quench_resistance(cfg.thermal, cfg.field, state.quench);
  temps[0] = state.thermal.T;

  PeakSnapshot peak{internal.t0(), amps[0], state};
  for (std::size_t k = 1; k < n; ++k) {
    const double dt = internal[k] - internal[k - 1];
    amps[k] = sample(current, internal[k]);
    MagnetStep step = advance_magnet(cfg, state, amps[k], dt);
    step.state.field.time = internal[k];
    step.state.thermal.time = internal[k];
    state = std::move(step.state);
    flux[k] = step.flux;
    resistance[k] = step.resistance;
    temps[k] = state.thermal.T;
    if (std::abs(amps[k]) > std::abs(peak.current)) peak = {internal[k], amps[k], state};
  }

  const Waveform flux_w(internal, std::move(flux));
  const Waveform res_w(internal, std::move(resistance));
  const Waveform amps_w(internal, std::move(amps));
  const Waveform dphi = derivative(flux_w);
  std::vector<double> volts(n);
  for (std::size_t k = 0; k < n; ++k) volts[k] = dphi[k] + res_w[k] * amps_w[k];
  const Waveform volts_w(internal, std::move(volts));

  std::vector<std::vector<double>> history(window.size());
  const std::size_t mid = cfg.thermal.mesh.num_nodes() / 2;
  std::vector<double> t_mid(window.size());
  for (std::size_t j = 0; j < window.size(); ++j) {
    const double t = std::clamp(window[j], internal.t0(), internal.t_end());
    const std::size_t k = internal.interval(t);
    const double s = (t - internal[k]) / (internal[k + 1] - internal[k]);
    std::vector<double> T(temps[k].size());
    for (std::size_t i = 0; i < T.size(); ++i) T[i] = (1.0 - s) * temps[k][i] + s * temps[k + 1][i];
    t_mid[j] = T[mid];
    history[j] = std::move(T);
  }

  return MagnetSolution{resample(volts_w, window),
                        resample(flux_w, window),
                        resample(res_w, window),
                        resample(amps_w, window),
                        Waveform(window, std::move(t_mid)),
                        std::move(state),
                        std::move(history),
                        std::move(peak)};
}

}  // namespace quenchwr
