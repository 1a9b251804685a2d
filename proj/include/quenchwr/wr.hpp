#pragma once

// Waveform relaxation between the circuit and the magnets (Gauss-Seidel:
// circuit first, then all magnets), its reduced-model accelerated variant,
// and a monolithic per-step fixed point used as reference.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <future>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "quenchwr/circuit.hpp"
#include "quenchwr/errors.hpp"
#include "quenchwr/magnet_elastic.hpp"
#include "quenchwr/magnet_operator.hpp"
#include "quenchwr/scenario.hpp"
#include "quenchwr/waveform.hpp"

namespace quenchwr {

struct ConvergenceResult {
  bool converged = false;
  double residual = 0.0;
};

/// max_n sup_diff(next_n, prev_n) / max(max_n sup_norm(next_n), 1e-12)
inline ConvergenceResult convergence_check(std::span<const Waveform> prev,
                                           std::span<const Waveform> next, double tol) {
  if (prev.size() != next.size()) throw ValidationError("convergence_check: magnet counts differ");
  double diff = 0.0;
  double scale = 0.0;
  for (std::size_t n = 0; n < next.size(); ++n) {
    diff = std::max(diff, sup_diff(next[n], prev[n]));
    scale = std::max(scale, sup_norm(next[n]));
  }
  const double r = diff / std::max(scale, 1e-12);
  return {r <= tol, r};
}

/// Geometric mean of r_{k+1} / r_k; 0 for fewer than two residuals or when
/// the iteration hit an exact fixed point.
inline double contraction_estimate(std::span<const double> residuals) {
  if (residuals.size() < 2) return 0.0;
  double log_sum = 0.0;
  for (std::size_t k = 1; k < residuals.size(); ++k) {
    if (residuals[k] == 0.0) return 0.0;
    if (residuals[k - 1] == 0.0) return std::numeric_limits<double>::infinity();
    log_sum += std::log(residuals[k] / residuals[k - 1]);
  }
  return std::exp(log_sum / static_cast<double>(residuals.size() - 1));
}

struct WindowReport {
  double t0 = 0.0;
  double t_end = 0.0;
  std::size_t iterations = 0;
  std::vector<double> residuals;
  double contraction = 0.0;
  bool converged = false;
};

struct WrReport {
  WrMode mode = WrMode::Plain;
  double tol = 0.0;
  std::size_t k_max = 0;
  std::vector<WindowReport> windows;
  bool converged = false;
  std::string diagnostic;

  std::size_t total_iterations() const {
    std::size_t n = 0;
    for (const auto& w : windows) n += w.iterations;
    return n;
  }

  std::size_t max_iterations() const {
    std::size_t n = 0;
    for (const auto& w : windows) n = std::max(n, w.iterations);
    return n;
  }

  double contraction() const {
    double rho = 0.0;
    for (const auto& w : windows) rho = std::max(rho, w.contraction);
    return rho;
  }
};

struct NetworkSolution {
  TransientSolution circuit;
  std::vector<MagnetSolution> magnets;
  std::vector<ElasticSolution> elastic;
  WrReport report;
};

struct ReducedModelData {
  double inductance = 0.0;
  Waveform resistance;
};

/// L = extract_inductance(cfg); R = previous R_t, or zero on `grid`.
inline ReducedModelData build_reduced_model(const MagnetConfig& cfg, const MagnetSolution* previous,
                                            const TimeGrid& grid) {
  return {extract_inductance(cfg.field),
          previous ? resample(previous->resistance, grid) : Waveform::constant(grid, 0.0)};
}

namespace detail {

inline TransientSolution concatenate(std::span<const TransientSolution> parts) {
  auto join = [&](auto member) {
    std::vector<Waveform> out;
    const std::size_t count = (parts.front().*member).size();
    for (std::size_t j = 0; j < count; ++j) {
      std::vector<Waveform> pieces;
      for (const auto& p : parts) pieces.push_back((p.*member)[j]);
      out.push_back(quenchwr::concatenate(pieces));
    }
    return out;
  };
  TransientSolution all{join(&TransientSolution::potentials), join(&TransientSolution::inductor_currents),
                        join(&TransientSolution::vsource_currents),
                        join(&TransientSolution::magnet_currents), parts.back().final_state, 0.0};
  for (const auto& p : parts) all.max_kcl_residual = std::max(all.max_kcl_residual, p.max_kcl_residual);
  return all;
}

inline MagnetSolution concatenate(std::span<const MagnetSolution> parts) {
  auto join = [&](Waveform MagnetSolution::*member) {
    std::vector<Waveform> pieces;
    for (const auto& p : parts) pieces.push_back(p.*member);
    return quenchwr::concatenate(pieces);
  };
  MagnetSolution all{join(&MagnetSolution::voltage),    join(&MagnetSolution::flux),
                     join(&MagnetSolution::resistance), join(&MagnetSolution::current),
                     join(&MagnetSolution::T_mid),      parts.back().final_state,
                     {},                                parts.front().peak};
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto& h = parts[p].T_history;
    all.T_history.insert(all.T_history.end(), h.begin() + (p > 0 ? 1 : 0), h.end());
    if (std::abs(parts[p].peak.current) > std::abs(all.peak.current)) all.peak = parts[p].peak;
  }
  return all;
}

inline std::vector<MagnetSolution> solve_magnets(std::span<const MagnetConfig> configs,
                                                 std::span<const Waveform> currents,
                                                 const TimeGrid& window,
                                                 std::span<const MagnetState> init, bool parallel) {
  std::vector<MagnetSolution> out;
  out.reserve(configs.size());
  if (!parallel || configs.size() < 2) {
    for (std::size_t m = 0; m < configs.size(); ++m) {
      out.push_back(solve_magnet(configs[m], currents[m], window, init[m]));
    }
    return out;
  }
  std::vector<std::future<MagnetSolution>> jobs;
  jobs.reserve(configs.size());
  for (std::size_t m = 0; m < configs.size(); ++m) {
    jobs.push_back(std::async(std::launch::async, [&, m] {
      return solve_magnet(configs[m], currents[m], window, init[m]);
    }));
  }
  for (auto& job : jobs) out.push_back(job.get());
  return out;
}

struct WindowResult {
  TransientSolution circuit;
  std::vector<MagnetSolution> magnets;
  WindowReport report;
};

inline WindowResult run_window(const Scenario& sc, const WrConfig& cfg, const MnaModel& model,
                               std::span<const MagnetConfig> configs,
                               std::span<const double> inductance, double a, double b,
                               const CircuitState& circuit_init,
                               std::span<const MagnetState> magnet_init) {
  const TimeGrid cgrid = TimeGrid::with_step(a, b, sc.circuit_dt);
  const TimeGrid xgrid = TimeGrid::with_step(a, b, sc.exchange_dt());
  const std::size_t nm = configs.size();

  std::vector<Waveform> v(nm, Waveform::constant(xgrid, 0.0));
  std::optional<TransientSolution> circuit;
  std::vector<MagnetSolution> magnets;
  WindowReport report{a, b, 0, {}, 0.0, false};

  for (std::size_t k = 1; k <= cfg.k_max; ++k) {
    MagnetInterface iface;
    if (cfg.mode == WrMode::Plain) {
      iface = KnownVoltage{v};
    } else {
      ReducedModel rm;
      for (std::size_t m = 0; m < nm; ++m) {
        const MagnetSolution* prev = magnets.empty() ? nullptr : &magnets[m];
        ReducedModelData data = build_reduced_model(configs[m], prev, cgrid);
        rm.inductance.push_back(inductance[m]);
        if (prev) {
          const Waveform& i = circuit->magnet_currents[m];
          const Waveform di = derivative(i);
          const Waveform vm = resample(v[m], cgrid);
          std::vector<double> dv(cgrid.size());
          for (std::size_t j = 0; j < dv.size(); ++j) {
            dv[j] = vm[j] - inductance[m] * di[j] - data.resistance[j] * i[j];
          }
          rm.defect.emplace_back(cgrid, std::move(dv));
        } else {
          rm.defect.push_back(Waveform::constant(cgrid, 0.0));
        }
        rm.resistance.push_back(std::move(data.resistance));
      }
      iface = std::move(rm);
    }

    circuit = solve_transient(model, iface, cgrid, circuit_init);
    magnets = solve_magnets(configs, circuit->magnet_currents, xgrid, magnet_init, cfg.parallel);

    std::vector<Waveform> next;
    next.reserve(nm);
    for (const auto& s : magnets) next.push_back(s.voltage);
    const ConvergenceResult c = convergence_check(v, next, cfg.tol);
    v = std::move(next);
    report.iterations = k;
    report.residuals.push_back(c.residual);
    if (c.converged) {
      report.converged = true;
      break;
    }
    if (!std::isfinite(c.residual)) break;
  }
  report.contraction = contraction_estimate(report.residuals);
  return {std::move(*circuit), std::move(magnets), std::move(report)};
}

}  // namespace detail

/// Per magnet: solve_elastic with the temperature and Lorentz force of the
/// chosen snapshot.
inline std::vector<ElasticSolution> post_process_elasticity(std::span<const MagnetConfig> configs,
                                                            std::span<const MagnetSolution> solutions,
                                                            ElasticSnapshot when) {
  std::vector<ElasticSolution> out;
  for (std::size_t m = 0; m < configs.size(); ++m) {
    const MagnetSolution& s = solutions[m];
    const MagnetState& state = when == ElasticSnapshot::End ? s.final_state : s.peak.state;
    const double current =
        when == ElasticSnapshot::End ? s.current[s.current.size() - 1] : s.peak.current;
    const CoefficientField f = lorentz_force_density(configs[m].field, state.field, current);
    out.push_back(solve_elastic(configs[m].elastic, state.thermal.T, f));
  }
  return out;
}

inline NetworkSolution run_wr(const Scenario& sc, const WrConfig& cfg) {
  sc.validate();
  cfg.validate();
  const MnaModel model(sc.netlist);
  const std::vector<MagnetConfig> configs = sc.configs();
  std::vector<double> inductance;
  for (const auto& c : configs) inductance.push_back(extract_inductance(c.field));

  CircuitState circuit_state = CircuitState::zero(sc.netlist, sc.t0);
  std::vector<MagnetState> magnet_state;
  for (const auto& c : configs) magnet_state.push_back(MagnetState::at_rest(c, sc.t0));

  const std::vector<double> bounds = window_bounds(sc.t0, sc.t_end, cfg.windows);

  std::vector<TransientSolution> circuit_parts;
  std::vector<std::vector<MagnetSolution>> magnet_parts(configs.size());
  WrReport report{cfg.mode, cfg.tol, cfg.k_max, {}, true, ""};
  for (std::size_t w = 0; w + 1 < bounds.size(); ++w) {
    detail::WindowResult r = detail::run_window(sc, cfg, model, configs, inductance, bounds[w],
                                                bounds[w + 1], circuit_state, magnet_state);
    if (!r.report.converged && report.converged) {
      std::ostringstream msg;
      msg << "window " << w << " [" << r.report.t0 << ", " << r.report.t_end << "] not converged after "
          << r.report.iterations << " iterations (last residual "
          << (r.report.residuals.empty() ? 0.0 : r.report.residuals.back()) << ", tol " << cfg.tol
          << ", estimated contraction " << r.report.contraction << ")";
      report.diagnostic = msg.str();
      report.converged = false;
    }
    circuit_state = r.circuit.final_state;
    for (std::size_t m = 0; m < configs.size(); ++m) {
      magnet_state[m] = r.magnets[m].final_state;
      magnet_parts[m].push_back(std::move(r.magnets[m]));
    }
    circuit_parts.push_back(std::move(r.circuit));
    report.windows.push_back(std::move(r.report));
  }

  NetworkSolution out;
  out.circuit = detail::concatenate(circuit_parts);
  for (auto& parts : magnet_parts) out.magnets.push_back(detail::concatenate(parts));
  out.elastic = post_process_elasticity(configs, out.magnets, cfg.elastic_at);
  out.report = std::move(report);
  return out;
}

inline NetworkSolution run_plain_wr(const Scenario& sc, WrConfig cfg) {
  cfg.mode = WrMode::Plain;
  return run_wr(sc, cfg);
}

inline NetworkSolution run_accelerated_wr(const Scenario& sc, WrConfig cfg) {
  cfg.mode = WrMode::Accelerated;
  return run_wr(sc, cfg);
}

/// Strongly coupled solve on one grid: per step, alternate circuit step
/// (magnet voltages prescribed) and magnet single steps until the magnet
/// voltages change by at most inner_tol relative.
inline NetworkSolution monolithic_reference(const Scenario& sc, const TimeGrid& grid,
                                            double inner_tol = 1e-12, std::size_t max_inner = 100) {
  sc.validate();
  const MnaModel model(sc.netlist);
  const std::vector<MagnetConfig> configs = sc.configs();
  const std::size_t nm = configs.size();
  const std::size_t nt = grid.size();

  CircuitState cstate = CircuitState::zero(sc.netlist, grid.t0());
  model.check_initial_state(cstate);
  std::vector<MagnetState> mstate;
  for (const auto& c : configs) mstate.push_back(MagnetState::at_rest(c, grid.t0()));

  const auto nn = static_cast<std::size_t>(model.num_nodes());
  const auto nl = static_cast<std::size_t>(model.num_inductors());
  const auto nv = static_cast<std::size_t>(model.num_vsources());
  using Series = std::vector<std::vector<double>>;
  Series phi(nn, std::vector<double>(nt)), il(nl, std::vector<double>(nt)),
      iv(nv, std::vector<double>(nt)), im(nm, std::vector<double>(nt));
  Series flux(nm, std::vector<double>(nt)), res(nm, std::vector<double>(nt));
  std::vector<Series> temps(nm, Series(nt));
  std::vector<PeakSnapshot> peak(nm);

  auto record = [&](std::size_t k) {
    for (std::size_t i = 0; i < nn; ++i) phi[i][k] = cstate.phi(static_cast<Eigen::Index>(i));
    for (std::size_t i = 0; i < nl; ++i) il[i][k] = cstate.i_L(static_cast<Eigen::Index>(i));
    for (std::size_t i = 0; i < nv; ++i) iv[i][k] = cstate.i_V(static_cast<Eigen::Index>(i));
    for (std::size_t m = 0; m < nm; ++m) {
      const double i = cstate.i_m(static_cast<Eigen::Index>(m));
      im[m][k] = i;
      temps[m][k] = mstate[m].thermal.T;
      if (k == 0 || std::abs(i) > std::abs(peak[m].current)) peak[m] = {grid[k], i, mstate[m]};
    }
  };
  for (std::size_t m = 0; m < nm; ++m) {
    flux[m][0] = flux_linkage(configs[m].field, mstate[m].field);
    res[m][0] = quench_resistance(configs[m].thermal, configs[m].field, mstate[m].quench);
  }
  record(0);

  std::vector<double> v(nm, 0.0);
  double v_scale = 0.0;
  double worst_kcl = 0.0;
  for (std::size_t k = 1; k < nt; ++k) {
    const double dt = grid[k] - grid[k - 1];
    std::vector<MagnetBranchLaw> laws(nm);
    CircuitState cnext;
    std::vector<MagnetStep> steps(nm);
    bool done = false;
    double change = 0.0;
    for (std::size_t it = 0; it < max_inner && !done; ++it) {
      for (std::size_t m = 0; m < nm; ++m) laws[m] = {0.0, v[m]};
      cnext = model.step(cstate, laws, dt);
      cnext.time = grid[k];
      change = 0.0;
      double scale = v_scale;
      for (std::size_t m = 0; m < nm; ++m) {
        const double i = cnext.i_m(static_cast<Eigen::Index>(m));
        steps[m] = advance_magnet(configs[m], mstate[m], i, dt);
        const double v_new = (steps[m].flux - flux[m][k - 1]) / dt + steps[m].resistance * i;
        change = std::max(change, std::abs(v_new - v[m]));
        scale = std::max(scale, std::abs(v_new));
        v[m] = v_new;
      }
      done = change <= inner_tol * std::max(scale, 1e-12);
    }
    if (!done) {
      std::ostringstream msg;
      msg << "monolithic_reference: inner iteration stagnated at step " << k << " (t = " << grid[k]
          << ", change " << change << " after " << max_inner << " iterations)";
      throw SolverError(msg.str());
    }
    worst_kcl = std::max(worst_kcl, model.kcl_residual(cstate, cnext).cwiseAbs().maxCoeff() /
                                        model.kcl_scale(cnext));
    cstate = std::move(cnext);
    for (std::size_t m = 0; m < nm; ++m) {
      steps[m].state.field.time = grid[k];
      steps[m].state.thermal.time = grid[k];
      mstate[m] = std::move(steps[m].state);
      flux[m][k] = steps[m].flux;
      res[m][k] = steps[m].resistance;
      v_scale = std::max(v_scale, std::abs(v[m]));
    }
    record(k);
  }

  auto wrap = [&](Series& s) {
    std::vector<Waveform> out;
    for (auto& x : s) out.emplace_back(grid, std::move(x));
    return out;
  };
  NetworkSolution out;
  out.circuit = {wrap(phi), wrap(il), wrap(iv), wrap(im), cstate, worst_kcl};
  for (std::size_t m = 0; m < nm; ++m) {
    const Waveform f(grid, std::move(flux[m]));
    const Waveform r(grid, std::move(res[m]));
    const Waveform& i = out.circuit.magnet_currents[m];
    const Waveform df = derivative(f);
    std::vector<double> volts(nt);
    for (std::size_t k = 0; k < nt; ++k) volts[k] = df[k] + r[k] * i[k];
    const std::size_t mid = configs[m].thermal.mesh.num_nodes() / 2;
    std::vector<double> t_mid(nt);
    for (std::size_t k = 0; k < nt; ++k) t_mid[k] = temps[m][k][mid];
    out.magnets.push_back(MagnetSolution{Waveform(grid, std::move(volts)), f, r, i,
                                         Waveform(grid, std::move(t_mid)), mstate[m],
                                         std::move(temps[m]), std::move(peak[m])});
  }
  out.elastic = post_process_elasticity(configs, out.magnets, sc.solver.elastic_at);
  out.report.converged = true;
  return out;
}

}  // namespace quenchwr
