#include <random>
#include <vector>

#include "catch_amalgamated.hpp"
#include "checks.hpp"
#include "oracles.hpp"

using namespace quenchwr;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

using Vec = std::vector<double>;

ThermalModel uniform_thermal(std::size_t n, double length, double rho_cp, double k, double p_s = 0.0) {
  return ThermalModel{Mesh1d::uniform(length, n), Vec(n, rho_cp), Vec(n, k), Vec(n, 1e6), Vec(n, p_s), 1.9};
}

QuenchParams params() {
  QuenchParams p;
  p.T_c0 = 9.2;
  p.B_c = 14.0;
  p.J_c = 3e9;
  p.dT_q = 0.25;
  return p;
}

}  // namespace

TEST_CASE("quench parameter validation") {
  QuenchParams p = params();
  CHECK_NOTHROW(p.validate(1.9, 10));
  p.T_c0 = 1.5;
  CHECK_THROWS_AS(p.validate(1.9, 10), ValidationError);
  p = params();
  p.dT_q = 0.0;
  CHECK_THROWS_AS(p.validate(1.9, 10), ValidationError);
  p = params();
  p.trigger = QuenchTrigger{0.1, 4, 4};
  CHECK_THROWS_AS(p.validate(1.9, 10), ValidationError);
  p.trigger = QuenchTrigger{0.1, 4, 11};
  CHECK_THROWS_AS(p.validate(1.9, 10), ValidationError);
}

TEST_CASE("quench flag examples") {
  QuenchParams p = params();
  const Vec chi{1.0, 1.0, 0.0};
  const Vec zero3(3, 0.0);

  const double Tcs = sharing_temperature(p, 2.0, 1e9);
  CHECK_THAT(Tcs, WithinRel(9.2 * (1.0 - 2.0 / 14.0 - 1.0 / 3.0), 1e-14));
  const CoefficientField mid = quench_flag(p, chi, Vec(4, Tcs), Vec(3, 2.0), Vec(3, 1e9), 0.0);
  CHECK_THAT(mid[0], WithinAbs(0.5, 1e-15));
  CHECK_THAT(mid[1], WithinAbs(0.5, 1e-15));
  CHECK(mid[2] == 0.0);

  const CoefficientField cold = quench_flag(p, chi, Vec(4, 1.9), Vec(3, 0.01), Vec(3, 1e3), 0.0);
  const double bound = oracle::sigmoid((1.9 - sharing_temperature(p, 0.01, 1e3)) / p.dT_q);
  CHECK(cold[0] <= bound * (1 + 1e-12));
  CHECK(cold[0] < 1e-12);

  p.trigger = QuenchTrigger{0.01, 0, 2};
  CHECK(quench_flag(p, chi, Vec(4, 1.9), zero3, zero3, 0.009)[0] < 1e-12);
  const CoefficientField forced = quench_flag(p, chi, Vec(4, 1.9), zero3, zero3, 0.01);
  CHECK(forced == CoefficientField{1.0, 1.0, 0.0});
  CHECK(quench_flag(p, chi, Vec(4, 1.9), zero3, zero3, 5.0)[1] == 1.0);

  p.enabled = false;
  CHECK(quench_flag(p, chi, Vec(4, 50.0), zero3, zero3, 5.0) == CoefficientField(3, 0.0));
}

TEST_CASE("quench flag is monotone in temperature and sharing threshold") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> T(1.9, 12.0), B(0.0, 10.0), J(0.0, 2e9), d(0.0, 2.0);
  const QuenchParams p = params();
  const std::size_t n = 12;
  const Vec chi(n, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    Vec t(n + 1), b(n), j(n);
    for (double& x : t) x = T(rng);
    for (double& x : b) x = B(rng);
    for (double& x : j) x = J(rng);
    const CoefficientField q = quench_flag(p, chi, t, b, j, 0.0);
    Vec hotter = t;
    for (double& x : hotter) x += d(rng);
    Vec stronger = b;
    for (double& x : stronger) x += d(rng);
    const CoefficientField qt = quench_flag(p, chi, hotter, b, j, 0.0);
    const CoefficientField qb = quench_flag(p, chi, t, stronger, j, 0.0);
    for (std::size_t e = 0; e < n; ++e) {
      CHECK(q[e] >= 0.0);
      CHECK(q[e] <= 1.0);
      CHECK(qt[e] >= q[e]);
      CHECK(qb[e] >= q[e]);
    }
  }
}

TEST_CASE("Joule power") {
  CHECK(joule_power(Vec{0.0, 0.0}, Vec{5.0, 5.0}, Vec{1.0, 1.0}) == CoefficientField{0.0, 0.0});
  CHECK(joule_power(Vec{1.0}, Vec{2.0}, Vec{4.0}) == CoefficientField{1.0});
  const CoefficientField a = joule_power(Vec{0.3}, Vec{1.5}, Vec{2.0});
  const CoefficientField b = joule_power(Vec{0.3}, Vec{3.0}, Vec{2.0});
  CHECK_THAT(b[0], WithinRel(4.0 * a[0], 1e-15));
  CHECK_THROWS_AS(joule_power(Vec{0.5}, Vec{1.0}, Vec{0.0}), ValidationError);
}

TEST_CASE("thermal step examples") {
  const ThermalModel m = uniform_thermal(32, 0.1, 1e3, 0.5);
  const ThermalState rest = ThermalState::at_bath(m, 0.0);
  const ThermalState s = step_thermal(m, rest, Vec(32, 0.0), 1e-3);
  for (double T : s.T) CHECK_THAT(T, WithinAbs(1.9, 1e-14));
  CHECK_THROWS_AS(step_thermal(m, rest, Vec(32, 0.0), -1.0), ValidationError);
  CHECK_THROWS_AS(step_thermal(m, rest, Vec(31, 0.0), 1e-3), ValidationError);

  const std::size_t n = 64;
  const ThermalModel ins = uniform_thermal(n, 0.1, 2e3, 1e-12);
  const double P = 5e4;
  const double dt = 1e-3;
  const ThermalState h = step_thermal(ins, ThermalState::at_bath(ins, 0.0), Vec(n, P), dt);
  for (std::size_t i = 16; i <= 48; ++i) CHECK_THAT(h.T[i] - 1.9, WithinRel(P * dt / 2e3, 1e-6));

  const std::size_t ns = 16;
  const ThermalModel cond = uniform_thermal(ns, 0.1, 1e3, 0.5);
  ThermalState st = ThermalState::at_bath(cond, 0.0);
  for (int k = 0; k < 100; ++k) st = step_thermal(cond, st, Vec(ns, 2e4), 1.0);
  const Vec x = oracle::uniform_nodes(0.1, ns);
  Vec load(ns + 1, 0.0);
  for (std::size_t e = 0; e < ns; ++e) {
    load[e] += 0.5 * 2e4 * cond.mesh.h(e);
    load[e + 1] += 0.5 * 2e4 * cond.mesh.h(e);
  }
  const Vec ref = oracle::solve_interior(oracle::stiffness(x, Vec(ns, 0.5)), load, 1.9, 1.9);
  for (std::size_t i = 0; i <= ns; ++i) CHECK_THAT(st.T[i], WithinRel(ref[i], 1e-3));
}

TEST_CASE("discrete energy bookkeeping is exact") {
  CHECK(check::thermal_bookkeeping_error() <= 1e-10);
}

TEST_CASE("maximum principle at the shipped discretization") {
  // h = 0.1/32, rho_cp = 1e3, k = 0.5, dt = 5e-3
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = 32;
  const ThermalModel m = uniform_thermal(n, 0.1, 1e3, 0.5);
  for (int trial = 0; trial < 100; ++trial) {
    ThermalState s = ThermalState::at_bath(m, 0.0);
    for (std::size_t i = 1; i < n; ++i) s.T[i] = 1.9 + 20.0 * u(rng) * u(rng);
    Vec p(n);
    for (double& x : p) x = u(rng) < 0.3 ? 1e6 * u(rng) : 0.0;
    const ThermalState next = step_thermal(m, s, p, 5e-3);
    for (double T : next.T) CHECK(T >= 1.9 - 1e-9);
  }
}

TEST_CASE("quench resistance") {
  const FieldModel f{Mesh1d::uniform(2.0, 2), Vec{0.0, 0.0}, Vec{1.0, 1.0}, Vec{3.0, 0.0}, 1.0};
  const ThermalModel t{f.mesh, Vec{1.0, 1.0}, Vec{1.0, 1.0}, Vec{9.0, 0.0}, Vec{0.0, 0.0}, 1.9};
  CHECK(quench_resistance(t, f, Vec{0.0, 0.0}) == 0.0);
  CHECK_THAT(quench_resistance(t, f, Vec{1.0, 0.0}), WithinRel(1.0, 1e-15));

  const MagnetConfig cfg = fixture::uniform_config(32, 0.1, 8, 24, 1.4e4, 1e5, 7.9577e5, 1e3, 0.5, 1.6e6, 5e-3);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Vec q(32), more(32);
    for (std::size_t e = 0; e < 32; ++e) {
      q[e] = u(rng);
      more[e] = std::min(1.0, q[e] + u(rng) * u(rng));
    }
    const double r = quench_resistance(cfg.thermal, cfg.field, q);
    CHECK(r >= 0.0);
    CHECK(quench_resistance(cfg.thermal, cfg.field, more) >= r);
    const double alpha = u(rng);
    Vec scaled = q;
    for (double& x : scaled) x *= alpha;
    CHECK_THAT(quench_resistance(cfg.thermal, cfg.field, scaled), WithinRel(alpha * r, 1e-13));
  }
}
