#include <random>
#include <sstream>
#include <vector>

#include "catch_amalgamated.hpp"
#include "fixtures.hpp"

using namespace quenchwr;
using fixture::table;
using Catch::Matchers::WithinAbs;

namespace {

Waveform random_waveform(std::mt19937& rng, std::size_t n) {
  std::uniform_real_distribution<double> step(0.01, 1.0);
  std::uniform_real_distribution<double> value(-5.0, 5.0);
  std::vector<double> t{value(rng)};
  std::vector<double> v{value(rng)};
  for (std::size_t k = 1; k < n; ++k) {
    t.push_back(t.back() + step(rng));
    v.push_back(value(rng));
  }
  return Waveform(TimeGrid(t), v);
}

}  // namespace

TEST_CASE("grid and waveform construction is validated") {
  CHECK_THROWS_AS(TimeGrid({0.0}), ValidationError);
  CHECK_THROWS_AS(TimeGrid({0.0, 1.0, 1.0}), ValidationError);
  CHECK_THROWS_AS(TimeGrid({1.0, 0.0}), ValidationError);
  CHECK_THROWS_AS(Waveform(TimeGrid({0.0, 1.0}), {1.0}), ValidationError);
  CHECK_THROWS_AS(Waveform(TimeGrid({0.0, 1.0}), {1.0, std::nan("")}), ValidationError);
  CHECK_THROWS_AS(TimeGrid::with_step(0.0, 1.0, 0.0), ValidationError);
}

TEST_CASE("with_step lands exactly on t_end") {
  const TimeGrid g = TimeGrid::with_step(0.0, 1.0, 0.1);
  CHECK(g.size() == 11);
  CHECK(g.t_end() == 1.0);
  const TimeGrid h = TimeGrid::with_step(0.0, 1.0, 0.3);
  CHECK(h.size() == 5);
  CHECK(h[3] == Catch::Approx(0.9));
  CHECK(h.t_end() == 1.0);
}

TEST_CASE("sample") {
  CHECK(sample(table({{0, 0}, {1, 2}}), 0.5) == 1.0);
  CHECK(sample(table({{0, 3}, {1, 3}}), 0.7) == 3.0);
  CHECK(sample(table({{0, 0}, {0.5, 1}, {1, 0}}), 0.25) == 0.5);
  CHECK_THROWS_AS(sample(table({{0, 0}, {1, 2}}), 1.5), OutOfRangeError);
  CHECK_THROWS_AS(sample(table({{0, 0}, {1, 2}}), -0.1), OutOfRangeError);
}

TEST_CASE("resample") {
  const Waveform w = table({{0, 0}, {1, 2}});
  const Waveform r = resample(w, TimeGrid({0, 0.5, 1}));
  CHECK(std::vector<double>(r.values().begin(), r.values().end()) == std::vector<double>{0, 1, 2});
  CHECK(resample(w, w.grid()) == w);
  const Waveform hat = table({{0, 0}, {0.5, 1}, {1, 0}});
  const Waveform ends = resample(hat, TimeGrid({0, 1}));
  CHECK(ends[0] == 0.0);
  CHECK(ends[1] == 0.0);
  CHECK_THROWS_AS(resample(w, TimeGrid({0, 2})), OutOfRangeError);
}

TEST_CASE("sup_diff") {
  const Waveform a = table({{0, 0}, {1, 0}});
  CHECK(sup_diff(a, a) == 0.0);
  CHECK(sup_diff(a, table({{0, 0}, {0.5, 1}, {1, 0}})) == 1.0);
  CHECK(sup_diff(table({{0, 2}, {1, 2}}), a) == 2.0);
  CHECK_THROWS_AS(sup_diff(a, table({{2, 0}, {3, 0}})), OutOfRangeError);
}

TEST_CASE("derivative") {
  auto values = [](const Waveform& w) { return std::vector<double>(w.values().begin(), w.values().end()); };
  CHECK(values(derivative(table({{0, 0}, {1, 2}, {2, 4}}))) == std::vector<double>{2, 2, 2});
  CHECK(values(derivative(table({{0, 5}, {0.3, 5}, {1, 5}}))) == std::vector<double>{0, 0, 0});
  CHECK(values(derivative(table({{0, 0}, {0.5, 1}, {1, 1}}))) == std::vector<double>{2, 2, 0});
}

TEST_CASE("random waveform properties") {
  std::mt19937 rng(12345);
  for (int trial = 0; trial < 50; ++trial) {
    const Waveform w = random_waveform(rng, 3 + trial % 17);
    for (std::size_t k = 0; k < w.size(); ++k) CHECK(sample(w, w.grid()[k]) == w[k]);

    std::vector<double> fine;
    for (std::size_t k = 0; k + 1 < w.size(); ++k) {
      fine.push_back(w.grid()[k]);
      fine.push_back(0.5 * (w.grid()[k] + w.grid()[k + 1]));
    }
    fine.push_back(w.t_end());
    const Waveform r = resample(w, TimeGrid(fine));
    for (std::size_t k = 0; k < w.size(); ++k) CHECK(sample(r, w.grid()[k]) == w[k]);

    const Waveform b = Waveform(w.grid(), std::vector<double>(w.size(), 0.3 * trial));
    const Waveform c = combine(w, b, [](double x, double y) { return x - y * y; });
    CHECK(sup_diff(w, b) >= 0.0);
    CHECK(sup_diff(w, b) == sup_diff(b, w));
    CHECK(sup_diff(w, c) <= sup_diff(w, b) + sup_diff(b, c) + 1e-12);

    std::vector<double> ramp(w.size());
    for (std::size_t k = 0; k < w.size(); ++k) ramp[k] = 1.5 - 2.5 * w.grid()[k];
    const Waveform slope = derivative(Waveform(w.grid(), ramp));
    for (double d : slope.values()) CHECK_THAT(d, WithinAbs(-2.5, 1e-9));
  }
}

TEST_CASE("CSV round trip is exact") {
  std::mt19937 rng(7);
  const Waveform w = random_waveform(rng, 40);
  std::stringstream io;
  write_csv(io, "v_m", w);
  CHECK(io.str().rfind("t,v_m\n", 0) == 0);
  const NamedWaveform back = read_csv(io);
  CHECK(back.name == "v_m");
  CHECK(back.waveform == w);

  std::stringstream bad("time,x\n0,1\n");
  CHECK_THROWS_AS(read_csv(bad), ValidationError);
  std::stringstream garbage("t,x\n0,1\n1,abc\n");
  CHECK_THROWS_AS(read_csv(garbage), ValidationError);
}

TEST_CASE("concatenate keeps the earlier window's boundary node") {
  const std::vector<Waveform> parts{table({{0, 0}, {0.5, 1}, {1, 2}}), table({{1, 9}, {2, 4}})};
  const Waveform w = concatenate(parts);
  CHECK(w.size() == 4);
  CHECK(w[2] == 2.0);
  CHECK(w[3] == 4.0);
  const std::vector<Waveform> gap{table({{0, 0}, {1, 0}}), table({{1.5, 0}, {2, 0}})};
  CHECK_THROWS_AS(concatenate(gap), ValidationError);
}
