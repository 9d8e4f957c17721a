#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "biped/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

using namespace biped;

TEST_CASE("flat ground is zero everywhere") {
  const auto p = TerrainProfile::make_flat();
  for (double x : {-5.0, 0.0, 0.33, 100.0}) CHECK(p.height_at(x) == 0.0);
}

TEST_CASE("ramps rise past the lead-in") {
  const auto p = TerrainProfile::make_ramp(5.0 * M_PI / 180.0, 1.0);
  CHECK(p.height_at(0.5) == 0.0);
  CHECK(p.height_at(2.0) == doctest::Approx(std::tan(5.0 * M_PI / 180.0)).epsilon(1e-12));
  const auto down = TerrainProfile::make_ramp(-5.0 * M_PI / 180.0, 1.0);
  CHECK(down.height_at(2.0) < 0.0);
  CHECK(down.height_at(0.9) == 0.0);
}

TEST_CASE("noisy heights are deterministic and bounded") {
  const auto p = TerrainProfile::make_noisy(10.0, 0.5, 7);
  for (int i = 0; i < 10000; ++i) {
    const double x = 1.0 + 0.013 * i;
    const double h = p.height_at(x);
    CHECK(h == p.height_at(x));
    CHECK(h >= 0.0);
    CHECK(h <= 0.10);
  }
  CHECK(p.height_at(0.2) == 0.0);  // before start_x
}

TEST_CASE("heights are constant within each cell") {
  const auto p = TerrainProfile::make_noisy(20.0, 0.5, 3);
  for (int cell = 0; cell < 200; ++cell) {
    const double base = 1.0 + 0.5 * cell;
    const double h = p.height_at(base + 1e-9);
    CHECK(p.height_at(base + 0.25) == h);
    CHECK(p.height_at(base + 0.5 - 1e-9) == h);
  }
}

TEST_CASE("cell heights look uniform (KS statistic)") {
  const auto p = TerrainProfile::make_noisy(20.0, 0.5, 12345);
  const int n = 100000;
  std::vector<double> h(n);
  for (int i = 0; i < n; ++i) h[static_cast<std::size_t>(i)] = p.height_at(1.0 + 0.5 * i + 0.1);
  std::sort(h.begin(), h.end());
  double ks = 0.0;
  for (int i = 0; i < n; ++i) {
    const double cdf = h[static_cast<std::size_t>(i)] / 0.20;
    ks = std::max(ks, std::abs(cdf - static_cast<double>(i + 1) / n));
    ks = std::max(ks, std::abs(cdf - static_cast<double>(i) / n));
  }
  CHECK(ks < 0.02);
}

TEST_CASE("training terrain sampler stays within the training domain") {
  Rng rng(99);
  int flat = 0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const auto p = make_training_terrain(rng);
    REQUIRE(p.kind != TerrainKind::noisy);
    if (p.kind == TerrainKind::flat) {
      ++flat;
    } else {
      CHECK(std::abs(p.ramp_angle) <= 5.0 * M_PI / 180.0 + 1e-12);
    }
  }
  const double frac = static_cast<double>(flat) / draws;
  CHECK(frac > 0.45);
  CHECK(frac < 0.55);

  Rng a(7), b(7);
  const auto pa = make_training_terrain(a);
  const auto pb = make_training_terrain(b);
  CHECK(pa.kind == pb.kind);
  CHECK(pa.ramp_angle == pb.ramp_angle);
}

TEST_CASE("profile spec strings parse and round trip") {
  CHECK(TerrainProfile::parse("flat").kind == TerrainKind::flat);
  const auto r = TerrainProfile::parse("ramp:5");
  CHECK(r.kind == TerrainKind::ramp);
  CHECK(r.ramp_angle == doctest::Approx(5.0 * M_PI / 180.0));
  const auto n = TerrainProfile::parse("noisy:10:0.5:7");
  CHECK(n.kind == TerrainKind::noisy);
  CHECK(n.noise_amplitude_cm == 10.0);
  CHECK(n.noise_resolution_m == 0.5);
  CHECK(n.seed == 7);
  CHECK(TerrainProfile::parse(n.to_string()).noise_amplitude_cm == 10.0);

  CHECK_THROWS_AS(TerrainProfile::parse("hills"), InvalidData);
  CHECK_THROWS_AS(TerrainProfile::parse("noisy:10:0.3:7"), InvalidData);  // bad gamma
  CHECK_THROWS_AS(TerrainProfile::parse("noisy:25:0.5:7"), InvalidData);  // bad omega
}
