#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "biped/gait_data.hpp"
#include "biped/gait_synth.hpp"

#include <cmath>

using namespace biped;

namespace {

RawTrial flat_trial(double rate, double seconds,
                    std::vector<double> strikes) {
  RawTrial t;
  t.sample_rate = rate;
  t.samples = Mat::Zero(static_cast<Eigen::Index>(rate * seconds), 6);
  t.foot_strike_times = std::move(strikes);
  t.com_speed_label = 1.0;
  return t;
}

RawCycle make_cycle(const Mat& samples, double speed = 1.0) {
  RawCycle c;
  c.samples = samples;
  c.sample_rate = 10.0;
  c.speed = speed;
  return c;
}

}  // namespace

TEST_CASE("segmentation counts cycles between strikes") {
  const auto t = flat_trial(100.0, 4.0, {1.0, 2.1, 3.2});
  const auto cycles = segment_cycles(t);
  REQUIRE(cycles.size() == 2);
  CHECK(cycles[0].samples.rows() == 110);
  CHECK(cycles[1].samples.rows() == 110);
  CHECK(cycles[0].speed == 1.0);
}

TEST_CASE("single strike yields no cycles") {
  const auto t = flat_trial(100.0, 2.0, {1.0});
  CHECK(segment_cycles(t).empty());
}

TEST_CASE("cycles outside the duration window are dropped") {
  const auto t = flat_trial(100.0, 6.0, {0.0, 0.3, 1.0, 4.9});
  const auto cycles = segment_cycles(t);  // 0.3 s too short, 3.9 s too long
  REQUIRE(cycles.size() == 1);
  CHECK(cycles[0].samples.rows() == 70);
}

TEST_CASE("kept cycles tile the inter-strike intervals") {
  const auto t = flat_trial(100.0, 5.0, {0.5, 1.5, 2.5, 3.5});
  const auto cycles = segment_cycles(t);
  REQUIRE(cycles.size() == 3);
  for (std::size_t i = 0; i + 1 < cycles.size(); ++i) {
    CHECK(cycles[i].start_index +
              static_cast<std::size_t>(cycles[i].samples.rows()) ==
          cycles[i + 1].start_index);
  }
}

TEST_CASE("period-aligned strikes give phase-aligned cycles") {
  const double rate = 100.0, period = 1.1;
  RawTrial t = flat_trial(rate, 5.0, {});
  for (Eigen::Index i = 0; i < t.samples.rows(); ++i)
    t.samples(i, 0) = std::sin(2.0 * M_PI * static_cast<double>(i) / rate / period);
  t.foot_strike_times = {0.3, 0.3 + period, 0.3 + 2 * period, 0.3 + 3 * period};
  const auto cycles = segment_cycles(t);
  REQUIRE(cycles.size() == 3);
  const double slope = 2.0 * M_PI / period / rate;  // max per-sample change
  for (const auto& c : cycles)
    CHECK(std::abs(c.samples(0, 0) - cycles[0].samples(0, 0)) <= slope);
}

TEST_CASE("constant channel unifies to a DC coefficient") {
  const auto spec = unify_cycle(make_cycle(Mat::Constant(12, 6, 0.3)));
  for (int j = 0; j < 6; ++j) {
    CHECK(spec.coefficients(0, j).real() == doctest::Approx(0.3 * 32).epsilon(1e-12));
    for (int k = 1; k < 32; ++k) CHECK(std::abs(spec.coefficients(k, j)) < 1e-12);
  }
}

TEST_CASE("unify rejects short or non-finite cycles") {
  CHECK_THROWS_AS(unify_cycle(make_cycle(Mat::Zero(3, 6))), InvalidData);
  Mat bad = Mat::Zero(10, 6);
  bad(4, 2) = std::nan("");
  CHECK_THROWS_AS(unify_cycle(make_cycle(bad)), InvalidData);
}

TEST_CASE("reconstruct inverts unify for 32-sample cycles") {
  Rng rng(3);
  Mat samples(32, 6);
  for (Eigen::Index r = 0; r < 32; ++r)
    for (Eigen::Index c = 0; c < 6; ++c) samples(r, c) = rng_range(rng, -1.0, 1.0);
  const auto spec = unify_cycle(make_cycle(samples));
  CHECK(spec.symmetry_error() < 1e-9);
  const auto cycle = reconstruct_cycle(spec);
  for (Eigen::Index r = 0; r < 32; ++r)
    for (Eigen::Index c = 0; c < 6; ++c)
      CHECK(cycle.frames(r, c) == doctest::Approx(samples(r, c)).epsilon(1e-9).scale(1.0));
}

TEST_CASE("zero and DC-only spectra reconstruct trivially") {
  SpectralGait zero;
  CHECK(reconstruct_cycle(zero).frames.cwiseAbs().maxCoeff() == 0.0);
  SpectralGait dc;
  for (int j = 0; j < 6; ++j) dc.coefficients(0, j) = Cplx(32.0 * 0.25, 0.0);
  const auto cycle = reconstruct_cycle(dc);
  CHECK(cycle.frames.minCoeff() == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(cycle.frames.maxCoeff() == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("broken conjugate symmetry is rejected, small drift is repaired") {
  SpectralGait s;
  s.coefficients(1, 0) = Cplx(1.0, 0.5);
  s.coefficients(31, 0) = Cplx(1.0, -0.5 + 1e-7);
  CHECK_NOTHROW(reconstruct_cycle(s));
  s.coefficients(31, 0) = Cplx(1.0, 0.5);  // same sign: badly asymmetric
  CHECK_THROWS_AS(reconstruct_cycle(s), InvalidData);
}

TEST_CASE("parseval relation per channel") {
  Rng rng(17);
  Mat samples(20, 6);
  for (Eigen::Index r = 0; r < 20; ++r)
    for (Eigen::Index c = 0; c < 6; ++c) samples(r, c) = rng_range(rng, -1.0, 1.0);
  const auto spec = unify_cycle(make_cycle(samples));
  const auto cycle = reconstruct_cycle(spec);
  for (int j = 0; j < 6; ++j) {
    double ce = 0.0, fe = 0.0;
    for (int k = 0; k < 32; ++k) {
      ce += std::norm(spec.coefficients(k, j));
      fe += cycle.frames(k, j) * cycle.frames(k, j);
    }
    CHECK(ce == doctest::Approx(32.0 * fe).epsilon(1e-6));
  }
}

TEST_CASE("synthesized datasets are deterministic in the seed") {
  const auto a = synthesize_dataset(2, 7);
  const auto b = synthesize_dataset(2, 7);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].samples == b[i].samples);
    CHECK(a[i].foot_strike_times == b[i].foot_strike_times);
    CHECK(a[i].com_speed_label == b[i].com_speed_label);
  }
}

TEST_CASE("synthesized angles stay well inside +-pi/2") {
  for (const auto& trial : synthesize_dataset(4, 123))
    CHECK(trial.samples.cwiseAbs().maxCoeff() < M_PI / 2.0);
}

TEST_CASE("faster walking shortens the cycle") {
  Morphology m;
  CHECK(synth_cycle_frequency(2.0, m) > synth_cycle_frequency(0.5, m));

  SynthConfig slow, fast;
  slow.speed_min = slow.speed_max = 0.5;
  fast.speed_min = fast.speed_max = 2.0;
  const auto ts = synthesize_dataset(1, 42, slow);
  const auto tf = synthesize_dataset(1, 42, fast);
  const auto cs = segment_cycles(ts[0]);
  const auto cf = segment_cycles(tf[0]);
  REQUIRE(!cs.empty());
  REQUIRE(!cf.empty());
  CHECK(cf[0].samples.rows() < cs[0].samples.rows());
}

TEST_CASE("prepare_trial yields phase-aligned spectral cycles") {
  const auto trials = synthesize_dataset(1, 5);
  const auto specs = prepare_trial(trials[0]);
  REQUIRE(specs.size() >= 3);
  for (const auto& s : specs) {
    CHECK(s.speed == trials[0].com_speed_label);
    CHECK(s.symmetry_error() < 1e-9);
  }
  // Consecutive cycles encode the same waveform up to the half-sample phase
  // jitter that 10 Hz strike quantization allows.
  const auto c0 = reconstruct_cycle(specs[0]);
  const auto c1 = reconstruct_cycle(specs[1]);
  CHECK((c0.frames - c1.frames).cwiseAbs().maxCoeff() < 0.5);
}

TEST_CASE("cycle corpus round trips exactly") {
  const auto trials = synthesize_dataset(2, 99);
  std::vector<GaitCycle> cycles;
  for (const auto& t : trials)
    for (const auto& s : prepare_trial(t)) cycles.push_back(reconstruct_cycle(s));
  REQUIRE(!cycles.empty());
  const std::string csv = cycle_corpus_csv(cycles);
  const auto parsed = parse_cycle_corpus_csv(csv);
  REQUIRE(parsed.size() == cycles.size());
  for (std::size_t i = 0; i < cycles.size(); ++i) {
    CHECK(parsed[i].frames == cycles[i].frames);
    CHECK(parsed[i].speed == cycles[i].speed);
    CHECK(parsed[i].morphology.leg_length_left == cycles[i].morphology.leg_length_left);
  }
  CHECK(csv.substr(0, csv.find('\n')) == "speed,leg_r,leg_l,frame,j0,j1,j2,j3,j4,j5");
}

TEST_CASE("spectral corpus round trips exactly") {
  const auto trials = synthesize_dataset(1, 31);
  const auto specs = prepare_trial(trials[0]);
  const std::string csv = spectral_corpus_csv(specs);
  const auto parsed = parse_spectral_corpus_csv(csv);
  REQUIRE(parsed.size() == specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i)
    CHECK(parsed[i].coefficients == specs[i].coefficients);
}
