#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "biped/env.hpp"

#include <algorithm>
#include <cmath>

using namespace biped;

namespace {

GaitNetParams zero_gait() {
  Rng rng(1);
  GaitNetParams p = GaitNetParams::init(1, 8, nn::Act::relu, rng);
  p.net.setZero();
  return p;
}

EpisodeConfig standing_config(std::uint64_t seed = 0) {
  EpisodeConfig cfg;
  cfg.speed = SpeedProfile::constant(1.0);
  cfg.terrain = TerrainProfile::make_flat();
  cfg.max_duration = 5.0;
  cfg.rsi = false;
  cfg.seed = seed;
  return cfg;
}

ReferencePlayback linear_cycle(double slope) {
  ReferencePlayback p;
  for (int f = 0; f < kCycleFrames; ++f)
    for (int j = 0; j < kJointChannels; ++j)
      p.cycle.frames(f, j) = slope * f;
  return p;
}

}  // namespace

TEST_CASE("observation layout is the 55-D contract") {
  const auto& layout = observation_layout();
  int total = 0;
  int expect_offset = 0;
  for (const auto& f : layout) {
    CHECK(f.offset == expect_offset);
    expect_offset += f.size;
    total += f.size;
  }
  CHECK(total == kObsDim);
  CHECK(kObsDim == 55);
  // pinned order
  REQUIRE(layout.size() == 11);
  CHECK(std::string(layout[0].name) == "v_ds");
  CHECK(std::string(layout[1].name) == "r_angle");
  CHECK(std::string(layout[2].name) == "v_com");
  CHECK(std::string(layout[3].name) == "q_prev");
  CHECK(std::string(layout[4].name) == "q");
  CHECK(std::string(layout[5].name) == "q_ref");
  CHECK(std::string(layout[6].name) == "q_ref_next");
  CHECK(std::string(layout[7].name) == "q_ref_preview");
  CHECK(std::string(layout[8].name) == "a_prev");
  CHECK(std::string(layout[9].name) == "qd");
  CHECK(std::string(layout[10].name) == "qd_ref");
}

TEST_CASE("reset observation golden values for the zero reference") {
  Env env(BipedModel::standard(), zero_gait());
  const Observation obs = env.reset(standing_config());
  Eigen::Matrix<double, kObsDim, 1> expect =
      Eigen::Matrix<double, kObsDim, 1>::Zero();
  expect[0] = 1.0;  // commanded speed
  expect[2] = 1.0;  // CoM speed equals the injected forward momentum
  CHECK((obs.v - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("reset is deterministic, with and without RSI") {
  Env env(BipedModel::standard(), zero_gait());
  EpisodeConfig cfg = standing_config(7);
  const Observation a = env.reset(cfg);
  const Observation b = env.reset(cfg);
  CHECK(a.v == b.v);
  cfg.rsi = true;
  const Observation c = env.reset(cfg);
  const Observation d = env.reset(cfg);
  CHECK(c.v == d.v);
}

TEST_CASE("RSI phases are uniform over resets") {
  Rng rng(3);
  GaitNetParams gait = GaitNetParams::init(1, 8, nn::Act::tanh, rng);
  Env env(BipedModel::standard(), gait);
  EpisodeConfig cfg = standing_config();
  cfg.rsi = true;
  const int n = 1000;
  std::vector<double> phases;
  for (int i = 0; i < n; ++i) {
    cfg.seed = static_cast<std::uint64_t>(i);
    env.reset(cfg);
    phases.push_back(env.playback_phase());
  }
  std::sort(phases.begin(), phases.end());
  double ks = 0.0;
  for (int i = 0; i < n; ++i) {
    ks = std::max(ks, std::abs(phases[static_cast<std::size_t>(i)] -
                               static_cast<double>(i + 1) / n));
    ks = std::max(ks, std::abs(phases[static_cast<std::size_t>(i)] -
                               static_cast<double>(i) / n));
  }
  CHECK(ks < 0.05);
}

TEST_CASE("action filter follows the first-order step response") {
  Env env(BipedModel::standard(), zero_gait());
  env.reset(standing_config());
  Vec7 action = Vec7::Constant(30.0);
  for (int k = 1; k <= 20; ++k) {
    env.step(action);
    const double expect = 30.0 * (1.0 - std::pow(0.7, k));
    CHECK(env.filtered_torque()[0] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("beta = 1 makes the filter the identity") {
  Env env(BipedModel::standard(), zero_gait());
  EpisodeConfig cfg = standing_config();
  cfg.filter_beta = 1.0;
  env.reset(cfg);
  Vec7 action;
  action << 5, -3, 2, 8, -1, 0, 4;
  env.step(action);
  CHECK(env.filtered_torque() == action);
}

TEST_CASE("each policy step advances the clock by exactly 10 ms") {
  Env env(BipedModel::standard(), zero_gait());
  env.reset(standing_config());
  int k = 0;
  while (k < 50 && env.episode_active()) {
    const bool done = env.step(Vec7::Zero()).done;
    ++k;
    CHECK(env.episode_time() == doctest::Approx(0.01 * k).epsilon(1e-12));
    if (done) break;
  }
  CHECK(k >= 10);
}

TEST_CASE("a torqueless robot ends its episode and records the reason") {
  Env env(BipedModel::standard(), zero_gait());
  env.reset(standing_config());
  bool done = false;
  int steps = 0;
  while (!done && steps < 600) {
    done = env.step(Vec7::Zero()).done;
    ++steps;
  }
  CHECK(done);
  CHECK(env.done_reason() != DoneReason::none);
  CHECK(env.done_reason() == DoneReason::fall);  // it collapses well before 5 s
}

TEST_CASE("stepping a finished episode or a bad action throws") {
  Env env(BipedModel::standard(), zero_gait());
  EpisodeConfig cfg = standing_config();
  cfg.max_duration = 0.02;
  env.reset(cfg);
  Vec7 bad = Vec7::Zero();
  bad[3] = std::nan("");
  CHECK_THROWS_AS(env.step(bad), std::invalid_argument);
  env.step(Vec7::Zero());
  const auto out = env.step(Vec7::Zero());
  CHECK(out.done);
  CHECK(env.done_reason() == DoneReason::time_limit);
  CHECK_THROWS_AS(env.step(Vec7::Zero()), std::logic_error);
}

TEST_CASE("episodes are bit-deterministic given seed and actions") {
  Rng net_rng(9);
  GaitNetParams gait = GaitNetParams::init(1, 16, nn::Act::tanh, net_rng);
  auto run = [&] {
    Env env(BipedModel::standard(), gait);
    EpisodeConfig cfg = standing_config(42);
    cfg.rsi = true;
    cfg.terrain = TerrainProfile::make_noisy(5.0, 0.5, 11);
    env.enable_trace(true);
    env.reset(cfg);
    Rng rng(5);
    for (int i = 0; i < 100 && env.episode_active(); ++i) {
      Vec7 a;
      for (int j = 0; j < 7; ++j) a[j] = rng_range(rng, -60.0, 60.0);
      env.step(a);
    }
    return env.trace_csv();
  };
  CHECK(run() == run());
}

TEST_CASE("commanded speed tracks the profile at episode time") {
  Env env(BipedModel::standard(), zero_gait());
  EpisodeConfig cfg = standing_config();
  cfg.speed = SpeedProfile{{{0.0, 0.5}, {0.2, 1.5}, {0.4, 0.7}}};
  env.reset(cfg);
  for (int k = 1; k <= 45; ++k) {
    const auto out = env.step(Vec7::Zero());
    const double t = env.episode_time();
    CHECK(out.obs.v[0] == doctest::Approx(cfg.speed.at(t)).epsilon(1e-12));
    if (out.done) break;
  }
}

TEST_CASE("reference preview on a constant cycle is flat") {
  ReferencePlayback p;
  p.cycle.frames.setConstant(0.4);
  p.phase = 0.37;
  const ReferencePreview pre = reference_preview(p);
  CHECK((pre.current - Vec6::Constant(0.4)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(pre.next == pre.current);
  CHECK(pre.lookahead == pre.current);
  CHECK(pre.velocity.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("playback wraps after a full cycle of policy steps") {
  ReferencePlayback p = linear_cycle(0.01);
  p.phase = 0.11;
  const Vec6 before = p.frame_at(p.phase);
  p.advance(320);  // 32 frames at one frame per 100 ms
  CHECK((p.frame_at(p.phase) - before).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("preview offsets are policy steps: +10 spans one frame") {
  const double slope = 0.02;
  ReferencePlayback p = linear_cycle(slope);
  p.phase = 10.0 / kCycleFrames;  // mid-cycle, away from the wrap seam
  const ReferencePreview pre = reference_preview(p);
  CHECK(pre.lookahead[0] - pre.current[0] ==
        doctest::Approx(slope).epsilon(1e-9));  // 10 steps = 1.0 frame
  CHECK(pre.next[0] - pre.current[0] ==
        doctest::Approx(0.1 * slope).epsilon(1e-9));  // 1 step = 0.1 frame
  // central difference of adjacent frames, scaled by the frame rate
  CHECK(pre.velocity[0] == doctest::Approx(slope * kFrameRateHz).epsilon(1e-9));
}

TEST_CASE("ablation flags zero the reference inputs and imitation term") {
  Env env(BipedModel::standard(), zero_gait());
  EpisodeConfig cfg = standing_config();
  cfg.imitation_enabled = false;
  cfg.reference_in_obs = false;
  env.reset(cfg);
  const auto out = env.step(Vec7::Zero());
  CHECK(out.reward.imitation == 0.0);
  CHECK(out.reward.total ==
        doctest::Approx(out.reward.w_gait * out.reward.gait).epsilon(1e-15));
  CHECK(out.obs.v.segment<6>(17).cwiseAbs().maxCoeff() == 0.0);
  CHECK(out.obs.v.segment<6>(49).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("trace csv carries the per-step schema") {
  Env env(BipedModel::standard(), zero_gait());
  env.enable_trace(true);
  env.reset(standing_config());
  env.step(Vec7::Zero());
  const std::string csv = env.trace_csv();
  CHECK(csv.find("t,v_ds,v_com,q0") == 0);
  CHECK(csv.find("done_reason") != std::string::npos);
}
