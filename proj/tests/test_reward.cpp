#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "biped/reward.hpp"
#include "reward_oracle.hpp"

#include <cmath>

using namespace biped;

namespace {

ContactReport both_feet(double fr, double fl, int cr, int cl) {
  ContactReport r;
  r.right.vertical_force = fr;
  r.left.vertical_force = fl;
  r.right.active_count = cr;
  r.left.active_count = cl;
  return r;
}

}  // namespace

TEST_CASE("imitation reward at zero error hits the coefficient sums") {
  const Vec6 z = Vec6::Zero();
  const ImitationTerms r = imitation_reward(z, z, z, z);
  CHECK(r.hip == 0.75 + 0.15);
  CHECK(r.knee == 0.75 + 0.15);
  CHECK(r.ankle == 0.25 + 0.05);
  CHECK(r.total == (0.75 + 0.15) + (0.75 + 0.15) + (0.25 + 0.05));
  CHECK(r.total == doctest::Approx(2.10).epsilon(1e-15));
}

TEST_CASE("a 0.2 rad right-hip error matches the closed form") {
  Vec6 q = Vec6::Zero(), z = Vec6::Zero();
  q[0] = 0.2;
  const ImitationTerms r = imitation_reward(q, z, z, z);
  CHECK(r.hip == doctest::Approx(0.75 * std::exp(-1.0) + 0.15).epsilon(1e-15));
}

TEST_CASE("imitation decays to zero with huge errors") {
  Vec6 q = Vec6::Constant(50.0), z = Vec6::Zero();
  Vec6 qd = Vec6::Constant(500.0);
  const ImitationTerms r = imitation_reward(q, z, qd, z);
  CHECK(r.total > 0.0);
  CHECK(r.total < 1e-10);
}

TEST_CASE("imitation strictly decreases in each error magnitude") {
  for (int idx = 0; idx < 6; ++idx) {
    double prev = 2.2;
    for (double e : {0.0, 0.05, 0.2, 0.6, 1.4}) {
      Vec6 q = Vec6::Zero(), z = Vec6::Zero();
      q[idx] = e;
      const double r = imitation_reward(q, z, z, z).total;
      if (e > 0.0) CHECK(r < prev);
      prev = r;
    }
  }
}

TEST_CASE("phase truth table around the 10 N threshold") {
  CHECK(classify_phase(50.0, 50.0) == GaitPhase::double_support);
  CHECK(classify_phase(0.0, 400.0) == GaitPhase::right_swing);
  CHECK(classify_phase(400.0, 0.0) == GaitPhase::left_swing);
  CHECK(classify_phase(9.99, 9.99) == GaitPhase::flight);
  CHECK(classify_phase(10.0, 10.0) == GaitPhase::double_support);
  CHECK(classify_phase(9.999999, 10.0) == GaitPhase::right_swing);
  CHECK(classify_phase(10.0, 9.999999) == GaitPhase::left_swing);
}

TEST_CASE("alive bands and termination precedence") {
  CHECK(alive_reward(1.00, 0.0).reward == 0.5);
  CHECK(alive_reward(1.00, 0.0).done == false);
  CHECK(alive_reward(0.80, 0.0).reward == -0.5);
  CHECK(alive_reward(0.80, 0.0).done == false);
  CHECK(alive_reward(1.00, 1.0).reward == -100.0);
  CHECK(alive_reward(1.00, 1.0).done == true);
  // z > 1.25 sits in both the -0.5 band and the termination branch
  CHECK(alive_reward(1.30, 0.0).reward == -100.0);
  CHECK(alive_reward(1.30, 0.0).done == true);
  CHECK(alive_reward(0.95, 0.0).reward == 0.5);
  CHECK(alive_reward(0.75, 0.0).reward == -0.5);
  CHECK(alive_reward(0.7499, 0.0).done == true);
}

TEST_CASE("speed reward values") {
  CHECK(speed_reward(1.3, 1.3) == 0.6);
  CHECK(speed_reward(2.0, 1.0) == doctest::Approx(0.6 * std::exp(-3.0)).epsilon(1e-15));
  CHECK(speed_reward(100.0, 0.0) < 1e-10);
  CHECK(speed_reward(100.0, 0.0) > 0.0);
}

TEST_CASE("contact reward branches") {
  const TerrainProfile flat = TerrainProfile::make_flat();
  CHECK(contact_reward(GaitPhase::double_support, both_feet(50, 50, 2, 2), flat) == 0.5);
  ContactReport swing = both_feet(0, 300, 0, 4);
  swing.right.reference_position = Vec2(0.3, 0.15);
  const double expect = 0.5 * 0.5 + 0.5 / (1.0 + std::exp(-4.0));
  CHECK(contact_reward(GaitPhase::right_swing, swing, flat) ==
        doctest::Approx(expect).epsilon(1e-15));
  CHECK(contact_reward(GaitPhase::flight, both_feet(0, 0, 0, 0), flat) == 0.0);
}

TEST_CASE("torque penalty") {
  CHECK(torque_penalty(Vec7::Zero()) == 0.0);
  CHECK(torque_penalty(Vec7::Constant(100.0)) == doctest::Approx(0.7).epsilon(1e-15));
  Vec7 t;
  t << 10, -20, 30, -40, 50, -60, 70;
  CHECK(torque_penalty(t) == torque_penalty(-t));
}

TEST_CASE("decay schedule weights") {
  DecaySchedule s{0.5, 1000};
  CHECK(s.imitation_weight(1000) == 0.5);
  CHECK(s.gait_weight(1000) == 1.5);
  CHECK(s.imitation_weight(2000) == 0.5);  // clamped past total
  DecaySchedule zero{0.0, 1000};
  CHECK(zero.imitation_weight(123) == 1.0);
  CHECK(zero.gait_weight(123) == 1.0);
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    DecaySchedule r{rng_range(rng, 0.0, 0.999), 1 + rng_below(rng, 100000)};
    const auto t = rng_below(rng, 200000);
    CHECK(std::abs(r.imitation_weight(t) + r.gait_weight(t) - 2.0) < 1e-12);
  }
}

TEST_CASE("ideal step scores 3.70 with fixed weights") {
  const TerrainProfile flat = TerrainProfile::make_flat();
  RewardInputs in;
  in.q = in.q_ref = Vec6::Zero();
  in.qd = in.qd_ref = Vec6::Zero();
  in.contacts = both_feet(400, 385, 2, 2);
  in.terrain = &flat;
  in.z_com = 1.0;
  in.q_torso = 0.0;
  in.com_speed = in.commanded_speed = 1.2;
  in.applied_torques = Vec7::Zero();
  const RewardBreakdown b = total_reward(0, DecaySchedule{0.0, 1}, in);
  CHECK(b.total == doctest::Approx(3.70).epsilon(1e-12));
  CHECK(b.phase == GaitPhase::double_support);
  CHECK(b.done == false);
  CHECK(b.w_imitation == 1.0);
  CHECK(b.w_gait == 1.0);
}

TEST_CASE("bounds hold on random inputs") {
  const TerrainProfile terrain = TerrainProfile::make_noisy(10.0, 0.5, 3);
  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    const RewardInputs in = reward_oracle::random_inputs(rng, terrain);
    const RewardBreakdown b = total_reward(100, DecaySchedule{0.3, 1000}, in);
    CHECK(b.imitation > 0.0);
    CHECK(b.imitation <= 2.1 + 1e-12);
    CHECK(b.speed > 0.0);
    CHECK(b.speed <= 0.6);
    CHECK(b.contact >= 0.0);
    CHECK(b.contact <= 1.0);
    CHECK(b.torque >= 0.0);
    CHECK(std::abs(b.total - (b.w_imitation * b.imitation + b.w_gait * b.gait)) <
          1e-12);
  }
}

TEST_CASE("implementation matches the independent transcription") {
  const TerrainProfile noisy = TerrainProfile::make_noisy(12.0, 0.5, 11);
  const TerrainProfile flat = TerrainProfile::make_flat();
  Rng rng(99);
  for (int i = 0; i < 20000; ++i) {
    const TerrainProfile& terrain = (i % 2 == 0) ? noisy : flat;
    const RewardInputs in = reward_oracle::random_inputs(rng, terrain);
    const auto step = rng_below(rng, 2000);
    const double alpha = rng_range(rng, 0.0, 0.99);
    const RewardBreakdown b = total_reward(step, DecaySchedule{alpha, 1000}, in);
    const reward_oracle::Out o = reward_oracle::eval(step, alpha, 1000, in);
    CHECK(std::abs(b.total - o.total) <= 1e-12);
    CHECK(std::abs(b.imitation - o.imitation) <= 1e-12);
    CHECK(std::abs(b.gait - o.gait) <= 1e-12);
    CHECK(std::abs(b.alive - o.alive) <= 1e-12);
    CHECK(std::abs(b.speed - o.speed) <= 1e-12);
    CHECK(std::abs(b.contact - o.contact) <= 1e-12);
    CHECK(std::abs(b.torque - o.torque) <= 1e-12);
    CHECK(static_cast<int>(b.phase) == o.phase);
    CHECK(b.done == o.done);
  }
}

TEST_CASE("reward log format") {
  CHECK(reward_log_header().find("t,r_total,r_imitation") == 0);
  RewardBreakdown b;
  const std::string row = reward_log_row(0.01, b);
  CHECK(row.find("double_support,0\n") != std::string::npos);
}
