#pragma once

#include "biped/common.hpp"
#include "biped/dynamics.hpp"
#include "biped/terrain.hpp"

#include <cstdint>
#include <string>

namespace biped {

enum class GaitPhase { double_support, right_swing, left_swing, flight };

std::string phase_name(GaitPhase p);

// Linear imitation-to-task weight shift over training:
//   w_imitation(t) = 1 - alpha * t/total,  w_gait(t) = 1 + alpha * t/total
// with t clamped to [0, total]. alpha = 0 keeps both weights at 1.
struct DecaySchedule {
  double alpha = 0.0;  // in [0, 1)
  std::int64_t total_steps = 1;
  void validate() const;
  double imitation_weight(std::int64_t step) const;
  double gait_weight(std::int64_t step) const;
};

struct RewardBreakdown {
  double total = 0.0;
  double imitation = 0.0, hip = 0.0, knee = 0.0, ankle = 0.0;
  double gait = 0.0, alive = 0.0, speed = 0.0, contact = 0.0, torque = 0.0;
  double w_imitation = 1.0, w_gait = 1.0;
  GaitPhase phase = GaitPhase::double_support;
  bool done = false;
};

// Joint vectors are ordered r hip, r knee, r ankle, l hip, l knee, l ankle.
// Hips and knees are tracked strongly, ankles softly, in both position and
// velocity; every subterm peaks at zero error.
struct ImitationTerms {
  double total = 0.0, hip = 0.0, knee = 0.0, ankle = 0.0;
};
ImitationTerms imitation_reward(const Vec6& q, const Vec6& q_ref,
                                const Vec6& qd, const Vec6& qd_ref);

// Phase from the per-foot vertical ground force against a 10 N threshold.
GaitPhase classify_phase(double force_right, double force_left);

// Posture band reward; the -100 termination branch wins whenever its
// condition holds, even where the +-0.5 bands overlap it.
struct AliveResult {
  double reward = 0.0;
  bool done = false;
};
AliveResult alive_reward(double z_com, double q_torso);

// 0.6 * exp(-3 |xd - xd*|); xd is the 10 ms finite-difference CoM speed.
double speed_reward(double xd, double xd_target);

// Contact consistency per phase; sigma is the logistic function. Swing
// clearance is rewarded at 0.15 m above the local terrain height.
double contact_reward(GaitPhase phase, const ContactReport& contacts,
                      const TerrainProfile& terrain);

// Sum of |torque| over the 7 joints, scaled by 1/1000.
double torque_penalty(const Vec7& applied_torques);

struct RewardInputs {
  Vec6 q, q_ref, qd, qd_ref;      // bilateral joints
  ContactReport contacts;
  const TerrainProfile* terrain = nullptr;
  double z_com = 1.0;
  double q_torso = 0.0;
  double com_speed = 0.0;         // finite-difference forward speed
  double commanded_speed = 0.0;
  Vec7 applied_torques = Vec7::Zero();
};

RewardBreakdown total_reward(std::int64_t step_index,
                             const DecaySchedule& schedule,
                             const RewardInputs& in);

std::string reward_log_header();
std::string reward_log_row(double t, const RewardBreakdown& b);

}  // namespace biped
