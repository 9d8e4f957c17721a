#include "biped/reward.hpp"

#include <cmath>

namespace biped {

std::string phase_name(GaitPhase p) {
  switch (p) {
    case GaitPhase::double_support: return "double_support";
    case GaitPhase::right_swing: return "right_swing";
    case GaitPhase::left_swing: return "left_swing";
    case GaitPhase::flight: return "flight";
  }
  return "?";
}

void DecaySchedule::validate() const {
  if (!(alpha >= 0.0 && alpha < 1.0))
    throw InvalidData("DecaySchedule: alpha must lie in [0, 1)");
  if (total_steps < 1) throw InvalidData("DecaySchedule: total_steps >= 1");
}

namespace {

double clamped_progress(std::int64_t step, std::int64_t total) {
  if (step <= 0) return 0.0;
  if (step >= total) return 1.0;
  return static_cast<double>(step) / static_cast<double>(total);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double pair_norm(double a, double b) { return std::sqrt(a * a + b * b); }

}  // namespace

double DecaySchedule::imitation_weight(std::int64_t step) const {
  return 1.0 - alpha * clamped_progress(step, total_steps);
}

double DecaySchedule::gait_weight(std::int64_t step) const {
  return 1.0 + alpha * clamped_progress(step, total_steps);
}

ImitationTerms imitation_reward(const Vec6& q, const Vec6& q_ref,
                                const Vec6& qd, const Vec6& qd_ref) {
  const Vec6 dq = q - q_ref;
  const Vec6 dqd = qd - qd_ref;
  ImitationTerms r;
  r.hip = 0.75 * std::exp(-5.0 * pair_norm(dq[0], dq[3])) +
          0.15 * std::exp(-0.2 * pair_norm(dqd[0], dqd[3]));
  r.knee = 0.75 * std::exp(-5.0 * pair_norm(dq[1], dq[4])) +
           0.15 * std::exp(-0.2 * pair_norm(dqd[1], dqd[4]));
  r.ankle = 0.25 * std::exp(-5.0 * pair_norm(dq[2], dq[5])) +
            0.05 * std::exp(-0.2 * pair_norm(dqd[2], dqd[5]));
  r.total = r.hip + r.knee + r.ankle;
  return r;
}

GaitPhase classify_phase(double force_right, double force_left) {
  const bool right = force_right >= 10.0;
  const bool left = force_left >= 10.0;
  if (right && left) return GaitPhase::double_support;
  if (!right && left) return GaitPhase::right_swing;
  if (right && !left) return GaitPhase::left_swing;
  return GaitPhase::flight;
}

AliveResult alive_reward(double z_com, double q_torso) {
  AliveResult r;
  if (std::abs(q_torso) > 0.9 || z_com > 1.25 || z_com < 0.75) {
    r.reward = -100.0;
    r.done = true;
  } else if (z_com >= 0.95 && z_com <= 1.25) {
    r.reward = 0.5;
  } else {
    r.reward = -0.5;  // [0.75, 0.95)
  }
  return r;
}

double speed_reward(double xd, double xd_target) {
  return 0.6 * std::exp(-3.0 * std::abs(xd - xd_target));
}

double contact_reward(GaitPhase phase, const ContactReport& contacts,
                      const TerrainProfile& terrain) {
  const double c_l = contacts.left.active_count;
  const double c_r = contacts.right.active_count;
  switch (phase) {
    case GaitPhase::double_support:
      return sigmoid(2.0 * ((c_l + c_r) - 4.0));
    case GaitPhase::right_swing: {
      const Vec2& p = contacts.right.reference_position;
      const double clearance = p[1] - terrain.height_at(p[0]);
      return 0.5 * sigmoid(-20.0 * std::abs(clearance - 0.15)) +
             0.5 * sigmoid(2.0 * (c_l - 2.0));
    }
    case GaitPhase::left_swing: {
      const Vec2& p = contacts.left.reference_position;
      const double clearance = p[1] - terrain.height_at(p[0]);
      return 0.5 * sigmoid(-20.0 * std::abs(clearance - 0.15)) +
             0.5 * sigmoid(2.0 * (c_r - 2.0));
    }
    case GaitPhase::flight:
      return 0.0;
  }
  return 0.0;
}

double torque_penalty(const Vec7& applied_torques) {
  return applied_torques.cwiseAbs().sum() / 1000.0;
}

RewardBreakdown total_reward(std::int64_t step_index,
                             const DecaySchedule& schedule,
                             const RewardInputs& in) {
  if (step_index < 0) throw InvalidData("total_reward: step_index >= 0");
  schedule.validate();
  RewardBreakdown b;
  const ImitationTerms imit =
      imitation_reward(in.q, in.q_ref, in.qd, in.qd_ref);
  b.imitation = imit.total;
  b.hip = imit.hip;
  b.knee = imit.knee;
  b.ankle = imit.ankle;

  b.phase = classify_phase(in.contacts.right.vertical_force,
                           in.contacts.left.vertical_force);
  const AliveResult alive = alive_reward(in.z_com, in.q_torso);
  b.alive = alive.reward;
  b.done = alive.done;
  b.speed = speed_reward(in.com_speed, in.commanded_speed);
  b.contact = contact_reward(b.phase, in.contacts, *in.terrain);
  b.torque = torque_penalty(in.applied_torques);
  b.gait = b.alive + b.contact + b.speed - b.torque;

  b.w_imitation = schedule.imitation_weight(step_index);
  b.w_gait = schedule.gait_weight(step_index);
  b.total = b.w_imitation * b.imitation + b.w_gait * b.gait;
  return b;
}

std::string reward_log_header() {
  return "t,r_total,r_imitation,r_hip,r_knee,r_ankle,r_gait,r_alive,r_speed,"
         "r_contact,r_torque,w_imitation,w_gait,phase,done\n";
}

std::string reward_log_row(double t, const RewardBreakdown& b) {
  std::string out = format_double(t);
  for (double v : {b.total, b.imitation, b.hip, b.knee, b.ankle, b.gait,
                   b.alive, b.speed, b.contact, b.torque, b.w_imitation,
                   b.w_gait})
    out += ',' + format_double(v);
  out += ',' + phase_name(b.phase);
  out += b.done ? ",1\n" : ",0\n";
  return out;
}

}  // namespace biped
