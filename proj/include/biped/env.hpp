#pragma once

#include "biped/dynamics.hpp"
#include "biped/gait_net.hpp"
#include "biped/reward.hpp"
#include "biped/terrain.hpp"

#include <optional>
#include <string>
#include <vector>

namespace biped {

inline constexpr int kObsDim = 55;
inline constexpr double kPolicyDt = 0.01;   // 100 Hz policy
inline constexpr int kSubsteps = 10;        // 1 kHz physics
inline constexpr double kFrameRateHz = 10.0;  // reference frames per second

// Layout of the 55-D observation, in order:
//   v_ds 1 | r_angle 1 | v_com 1 | q_{t-1} 7 | q_t 7 | qhat_t 6 |
//   qhat_{t+1} 6 | qhat_{t+10} 6 | a_{t-1} 7 | qd_t 7 | qdhat_t 6
// 7-vectors are (torso pitch, r hip, r knee, r ankle, l hip, l knee,
// l ankle); 6-D references exclude the torso.
struct ObsField {
  const char* name;
  int offset;
  int size;
};
const std::vector<ObsField>& observation_layout();

struct Observation {
  Eigen::Matrix<double, kObsDim, 1> v = Eigen::Matrix<double, kObsDim, 1>::Zero();
};

// Piecewise-linear commanded-speed profile, clamped at both ends.
struct SpeedProfile {
  std::vector<std::pair<double, double>> knots;  // (time s, speed m/s)
  static SpeedProfile constant(double v) { return {{{0.0, v}}}; }
  double at(double t) const;
  void validate() const;
};

// 32-frame reference cycle played back at 10 Hz with linear interpolation
// and periodic wraparound; one full cycle spans 3.2 s.
struct ReferencePlayback {
  GaitCycle cycle;
  double phase = 0.0;  // [0, 1)

  static constexpr double kPhasePerPolicyStep =
      kPolicyDt * kFrameRateHz / kCycleFrames;

  Vec6 frame_at(double ph) const;
  Vec6 velocity_at(double ph) const;  // central difference of frames
  void advance(int policy_steps = 1);
};

// Interpolated references at the current phase and +1 / +10 policy steps
// ahead (0.1 and 1.0 reference frames), plus the reference joint velocity.
struct ReferencePreview {
  Vec6 current, next, lookahead, velocity;
};
ReferencePreview reference_preview(const ReferencePlayback& playback);

struct EpisodeConfig {
  SpeedProfile speed = SpeedProfile::constant(1.0);
  TerrainProfile terrain;
  double max_duration = 20.0;  // s
  bool rsi = true;
  std::uint64_t seed = 0;
  double filter_beta = 0.3;  // first-order action filter per policy step
  bool imitation_enabled = true;   // ablation: drop the imitation term
  bool reference_in_obs = true;    // ablation: zero the reference entries
  void validate() const;
};

enum class DoneReason { none, fall, time_limit, blowup };
std::string done_reason_name(DoneReason r);

class Env {
 public:
  Env(BipedModel model, GaitNetParams gait);

  Observation reset(const EpisodeConfig& config);

  struct StepOut {
    Observation obs;
    RewardBreakdown reward;
    bool done = false;
    DoneReason reason = DoneReason::none;
  };
  StepOut step(const Vec7& action);

  // Imitation decay needs the trainer's global step; demos leave it at 0
  // with a fixed schedule.
  void set_decay(const DecaySchedule& schedule) { decay_ = schedule; }
  void set_global_step(std::int64_t step) { global_step_ = step; }

  bool episode_active() const { return active_; }
  double episode_time() const { return state_.time; }
  double commanded_speed() const { return config_.speed.at(state_.time); }
  const BipedState& state() const { return state_; }
  const BipedModel& model() const { return model_; }
  const Vec7& filtered_torque() const { return filtered_torque_; }
  double playback_phase() const { return playback_.phase; }
  const ReferencePlayback& playback() const { return playback_; }
  ComState com() const { return com_state(model_, state_); }
  DoneReason done_reason() const { return reason_; }

  void enable_trace(bool on) { trace_enabled_ = on; trace_.clear(); }
  std::string trace_csv() const;

  // Rebuilds the current observation from state; equals the one returned by
  // the last reset/step call.
  Observation observation() const { return build_observation(); }

  // Full mid-episode snapshot (pose, playback, filter, histories) so a
  // training run can resume bit-compatibly. The reference cycle itself is
  // regenerated from the gait net on restore.
  std::string snapshot_json() const;
  void restore_json(const std::string& text);

 private:
  Observation build_observation() const;
  void regenerate_reference(double speed);

  BipedModel model_;
  GaitNetParams gait_;
  EpisodeConfig config_;
  DecaySchedule decay_;
  std::int64_t global_step_ = 0;

  BipedState state_;
  ReferencePlayback playback_;
  double reference_speed_ = -1.0;
  ContactReport report_;
  Vec7 filtered_torque_ = Vec7::Zero();
  Vec7 prev_q_ = Vec7::Zero();
  Vec7 prev_action_ = Vec7::Zero();
  bool active_ = false;
  DoneReason reason_ = DoneReason::none;

  bool trace_enabled_ = false;
  struct TraceRow {
    double t, v_ds, v_com, r_total;
    Vec7 q, a;
    GaitPhase phase;
    DoneReason reason;
  };
  std::vector<TraceRow> trace_;
};

}  // namespace biped
