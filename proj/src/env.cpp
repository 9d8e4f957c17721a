#include "biped/env.hpp"

#include "biped/json_io.hpp"

#include <cmath>

namespace biped {

const std::vector<ObsField>& observation_layout() {
  static const std::vector<ObsField> layout = {
      {"v_ds", 0, 1},        {"r_angle", 1, 1},      {"v_com", 2, 1},
      {"q_prev", 3, 7},      {"q", 10, 7},           {"q_ref", 17, 6},
      {"q_ref_next", 23, 6}, {"q_ref_preview", 29, 6}, {"a_prev", 35, 7},
      {"qd", 42, 7},         {"qd_ref", 49, 6},
  };
  return layout;
}

double SpeedProfile::at(double t) const {
  if (knots.empty()) throw InvalidData("SpeedProfile: no knots");
  if (t <= knots.front().first) return knots.front().second;
  if (t >= knots.back().first) return knots.back().second;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    const auto& [t0, v0] = knots[i];
    const auto& [t1, v1] = knots[i + 1];
    if (t >= t0 && t <= t1) {
      const double f = t1 > t0 ? (t - t0) / (t1 - t0) : 0.0;
      return v0 + f * (v1 - v0);
    }
  }
  return knots.back().second;
}

void SpeedProfile::validate() const {
  if (knots.empty()) throw InvalidData("SpeedProfile: no knots");
  double prev = -std::numeric_limits<double>::infinity();
  for (const auto& [t, v] : knots) {
    if (t < prev) throw InvalidData("SpeedProfile: knots must be sorted");
    if (!(v >= 0.0 && v <= 2.2))
      throw InvalidData("SpeedProfile: speed outside [0, 2.2]");
    prev = t;
  }
}

Vec6 ReferencePlayback::frame_at(double ph) const {
  double s = ph - std::floor(ph);
  s *= kCycleFrames;
  const int i0 = static_cast<int>(s) % kCycleFrames;
  const int i1 = (i0 + 1) % kCycleFrames;
  const double f = s - std::floor(s);
  Vec6 out;
  for (int j = 0; j < kJointChannels; ++j)
    out[j] = (1.0 - f) * cycle.frames(i0, j) + f * cycle.frames(i1, j);
  return out;
}

Vec6 ReferencePlayback::velocity_at(double ph) const {
  const double dphase = 1.0 / kCycleFrames;  // one frame
  const double frame_dt = 1.0 / kFrameRateHz;
  return (frame_at(ph + dphase) - frame_at(ph - dphase)) / (2.0 * frame_dt);
}

void ReferencePlayback::advance(int policy_steps) {
  phase += policy_steps * kPhasePerPolicyStep;
  phase -= std::floor(phase);
}

ReferencePreview reference_preview(const ReferencePlayback& playback) {
  ReferencePreview p;
  const double d = ReferencePlayback::kPhasePerPolicyStep;
  p.current = playback.frame_at(playback.phase);
  p.next = playback.frame_at(playback.phase + d);
  p.lookahead = playback.frame_at(playback.phase + 10.0 * d);
  p.velocity = playback.velocity_at(playback.phase);
  return p;
}

void EpisodeConfig::validate() const {
  speed.validate();
  terrain.validate();
  if (!(max_duration > 0.0))
    throw InvalidData("EpisodeConfig: max_duration must be > 0");
  if (!(filter_beta > 0.0 && filter_beta <= 1.0))
    throw InvalidData("EpisodeConfig: filter beta in (0, 1]");
}

std::string done_reason_name(DoneReason r) {
  switch (r) {
    case DoneReason::none: return "none";
    case DoneReason::fall: return "fall";
    case DoneReason::time_limit: return "time_limit";
    case DoneReason::blowup: return "blowup";
  }
  return "?";
}

Env::Env(BipedModel model, GaitNetParams gait)
    : model_(std::move(model)), gait_(std::move(gait)) {
  model_.validate();
  gait_.validate();
}

void Env::regenerate_reference(double speed) {
  GaitNetInput in;
  in.desired_speed = std::clamp(speed, 0.0, 2.5);
  in.leg_length_right = model_.leg_length();
  in.leg_length_left = model_.leg_length();
  playback_.cycle = gait_.forward(in);
  reference_speed_ = speed;
}

Observation Env::reset(const EpisodeConfig& config) {
  config.validate();
  config_ = config;
  Rng rng(config.seed);

  const double v0 = config_.speed.at(0.0);
  regenerate_reference(v0);
  playback_.phase = config_.rsi ? rng_uniform(rng) : 0.0;

  const Vec6 frame = playback_.frame_at(playback_.phase);
  const Vec6 vel = playback_.velocity_at(playback_.phase);
  state_ = set_pose_from_reference(model_, frame, vel, 0.0, config_.terrain);
  state_.qd[0] = v0;  // start with the commanded forward momentum
  report_ = contact_forces(model_, state_, config_.terrain);

  filtered_torque_.setZero();
  prev_action_.setZero();
  prev_q_ = state_.actuated_q();
  active_ = true;
  reason_ = DoneReason::none;
  trace_.clear();
  return build_observation();
}

Env::StepOut Env::step(const Vec7& action) {
  if (!active_) throw std::logic_error("Env::step: episode already finished");
  if (!action.allFinite())
    throw std::invalid_argument("Env::step: non-finite action");

  prev_q_ = state_.actuated_q();
  prev_action_ = action;
  filtered_torque_ += config_.filter_beta * (action - filtered_torque_);

  const double x_before = com_state(model_, state_).x;
  bool blew_up = false;
  for (int i = 0; i < kSubsteps && !blew_up; ++i) {
    try {
      auto [next, report] =
          biped::step(model_, state_, filtered_torque_, config_.terrain);
      state_ = next;
      report_ = report;
    } catch (const SimulationBlowup& e) {
      state_ = e.prior_state;
      blew_up = true;
    }
  }

  playback_.advance(1);
  const double v_ds = config_.speed.at(state_.time);
  if (v_ds != reference_speed_) regenerate_reference(v_ds);

  const ComState com_now = com_state(model_, state_);
  const double fd_speed = (com_now.x - x_before) / kPolicyDt;

  Vec7 applied = filtered_torque_;
  for (int j = 0; j < kNumActuated; ++j) {
    const double lim = model_.torque_limit[static_cast<std::size_t>(j)];
    applied[j] = std::clamp(applied[j], -lim, lim);
  }

  RewardInputs in;
  in.q = state_.q.segment<6>(3);
  in.qd = state_.qd.segment<6>(3);
  in.q_ref = playback_.frame_at(playback_.phase);
  in.qd_ref = playback_.velocity_at(playback_.phase);
  in.contacts = report_;
  in.terrain = &config_.terrain;
  in.z_com = com_now.z;
  in.q_torso = state_.q[2];
  in.com_speed = fd_speed;
  in.commanded_speed = v_ds;
  in.applied_torques = applied;

  StepOut out;
  out.reward = total_reward(global_step_, decay_, in);
  if (blew_up || !config_.imitation_enabled) {
    if (blew_up) {
      out.reward.alive = -100.0;
      out.reward.done = true;
    }
    if (!config_.imitation_enabled) {
      out.reward.imitation = out.reward.hip = out.reward.knee =
          out.reward.ankle = 0.0;
    }
    out.reward.gait = out.reward.alive + out.reward.contact + out.reward.speed -
                      out.reward.torque;
    out.reward.total = out.reward.w_imitation * out.reward.imitation +
                       out.reward.w_gait * out.reward.gait;
  }

  if (blew_up) {
    reason_ = DoneReason::blowup;
  } else if (out.reward.done) {
    reason_ = DoneReason::fall;
  } else if (state_.time >= config_.max_duration - 1e-9) {
    reason_ = DoneReason::time_limit;
  }
  out.done = reason_ != DoneReason::none;
  if (out.done) active_ = false;
  out.obs = build_observation();

  if (trace_enabled_) {
    TraceRow row;
    row.t = state_.time;
    row.v_ds = v_ds;
    row.v_com = fd_speed;
    row.r_total = out.reward.total;
    row.q = state_.actuated_q();
    row.a = action;
    row.phase = out.reward.phase;
    row.reason = reason_;
    trace_.push_back(row);
  }
  return out;
}

Observation Env::build_observation() const {
  Observation obs;
  auto& v = obs.v;
  v[0] = config_.speed.at(state_.time);
  v[1] = config_.terrain.nominal_angle();
  v[2] = com_state(model_, state_).xd;
  v.segment<7>(3) = prev_q_;
  v.segment<7>(10) = state_.actuated_q();
  const ReferencePreview p = reference_preview(playback_);
  v.segment<6>(17) = p.current;
  v.segment<6>(23) = p.next;
  v.segment<6>(29) = p.lookahead;
  v.segment<7>(35) = prev_action_;
  v.segment<7>(42) = state_.actuated_qd();
  v.segment<6>(49) = p.velocity;
  if (!config_.reference_in_obs) {
    v.segment<6>(17).setZero();
    v.segment<6>(23).setZero();
    v.segment<6>(29).setZero();
    v.segment<6>(49).setZero();
  }
  return obs;
}

namespace {

Json terrain_to_json(const TerrainProfile& t) {
  Json j;
  j["kind"] = t.kind == TerrainKind::flat
                  ? "flat"
                  : (t.kind == TerrainKind::ramp ? "ramp" : "noisy");
  j["ramp_angle"] = t.ramp_angle;
  j["omega"] = t.noise_amplitude_cm;
  j["gamma"] = t.noise_resolution_m;
  j["seed"] = t.seed;
  j["start_x"] = t.start_x;
  return j;
}

TerrainProfile terrain_from_json(const Json& j) {
  TerrainProfile t;
  const std::string kind = j.at("kind");
  t.kind = kind == "flat" ? TerrainKind::flat
                          : (kind == "ramp" ? TerrainKind::ramp
                                            : TerrainKind::noisy);
  t.ramp_angle = j.at("ramp_angle");
  t.noise_amplitude_cm = j.at("omega");
  t.noise_resolution_m = j.at("gamma");
  t.seed = j.at("seed");
  t.start_x = j.at("start_x");
  return t;
}

}  // namespace

std::string Env::snapshot_json() const {
  Json j;
  Json knots = Json::array();
  for (const auto& [t, v] : config_.speed.knots) knots.push_back({t, v});
  j["speed_knots"] = std::move(knots);
  j["terrain"] = terrain_to_json(config_.terrain);
  j["max_duration"] = config_.max_duration;
  j["rsi"] = config_.rsi;
  j["seed"] = config_.seed;
  j["filter_beta"] = config_.filter_beta;
  j["imitation_enabled"] = config_.imitation_enabled;
  j["reference_in_obs"] = config_.reference_in_obs;
  j["decay_alpha"] = decay_.alpha;
  j["decay_total"] = decay_.total_steps;
  j["global_step"] = global_step_;
  j["q"] = json_from_vec(state_.q);
  j["qd"] = json_from_vec(state_.qd);
  j["time"] = state_.time;
  Json anchors = Json::array();
  for (double a : state_.contact_anchor)
    anchors.push_back(std::isnan(a) ? Json() : Json(a));
  j["anchors"] = std::move(anchors);
  j["phase"] = playback_.phase;
  j["reference_speed"] = reference_speed_;
  j["filtered_torque"] = json_from_vec(filtered_torque_);
  j["prev_q"] = json_from_vec(prev_q_);
  j["prev_action"] = json_from_vec(prev_action_);
  j["active"] = active_;
  j["reason"] = static_cast<int>(reason_);
  return j.dump();
}

void Env::restore_json(const std::string& text) {
  Json j = Json::parse(text);
  config_.speed.knots.clear();
  for (const auto& k : j.at("speed_knots"))
    config_.speed.knots.emplace_back(k[0].get<double>(), k[1].get<double>());
  config_.terrain = terrain_from_json(j.at("terrain"));
  config_.max_duration = j.at("max_duration");
  config_.rsi = j.at("rsi");
  config_.seed = j.at("seed");
  config_.filter_beta = j.at("filter_beta");
  config_.imitation_enabled = j.at("imitation_enabled");
  config_.reference_in_obs = j.at("reference_in_obs");
  decay_.alpha = j.at("decay_alpha");
  decay_.total_steps = j.at("decay_total");
  global_step_ = j.at("global_step");
  state_.q = Vec9(vec_from_json(j.at("q")));
  state_.qd = Vec9(vec_from_json(j.at("qd")));
  state_.time = j.at("time");
  const auto& anchors = j.at("anchors");
  for (std::size_t i = 0; i < state_.contact_anchor.size(); ++i)
    state_.contact_anchor[i] =
        anchors[i].is_null() ? std::numeric_limits<double>::quiet_NaN()
                             : anchors[i].get<double>();
  regenerate_reference(j.at("reference_speed").get<double>());
  playback_.phase = j.at("phase");
  filtered_torque_ = Vec7(vec_from_json(j.at("filtered_torque")));
  prev_q_ = Vec7(vec_from_json(j.at("prev_q")));
  prev_action_ = Vec7(vec_from_json(j.at("prev_action")));
  active_ = j.at("active");
  reason_ = static_cast<DoneReason>(j.at("reason").get<int>());
  report_ = contact_forces(model_, state_, config_.terrain);
}

std::string Env::trace_csv() const {
  std::string out = "t,v_ds,v_com";
  for (int i = 0; i < 7; ++i) out += ",q" + std::to_string(i);
  for (int i = 0; i < 7; ++i) out += ",a" + std::to_string(i);
  out += ",r_total,phase,done_reason\n";
  for (const TraceRow& r : trace_) {
    out += format_double(r.t) + ',' + format_double(r.v_ds) + ',' +
           format_double(r.v_com);
    for (int i = 0; i < 7; ++i) out += ',' + format_double(r.q[i]);
    for (int i = 0; i < 7; ++i) out += ',' + format_double(r.a[i]);
    out += ',' + format_double(r.r_total) + ',' + phase_name(r.phase) + ',' +
           done_reason_name(r.reason) + '\n';
  }
  return out;
}

}  // namespace biped
