#pragma once

#include "biped/env.hpp"
#include "biped/ppo.hpp"

#include <functional>
#include <memory>
#include <optional>

namespace biped {

enum class DemoKind { velocity_comparison, rotation, noisy_plane, velocity_tracking };
std::string demo_name(DemoKind k);

struct TrialRecord {
  double commanded_speed = 0.0;
  double ramp_angle_deg = 0.0;
  double omega = 0.0, gamma = 0.0;
  std::uint64_t plane_seed = 0;
  std::uint64_t seed = 0;
  double realized_speed = 0.0;
  int success = 0;
  double range_m = 0.0;
  DoneReason reason = DoneReason::none;
  double episode_s = 0.0;
  int within_band = 0;  // +-10% of commanded speed
  double tracking_mae = 0.0, tracking_peak_lag = 0.0;
};

struct PlaneAggregate {
  std::uint64_t plane_seed = 0;
  double mean_range = 0.0;
  double mean_success = 0.0;
  int trials = 0;
};

struct DemoResult {
  DemoKind kind = DemoKind::velocity_comparison;
  std::vector<TrialRecord> records;
  // aggregates; recompute() derives everything below from `records` alone
  double mse = 0.0;
  double mean_success = 0.0;
  double mean_range = 0.0;
  double mean_tracking_mae = 0.0;
  double peak_tracking_lag = 0.0;
  std::vector<PlaneAggregate> planes;  // noisy demo, never pooled
  std::string tracking_series_tsv;     // first tracking trial, plot-ready

  void recompute();
  std::string records_csv() const;
  std::string plot_tsv() const;
};

// Per-step episode data the metric layer consumes; scripted oracles build
// these directly, the simulator path records them from the environment.
struct EpisodeTrace {
  std::vector<double> t, v_ds, x_com;
  DoneReason reason = DoneReason::none;
  double duration = 0.0;
  double max_duration = 0.0;
};

// Metric semantics, one place for both oracle and simulated trials.
double realized_speed_second_half(const EpisodeTrace& trace);
TrialRecord velocity_record(double commanded, const EpisodeTrace& trace);
TrialRecord rotation_record(double commanded, double angle_deg,
                            const EpisodeTrace& trace);
TrialRecord noisy_record(double commanded, double omega, double gamma,
                         std::uint64_t plane_seed, const EpisodeTrace& trace,
                         double range_success_threshold);
TrialRecord tracking_record(const EpisodeTrace& trace);

struct Controller {
  virtual ~Controller() = default;
  virtual void begin_episode(std::uint64_t seed) { (void)seed; }
  virtual Vec7 act(const Observation& obs) = 0;
};

using ControllerFactory = std::function<std::unique_ptr<Controller>()>;

// Deterministic-mean policy from a checkpoint (recurrent carry reset per
// episode), with the checkpoint's observation normalization baked in.
ControllerFactory policy_controller(const PolicyCheckpoint& checkpoint,
                                    const BipedModel& model);
// Uniform torques in the actuator limits; the standard weak baseline.
ControllerFactory random_torque_controller(const BipedModel& model,
                                           std::uint64_t salt = 0);

EpisodeTrace run_episode(const BipedModel& model, const GaitNetParams& gait,
                         const EpisodeConfig& config, Controller& controller);

struct EvalConfig {
  double episode_seconds = 10.0;
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  std::vector<double> speeds;      // velocity demo; default 0:0.1:2.2
  std::vector<double> angles_deg;  // rotation demo; default -15..15 step 1
  std::vector<double> rotation_speeds;  // default {0.4, 0.8, 1.2}
  std::vector<double> omegas;      // noisy demo; default 1..20
  std::vector<double> gammas = {0.25, 0.5, 1.0, 2.0};
  std::vector<std::uint64_t> plane_seeds = {0, 1};
  double noisy_speed = 1.0;
  double range_success_threshold = 5.0;  // m
  SpeedProfile tracking_profile;  // default ramp up to 2.0 and back down
  bool rsi = true;
  bool parallel = true;

  static EvalConfig defaults();
};

DemoResult run_velocity_comparison(const BipedModel& model,
                                   const GaitNetParams& gait,
                                   const ControllerFactory& make_controller,
                                   const EvalConfig& cfg);
DemoResult run_rotation(const BipedModel& model, const GaitNetParams& gait,
                        const ControllerFactory& make_controller,
                        const EvalConfig& cfg);
DemoResult run_noisy_plane(const BipedModel& model, const GaitNetParams& gait,
                           const ControllerFactory& make_controller,
                           const EvalConfig& cfg);
DemoResult run_velocity_tracking(const BipedModel& model,
                                 const GaitNetParams& gait,
                                 const ControllerFactory& make_controller,
                                 const EvalConfig& cfg);

// Table-style comparison across checkpoints: velocity MSE, rotation success,
// per-plane noisy success and range. Missing demos leave cells absent.
struct ConfigEval {
  std::string name;
  std::optional<DemoResult> velocity, rotation, noisy;
};

struct Table3Report {
  std::vector<ConfigEval> configs;
  std::string to_csv() const;
  std::string to_text() const;  // aligned, best cell per column starred
};

Table3Report compare_configurations(std::vector<ConfigEval> configs);

}  // namespace biped
