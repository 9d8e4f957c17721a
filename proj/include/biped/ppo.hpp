#pragma once

#include "biped/env.hpp"
#include "biped/policy.hpp"

#include <functional>
#include <optional>
#include <span>

namespace biped {

// Linear interpolation clamped at both ends.
double schedule(double value_start, double value_end, std::int64_t step,
                std::int64_t total);

// delta_t = r_t + gamma v_{t+1} (1-done_t) - v_t
// A_t = delta_t + gamma lambda (1-done_t) A_{t+1}; returns = A + v.
// Advantages come back raw; the update standardizes them per batch.
void compute_gae(std::span<const double> rewards, std::span<const double> values,
                 std::span<const std::uint8_t> dones, double last_value,
                 double gamma, double lambda, std::span<double> advantages,
                 std::span<double> returns);

// Running observation standardizer (frozen during each collection pass,
// folded into the checkpoint as part of the policy contract).
struct ObsNormalizer {
  Vec mean, var;
  double count = 1e-4;
  explicit ObsNormalizer(int dim = kObsDim)
      : mean(Vec::Zero(dim)), var(Vec::Ones(dim)) {}
  Vec normalize(const Vec& raw) const;
  void update(const Mat& raw_batch);  // columns are observations
};

// On-policy storage; columns are steps. Observations are stored already
// normalized with the collection-time statistics so the update sees exactly
// what the rollout policy saw.
struct RolloutBuffer {
  int obs_dim = 0, act_dim = 0;
  int segment_len = 0;  // steps per worker segment
  int n_segments = 0;
  Mat obs, actions;
  Vec logp, rewards, values, advantages, returns;
  std::vector<std::uint8_t> dones, starts;
  Mat actor_carry, critic_carry;  // carry at step start (recurrent tags)
  std::vector<double> segment_bootstrap;  // value after each segment

  int size() const { return segment_len * n_segments; }
  void allocate(int obs_dim, int act_dim, int segment_len, int n_segments,
                int actor_carry_dim, int critic_carry_dim);
};

struct PpoConfig {
  ArchTag arch = ArchTag::config1_mlp;
  double lr_start = 3e-4, lr_end = 1e-4;            // linear decay
  double entropy_start = 1e-3, entropy_end = 1e-4;  // linear decay
  int minibatch = 256;
  int epochs = 5;
  double clip = 0.15;
  std::int64_t total_steps = 15000000;
  double gamma = 0.99, lambda = 0.95;
  double vf_coef = 0.5, max_grad_norm = 0.5;
  double decay_alpha = 0.0;  // imitation decay
  int workers = 4;
  int n_steps = 8192;  // rollout horizon per worker
  std::uint64_t seed = 0;
  double max_episode_seconds = 20.0;
  double speed_min = 0.0, speed_max = 2.0;  // commanded-speed randomization
  bool rsi = true;
  double filter_beta = 0.3;
  bool imitation_enabled = true;  // off = task-reward-only baseline
  bool reference_in_obs = true;   // off = no reference-state ablation
  int recurrent_seq = 64;         // truncated BPTT window
  double init_log_std = -0.5;
  int checkpoint_every = 0;  // in updates; 0 = final only
  bool parallel = true;

  void validate() const;
  // Laptop-scale profile: shorter horizon, two workers, 300k steps, with the
  // schedules compressed proportionally via total_steps.
  static PpoConfig desk_scale();
};

// Clipped-surrogate loss with value and entropy terms over the given sample
// indices (feedforward) or window start indices (recurrent), and its exact
// gradient over PolicyParams::flatten().
struct PpoLossParts {
  double total = 0.0;
  double policy = 0.0, value = 0.0, entropy = 0.0;
  double clip_fraction = 0.0, approx_kl = 0.0;
};
PpoLossParts ppo_loss_and_grad(const PolicyParams& params,
                               const RolloutBuffer& buffer,
                               std::span<const int> idx, const PpoConfig& cfg,
                               double entropy_coef, Vec& grad_out,
                               bool parallel = true);

struct UpdateDiagnostics {
  double clip_fraction = 0.0, approx_kl = 0.0;
  double policy_loss = 0.0, value_loss = 0.0, entropy = 0.0;
  double lr = 0.0, entropy_coef = 0.0;
};

// One PPO update over the full buffer: epochs x shuffled minibatches,
// gradient-norm clipping, Adam. Advantages must already be standardized.
UpdateDiagnostics ppo_update(const RolloutBuffer& buffer, PolicyParams& params,
                             nn::Adam& adam, Rng& shuffle_rng,
                             const PpoConfig& cfg, std::int64_t step_count);

class UpdateFailure : public std::runtime_error {
 public:
  UpdateFailure(const std::string& what, PolicyParams checkpoint)
      : std::runtime_error(what), last_params(std::move(checkpoint)) {}
  PolicyParams last_params;
};

struct PolicyCheckpoint {
  int version = 1;
  PpoConfig config;
  PolicyParams params;
  ObsNormalizer normalizer;
  nn::Adam adam;
  std::vector<std::string> worker_rng;  // serialized engine states
  std::string trainer_rng;
  std::int64_t global_step = 0;
  int update_index = 0;
  std::uint64_t gait_hash = 0;

  std::string to_json_string() const;
  static PolicyCheckpoint from_json_string(const std::string& text);
  void save(const std::string& path) const;
  static PolicyCheckpoint load(const std::string& path);
};

struct IterStats {
  int update = 0;
  std::int64_t step = 0;
  double mean_return = 0.0, mean_length = 0.0;
  double clip_frac = 0.0, approx_kl = 0.0;
  double lr = 0.0, entropy_coef = 0.0;
  double w_imit = 1.0, w_gait = 1.0;
};

std::string training_log_csv(const std::vector<IterStats>& log);

struct TrainPolicyResult {
  PolicyCheckpoint checkpoint;
  std::vector<IterStats> log;
};

// Full training loop: parallel rollout workers with per-episode terrain and
// speed randomization, GAE, PPO updates, periodic checkpoints. Deterministic
// for a fixed seed independent of thread count. Pass `resume` to continue a
// run bit-compatibly.
TrainPolicyResult train_policy(
    const BipedModel& model, const GaitNetParams& gait, const PpoConfig& cfg,
    const std::function<void(const PolicyCheckpoint&, int)>& checkpoint_sink =
        {},
    const PolicyCheckpoint* resume = nullptr);

}  // namespace biped
