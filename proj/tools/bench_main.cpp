// Micro-benchmarks comparing the serial reference paths with their OpenMP
// counterparts. The chunked kernels are bit-identical either way, so this is
// purely a throughput comparison.

#include "biped/dynamics.hpp"
#include "biped/env.hpp"
#include "biped/gait_net.hpp"
#include "biped/gait_synth.hpp"
#include "biped/ppo.hpp"

#include <chrono>
#include <cstdio>

using namespace biped;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(const char* name, double serial_s, double parallel_s, double unit,
            const char* unit_name) {
  std::printf("%-34s %10.2f %s   serial %.3f s, omp %.3f s, speedup %.2fx\n",
              name, unit / parallel_s, unit_name, serial_s, parallel_s,
              serial_s / parallel_s);
}

void bench_gait_gradient() {
  Rng rng(1);
  GaitNetParams params = GaitNetParams::init(2, 512, nn::Act::relu, rng);
  std::vector<GaitSample> batch(256);
  for (auto& s : batch) {
    s.x = Vec::NullaryExpr(3, [&](Eigen::Index) { return rng_range(rng, 0.0, 2.0); });
    s.target = Vec::NullaryExpr(192, [&](Eigen::Index) { return rng_range(rng, -1.0, 1.0); });
  }
  const int reps = 20;
  auto t0 = Clock::now();
  for (int r = 0; r < reps; ++r) loss_and_gradient(params, batch, false);
  const double serial = seconds_since(t0);
  t0 = Clock::now();
  for (int r = 0; r < reps; ++r) loss_and_gradient(params, batch, true);
  const double parallel = seconds_since(t0);
  const auto a = loss_and_gradient(params, batch, false);
  const auto b = loss_and_gradient(params, batch, true);
  std::printf("gait gradient bit-identical: %s\n",
              a.first == b.first && a.second.flatten() == b.second.flatten()
                  ? "yes"
                  : "NO");
  report("gait-net batch gradient (256)", serial, parallel, reps, "grad/s");
}

void bench_physics() {
  const BipedModel model = BipedModel::standard();
  const TerrainProfile flat = TerrainProfile::make_flat();
  BipedState s =
      set_pose_from_reference(model, Vec6::Zero(), Vec6::Zero(), 0.0, flat);
  const int steps = 20000;
  auto t0 = Clock::now();
  for (int i = 0; i < steps; ++i)
    s = step(model, s, Vec7::Constant(5.0), flat).first;
  const double secs = seconds_since(t0);
  std::printf("%-34s %10.0f steps/s (%.1f us/step)\n", "physics step (1 kHz)",
              steps / secs, 1e6 * secs / steps);
}

void bench_rollout() {
  Rng rng(2);
  GaitNetParams gait = GaitNetParams::init(1, 8, nn::Act::relu, rng);
  gait.net.setZero();
  PolicyParams policy =
      PolicyParams::init(ArchTag::config1_mlp, kObsDim, kNumActuated, rng);
  const BipedModel model = BipedModel::standard();
  const int steps_per_worker = 1500;

  auto collect = [&](int workers, bool parallel) {
#pragma omp parallel for schedule(static, 1) if (parallel)
    for (int w = 0; w < workers; ++w) {
      Env env(model, gait);
      Rng wrng(100 + static_cast<std::uint64_t>(w));
      EpisodeConfig ep;
      ep.seed = wrng();
      Observation obs = env.reset(ep);
      Vec carry;
      for (int k = 0; k < steps_per_worker; ++k) {
        if (!env.episode_active()) {
          ep.seed = wrng();
          obs = env.reset(ep);
        }
        const Vec mean = policy.actor.mean(obs.v, carry);
        Vec7 torque;
        for (int j = 0; j < kNumActuated; ++j)
          torque[j] = 150.0 * std::tanh(mean[j] + 0.3 * rng_normal(wrng));
        obs = env.step(torque).obs;
      }
    }
  };

  auto t0 = Clock::now();
  collect(2, false);
  const double serial = seconds_since(t0);
  t0 = Clock::now();
  collect(2, true);
  const double parallel = seconds_since(t0);
  report("rollout collection (2 workers)", serial, parallel,
         2.0 * steps_per_worker, "env steps/s");
}

void bench_ppo_minibatch() {
  Rng rng(3);
  PolicyParams params =
      PolicyParams::init(ArchTag::config1_mlp, kObsDim, kNumActuated, rng);
  RolloutBuffer buf;
  buf.allocate(kObsDim, kNumActuated, 256, 1, 0, 0);
  for (int i = 0; i < buf.size(); ++i) {
    for (int j = 0; j < buf.obs_dim; ++j) buf.obs(j, i) = rng_range(rng, -1, 1);
    for (int j = 0; j < buf.act_dim; ++j)
      buf.actions(j, i) = rng_range(rng, -1, 1);
    buf.logp[i] = rng_range(rng, -8.0, -6.0);
    buf.advantages[i] = rng_range(rng, -2.0, 2.0);
    buf.returns[i] = rng_range(rng, -1.0, 1.0);
  }
  std::vector<int> idx(256);
  std::iota(idx.begin(), idx.end(), 0);
  PpoConfig cfg;
  Vec grad;
  const int reps = 40;
  auto t0 = Clock::now();
  for (int r = 0; r < reps; ++r)
    ppo_loss_and_grad(params, buf, idx, cfg, 1e-3, grad, false);
  const double serial = seconds_since(t0);
  t0 = Clock::now();
  for (int r = 0; r < reps; ++r)
    ppo_loss_and_grad(params, buf, idx, cfg, 1e-3, grad, true);
  const double parallel = seconds_since(t0);
  Vec g1, g2;
  ppo_loss_and_grad(params, buf, idx, cfg, 1e-3, g1, false);
  ppo_loss_and_grad(params, buf, idx, cfg, 1e-3, g2, true);
  std::printf("ppo gradient bit-identical: %s\n", g1 == g2 ? "yes" : "NO");
  report("ppo minibatch gradient (256)", serial, parallel, reps, "grad/s");
}

}  // namespace

int main() {
  std::printf("threads available: %d\n\n", par::max_threads());
  bench_physics();
  bench_gait_gradient();
  bench_ppo_minibatch();
  bench_rollout();
  return 0;
}
