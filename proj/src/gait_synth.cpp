#include "biped/gait_synth.hpp"

#include <cmath>
#include <stdexcept>

namespace biped {

double synth_cycle_frequency(double speed, const Morphology& morphology) {
  const double mean_leg =
      0.5 * (morphology.leg_length_right + morphology.leg_length_left);
  return (0.55 + 0.38 * speed) * std::sqrt(0.925 / mean_leg);
}

namespace {

struct SideParams {
  double scale;  // mild per-leg amplitude asymmetry
  double phase;  // left side runs half a cycle behind
};

double hip_angle(double phi, double v, double mean_leg, const SideParams& s) {
  const double a = (0.32 + 0.07 * v - 0.18 * (mean_leg - 0.925)) * s.scale;
  const double b = 0.06 + 0.02 * v;
  const double c = 0.05 + 0.02 * v;
  return c + a * std::sin(phi + s.phase) +
         b * std::sin(2.0 * (phi + s.phase) + 0.4 + 0.1 * v);
}

double knee_angle(double phi, double v, double mean_leg, const SideParams& s) {
  const double a = (0.55 + 0.15 * v + 0.10 * (mean_leg - 0.925)) * s.scale;
  const double b = 0.10 + 0.04 * v;
  const double d = -1.2 + 0.05 * v;
  return -0.08 - 0.5 * a * (1.0 + std::sin(phi + s.phase + d)) -
         0.5 * b * (1.0 + std::sin(2.0 * (phi + s.phase) + 0.8));
}

double ankle_angle(double phi, double v, const SideParams& s) {
  const double a = (0.12 + 0.03 * v) * s.scale;
  const double b = 0.05 + 0.02 * v;
  return -0.02 + a * std::sin(phi + s.phase + 1.9) +
         b * std::sin(2.0 * (phi + s.phase) - 0.6);
}

}  // namespace

std::vector<RawTrial> synthesize_dataset(int n_subjects, std::uint64_t seed,
                                         const SynthConfig& cfg) {
  if (n_subjects < 1)
    throw std::invalid_argument("synthesize_dataset: n_subjects >= 1");
  Rng rng(seed);
  std::vector<RawTrial> trials;
  trials.reserve(static_cast<std::size_t>(n_subjects * cfg.trials_per_subject));
  for (int subject = 0; subject < n_subjects; ++subject) {
    Morphology morph;
    morph.leg_length_right = rng_range(rng, cfg.leg_min, cfg.leg_max);
    morph.leg_length_left = rng_range(rng, cfg.leg_min, cfg.leg_max);
    const double mean_leg =
        0.5 * (morph.leg_length_right + morph.leg_length_left);
    const SideParams right{1.0 + 0.3 * (morph.leg_length_right - mean_leg), 0.0};
    const SideParams left{1.0 + 0.3 * (morph.leg_length_left - mean_leg), M_PI};

    for (int t = 0; t < cfg.trials_per_subject; ++t) {
      const double v = rng_range(rng, cfg.speed_min, cfg.speed_max);
      const double phi0 = rng_range(rng, 0.0, 2.0 * M_PI);
      const double f = synth_cycle_frequency(v, morph);
      const double duration = (cfg.cycles_per_trial + 0.5) / f;
      const auto n = static_cast<Eigen::Index>(
          std::lround(duration * cfg.sample_rate));

      RawTrial trial;
      trial.sample_rate = cfg.sample_rate;
      trial.com_speed_label = v;
      trial.morphology = morph;
      trial.samples.resize(n, kJointChannels);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double time = static_cast<double>(i) / cfg.sample_rate;
        const double phi = 2.0 * M_PI * f * time + phi0;
        trial.samples(i, 0) = hip_angle(phi, v, mean_leg, right);
        trial.samples(i, 1) = knee_angle(phi, v, mean_leg, right);
        trial.samples(i, 2) = ankle_angle(phi, v, right);
        trial.samples(i, 3) = hip_angle(phi, v, mean_leg, left);
        trial.samples(i, 4) = knee_angle(phi, v, mean_leg, left);
        trial.samples(i, 5) = ankle_angle(phi, v, left);
      }

      // Right-foot strikes where the right hip phase passes pi/2.
      double strike_phase = std::fmod(0.5 * M_PI - phi0, 2.0 * M_PI);
      if (strike_phase < 0.0) strike_phase += 2.0 * M_PI;
      const double t0 = strike_phase / (2.0 * M_PI * f);
      const double t_end = static_cast<double>(n - 1) / cfg.sample_rate;
      for (double ts = t0; ts <= t_end; ts += 1.0 / f)
        trial.foot_strike_times.push_back(ts);

      trial.validate();
      trials.push_back(std::move(trial));
    }
  }
  return trials;
}

}  // namespace biped
