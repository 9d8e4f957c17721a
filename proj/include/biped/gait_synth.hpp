#pragma once

#include "biped/gait_data.hpp"

namespace biped {

// Parametric harmonic gait generator used as the training corpus source.
// Joint channels are 2-3 harmonics whose amplitudes, offsets and phases vary
// affinely with commanded speed and leg lengths; cadence rises with speed and
// falls with leg length. Foot-strike times sit at a fixed phase of the right
// hip channel, so segmented cycles are phase aligned across the corpus.
struct SynthConfig {
  int trials_per_subject = 6;
  int cycles_per_trial = 6;
  double sample_rate = 100.0;
  double speed_min = 0.2;
  double speed_max = 2.2;
  double leg_min = 0.80;
  double leg_max = 1.05;
};

double synth_cycle_frequency(double speed, const Morphology& morphology);

std::vector<RawTrial> synthesize_dataset(int n_subjects, std::uint64_t seed,
                                         const SynthConfig& cfg = {});

}  // namespace biped
