#pragma once

#include "biped/common.hpp"

#include <string>

namespace biped {

enum class TerrainKind { flat, ramp, noisy };

// Planar height profile. Ramps rise (or fall) past start_x with a flat
// lead-in; noisy planes are piecewise-constant cells of width gamma whose
// heights are drawn uniformly from [0, omega] cm by a counter-based hash of
// (seed, cell), so queries are pure and reproducible.
struct TerrainProfile {
  TerrainKind kind = TerrainKind::flat;
  double ramp_angle = 0.0;          // rad
  double noise_amplitude_cm = 0.0;  // omega
  double noise_resolution_m = 1.0;  // gamma
  std::uint64_t seed = 0;
  double start_x = 1.0;  // where the non-flat profile begins

  double height_at(double x) const;
  // Ramp pitch exposed to the policy; 0 for flat and noisy profiles.
  double nominal_angle() const {
    return kind == TerrainKind::ramp ? ramp_angle : 0.0;
  }
  void validate() const;

  // flat | ramp:<deg> | noisy:<omega>:<gamma>:<seed>
  static TerrainProfile parse(const std::string& spec);
  std::string to_string() const;

  static TerrainProfile make_flat();
  static TerrainProfile make_ramp(double angle_rad, double start_x = 1.0);
  static TerrainProfile make_noisy(double omega_cm, double gamma_m,
                                   std::uint64_t seed, double start_x = 1.0);
};

// Training draw: flat with probability 1/2, otherwise a ramp uniform in
// [-5 deg, +5 deg]. Noisy planes are held out for evaluation.
TerrainProfile make_training_terrain(Rng& rng);

}  // namespace biped
