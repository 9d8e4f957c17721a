#include "biped/terrain.hpp"

#include <cmath>
#include <stdexcept>

namespace biped {

namespace {
constexpr double kDeg = M_PI / 180.0;
const double kGammaChoices[] = {0.25, 0.5, 1.0, 2.0};
}  // namespace

double TerrainProfile::height_at(double x) const {
  switch (kind) {
    case TerrainKind::flat:
      return 0.0;
    case TerrainKind::ramp:
      return std::max(0.0, x - start_x) * std::tan(ramp_angle);
    case TerrainKind::noisy: {
      if (x < start_x) return 0.0;
      const auto cell =
          static_cast<std::int64_t>(std::floor((x - start_x) / noise_resolution_m));
      return hash_unit(seed, cell) * noise_amplitude_cm * 0.01;
    }
  }
  return 0.0;
}

void TerrainProfile::validate() const {
  if (kind == TerrainKind::ramp) {
    if (!(std::abs(ramp_angle) <= 0.35))
      throw InvalidData("TerrainProfile: |ramp angle| above 0.35 rad");
  }
  if (kind == TerrainKind::noisy) {
    if (!(noise_amplitude_cm >= 0.0 && noise_amplitude_cm <= 20.0))
      throw InvalidData("TerrainProfile: omega outside [0, 20] cm");
    bool ok = false;
    for (double g : kGammaChoices) ok = ok || noise_resolution_m == g;
    if (!ok)
      throw InvalidData("TerrainProfile: gamma not in {0.25, 0.5, 1.0, 2.0}");
  }
}

TerrainProfile TerrainProfile::parse(const std::string& spec) {
  auto next_field = [](const std::string& s, std::size_t& pos) {
    const auto colon = s.find(':', pos);
    const std::string tok = colon == std::string::npos
                                ? s.substr(pos)
                                : s.substr(pos, colon - pos);
    pos = colon == std::string::npos ? s.size() : colon + 1;
    return tok;
  };
  std::size_t pos = 0;
  const std::string head = next_field(spec, pos);
  try {
    if (head == "flat" && pos == spec.size()) return make_flat();
    if (head == "ramp") {
      const double deg = std::stod(next_field(spec, pos));
      return make_ramp(deg * kDeg);
    }
    if (head == "noisy") {
      const double omega = std::stod(next_field(spec, pos));
      const double gamma = std::stod(next_field(spec, pos));
      const auto seed =
          static_cast<std::uint64_t>(std::stoull(next_field(spec, pos)));
      return make_noisy(omega, gamma, seed);
    }
  } catch (const std::logic_error&) {
    // falls through to the error below
  }
  throw InvalidData("terrain spec: expected flat | ramp:<deg> | "
                    "noisy:<omega>:<gamma>:<seed>, got '" + spec + "'");
}

std::string TerrainProfile::to_string() const {
  switch (kind) {
    case TerrainKind::flat:
      return "flat";
    case TerrainKind::ramp:
      return "ramp:" + format_double_short(ramp_angle / kDeg);
    case TerrainKind::noisy:
      return "noisy:" + format_double_short(noise_amplitude_cm) + ":" +
             format_double_short(noise_resolution_m) + ":" +
             std::to_string(seed);
  }
  return "flat";
}

TerrainProfile TerrainProfile::make_flat() { return TerrainProfile{}; }

TerrainProfile TerrainProfile::make_ramp(double angle_rad, double start_x) {
  TerrainProfile p;
  p.kind = TerrainKind::ramp;
  p.ramp_angle = angle_rad;
  p.start_x = start_x;
  p.validate();
  return p;
}

TerrainProfile TerrainProfile::make_noisy(double omega_cm, double gamma_m,
                                          std::uint64_t seed, double start_x) {
  TerrainProfile p;
  p.kind = TerrainKind::noisy;
  p.noise_amplitude_cm = omega_cm;
  p.noise_resolution_m = gamma_m;
  p.seed = seed;
  p.start_x = start_x;
  p.validate();
  return p;
}

TerrainProfile make_training_terrain(Rng& rng) {
  if (rng_uniform(rng) < 0.5) return TerrainProfile::make_flat();
  return TerrainProfile::make_ramp(rng_range(rng, -5.0 * kDeg, 5.0 * kDeg));
}

}  // namespace biped
