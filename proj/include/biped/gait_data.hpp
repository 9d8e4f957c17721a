#pragma once

#include "biped/common.hpp"
#include "biped/fourier.hpp"

#include <string>
#include <vector>

namespace biped {

inline constexpr int kCycleFrames = 32;
inline constexpr int kJointChannels = 6;  // r hip, r knee, r ankle, l hip, l knee, l ankle
inline constexpr double kCycleSeconds = 3.2;
inline constexpr double kMinCycleSeconds = 0.4;
inline constexpr double kFilterCutoffHz = 5.0;
inline constexpr double kResampledRateHz = 10.0;

struct Morphology {
  double leg_length_right = 0.9;
  double leg_length_left = 0.9;
  void validate() const;
};

// One recorded walking trial: rows are samples, columns the six joints.
struct RawTrial {
  Mat samples;  // n x 6, radians
  double sample_rate = 100.0;
  std::vector<double> foot_strike_times;  // seconds, strictly increasing
  double com_speed_label = 0.0;           // m/s
  Morphology morphology;
  void validate() const;
};

using FrameMat = Eigen::Matrix<double, kCycleFrames, kJointChannels>;
using CoeffMat = Eigen::Matrix<Cplx, kCycleFrames, kJointChannels>;

struct GaitCycle {
  FrameMat frames = FrameMat::Zero();
  double speed = 0.0;
  Morphology morphology;
  void validate() const;
};

struct SpectralGait {
  CoeffMat coefficients = CoeffMat::Zero();
  double speed = 0.0;
  Morphology morphology;
  // max |c[k] - conj(c[(N-k)%N])| over all bins and channels
  double symmetry_error() const;
};

// A variable-length slice between consecutive foot strikes.
struct RawCycle {
  Mat samples;  // n x 6
  double sample_rate = 0.0;
  double speed = 0.0;
  Morphology morphology;
  std::size_t start_index = 0;  // sample index of the opening strike
};

// One cycle per consecutive strike pair; cycles outside [0.4 s, 3.2 s] are
// dropped. Fewer than two strikes yields an empty list.
std::vector<RawCycle> segment_cycles(const RawTrial& trial);

// Fourier-resamples each channel to 32 samples and stores the 32-point
// spectrum (unnormalized forward convention). Needs >= 4 samples.
SpectralGait unify_cycle(const RawCycle& cycle);

// Inverse transform back to 32 real frames. Symmetry violations within
// `symmetry_tol` are symmetrized away; larger ones raise InvalidData.
GaitCycle reconstruct_cycle(const SpectralGait& spec,
                            double symmetry_tol = 1e-6);

// Full preparation path for one trial: zero-phase 5 Hz low-pass at the
// native rate, decimation to 10 Hz, strike segmentation, spectral encoding.
std::vector<SpectralGait> prepare_trial(const RawTrial& trial);

// --- corpus files ---------------------------------------------------------
// cycles:  header speed,leg_r,leg_l,frame,j0..j5 with 32 rows per cycle
// spectra: header speed,leg_r,leg_l,bin,j0_re,j0_im,...,j5_re,j5_im

std::string cycle_corpus_csv(const std::vector<GaitCycle>& cycles);
std::vector<GaitCycle> parse_cycle_corpus_csv(const std::string& text);
void write_cycle_corpus(const std::string& path,
                        const std::vector<GaitCycle>& cycles);
std::vector<GaitCycle> read_cycle_corpus(const std::string& path);

std::string spectral_corpus_csv(const std::vector<SpectralGait>& specs);
std::vector<SpectralGait> parse_spectral_corpus_csv(const std::string& text);
void write_spectral_corpus(const std::string& path,
                           const std::vector<SpectralGait>& specs);
std::vector<SpectralGait> read_spectral_corpus(const std::string& path);

}  // namespace biped
