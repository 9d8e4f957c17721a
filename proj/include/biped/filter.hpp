#pragma once

#include "biped/common.hpp"

#include <array>
#include <span>
#include <vector>

namespace biped {

// Second-order section, direct form II transposed, a0 normalized to 1.
struct Biquad {
  double b0, b1, b2, a1, a2;
};

// 4th-order Butterworth low-pass as a cascade of two biquads.
// Throws std::invalid_argument if cutoff >= Nyquist.
std::array<Biquad, 2> butterworth4_lowpass(double sample_rate, double cutoff);

// Analytic squared magnitude of the 4th-order design applied forward-backward
// (|H|^2 of the one-pass digital filter), used by tests as an oracle.
double butterworth4_zero_phase_gain(double sample_rate, double cutoff,
                                    double freq);

// Samples the filter must be able to reflect past each edge.
inline constexpr std::size_t kFiltfiltPadLen = 15;

// Zero-phase (forward-backward) application with odd-reflection padding and
// steady-state initialization. Requires x.size() > kFiltfiltPadLen.
std::vector<double> filtfilt(const std::array<Biquad, 2>& sos,
                             std::span<const double> x);

// Zero-phase 4th-order Butterworth low-pass.
std::vector<double> lowpass_filter(std::span<const double> signal,
                                   double sample_rate, double cutoff);

// Column-wise variant; rows are samples, columns are channels.
Mat lowpass_filter(const Mat& signal, double sample_rate, double cutoff);

// Keeps every `factor`-th row starting at row 0.
Mat decimate_rows(const Mat& signal, int factor);

}  // namespace biped
