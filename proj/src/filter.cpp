#include "biped/filter.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace biped {

namespace {

// Butterworth pole-pair quality factors for order 4: 1/(2 cos(pi/8)) and
// 1/(2 cos(3 pi/8)).
constexpr double kQ1 = 0.54119610014619698;
constexpr double kQ2 = 1.3065629648763764;

Biquad rbj_lowpass(double sample_rate, double cutoff, double q) {
  const double w0 = 2.0 * M_PI * cutoff / sample_rate;
  const double cw = std::cos(w0);
  const double sw = std::sin(w0);
  const double alpha = sw / (2.0 * q);
  const double a0 = 1.0 + alpha;
  Biquad s;
  s.b0 = (1.0 - cw) / 2.0 / a0;
  s.b1 = (1.0 - cw) / a0;
  s.b2 = s.b0;
  s.a1 = -2.0 * cw / a0;
  s.a2 = (1.0 - alpha) / a0;
  return s;
}

// DF2T single pass with initial state scaled for a steady level x0.
void run_biquad(const Biquad& s, std::vector<double>& x, double x0) {
  const double g = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
  double z1 = (g - s.b0) * x0;
  double z2 = (s.b2 - s.a2 * g) * x0;
  for (double& v : x) {
    const double y = s.b0 * v + z1;
    z1 = s.b1 * v - s.a1 * y + z2;
    z2 = s.b2 * v - s.a2 * y;
    v = y;
  }
}

}  // namespace

std::array<Biquad, 2> butterworth4_lowpass(double sample_rate, double cutoff) {
  if (!(sample_rate > 0.0) || !(cutoff > 0.0))
    throw std::invalid_argument("butterworth4_lowpass: rates must be positive");
  if (cutoff >= 0.5 * sample_rate)
    throw std::invalid_argument(
        "butterworth4_lowpass: cutoff must be below Nyquist");
  return {rbj_lowpass(sample_rate, cutoff, kQ1),
          rbj_lowpass(sample_rate, cutoff, kQ2)};
}

double butterworth4_zero_phase_gain(double sample_rate, double cutoff,
                                    double freq) {
  const auto sos = butterworth4_lowpass(sample_rate, cutoff);
  const std::complex<double> z =
      std::exp(std::complex<double>(0.0, -2.0 * M_PI * freq / sample_rate));
  std::complex<double> h = 1.0;
  for (const Biquad& s : sos) {
    h *= (s.b0 + s.b1 * z + s.b2 * z * z) / (1.0 + s.a1 * z + s.a2 * z * z);
  }
  const double m = std::abs(h);
  return m * m;  // forward + backward pass
}

std::vector<double> filtfilt(const std::array<Biquad, 2>& sos,
                             std::span<const double> x) {
  const std::size_t n = x.size();
  if (n <= kFiltfiltPadLen)
    throw std::invalid_argument("filtfilt: signal shorter than warm-up length");
  const std::size_t pad = kFiltfiltPadLen;

  // Odd reflection about the first/last sample.
  std::vector<double> ext(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i)
    ext[i] = 2.0 * x[0] - x[pad - i];
  for (std::size_t i = 0; i < n; ++i) ext[pad + i] = x[i];
  for (std::size_t i = 0; i < pad; ++i)
    ext[pad + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];

  for (const Biquad& s : sos) run_biquad(s, ext, ext.front());
  std::reverse(ext.begin(), ext.end());
  for (const Biquad& s : sos) run_biquad(s, ext, ext.front());
  std::reverse(ext.begin(), ext.end());

  return std::vector<double>(ext.begin() + static_cast<std::ptrdiff_t>(pad),
                             ext.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

std::vector<double> lowpass_filter(std::span<const double> signal,
                                   double sample_rate, double cutoff) {
  const auto sos = butterworth4_lowpass(sample_rate, cutoff);
  return filtfilt(sos, signal);
}

Mat lowpass_filter(const Mat& signal, double sample_rate, double cutoff) {
  Mat out(signal.rows(), signal.cols());
  std::vector<double> col(static_cast<std::size_t>(signal.rows()));
  for (Eigen::Index c = 0; c < signal.cols(); ++c) {
    for (Eigen::Index r = 0; r < signal.rows(); ++r)
      col[static_cast<std::size_t>(r)] = signal(r, c);
    const auto f = lowpass_filter(col, sample_rate, cutoff);
    for (Eigen::Index r = 0; r < signal.rows(); ++r)
      out(r, c) = f[static_cast<std::size_t>(r)];
  }
  return out;
}

Mat decimate_rows(const Mat& signal, int factor) {
  if (factor < 1) throw std::invalid_argument("decimate_rows: factor >= 1");
  const Eigen::Index n = (signal.rows() + factor - 1) / factor;
  Mat out(n, signal.cols());
  for (Eigen::Index i = 0; i < n; ++i) out.row(i) = signal.row(i * factor);
  return out;
}

}  // namespace biped
