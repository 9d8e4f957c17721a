#include "biped/fourier.hpp"

#include <cmath>

namespace biped {

namespace {

// Twiddle table indexed modulo N keeps angle error at O(eps) for the small
// transforms used here (cycles are at most a few hundred samples).
std::vector<Cplx> roots(int n) {
  std::vector<Cplx> w(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const double a = -2.0 * M_PI * static_cast<double>(j) / n;
    w[static_cast<std::size_t>(j)] = Cplx(std::cos(a), std::sin(a));
  }
  return w;
}

CVec dft_impl(const CVec& x) {
  const int n = static_cast<int>(x.size());
  const auto w = roots(n);
  CVec out(n);
  for (int k = 0; k < n; ++k) {
    Cplx acc(0.0, 0.0);
    std::int64_t idx = 0;
    for (int j = 0; j < n; ++j) {
      acc += x[j] * w[static_cast<std::size_t>(idx)];
      idx += k;
      if (idx >= n) idx -= n;
    }
    out[k] = acc;
  }
  return out;
}

}  // namespace

CVec dft(std::span<const double> x) {
  CVec cx(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i)
    cx[static_cast<Eigen::Index>(i)] = Cplx(x[i], 0.0);
  return dft_impl(cx);
}

CVec dft(const CVec& x) { return dft_impl(x); }

CVec idft(const CVec& x) {
  const auto n = x.size();
  CVec conj = x.conjugate();
  CVec y = dft_impl(conj).conjugate();
  return y / static_cast<double>(n);
}

std::vector<double> idft_real(const CVec& x, double imag_tol) {
  const CVec y = idft(x);
  std::vector<double> out(static_cast<std::size_t>(y.size()));
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (std::abs(y[i].imag()) > imag_tol)
      throw InvalidData("idft_real: imaginary residue above tolerance");
    out[static_cast<std::size_t>(i)] = y[i].real();
  }
  return out;
}

CVec spectral_resample(const CVec& spectrum, int target_bins) {
  const int n = static_cast<int>(spectrum.size());
  const int m = target_bins;
  if (n < 1 || m < 1)
    throw InvalidData("spectral_resample: empty spectrum");
  const double scale = static_cast<double>(m) / static_cast<double>(n);
  if (m == n) return spectrum * scale;

  CVec out = CVec::Zero(m);
  out[0] = scale * spectrum[0];
  if (m > n) {
    // Upsample: copy low bins, split source Nyquist across +/- target bins.
    const int half = n / 2;
    for (int k = 1; k < (n + 1) / 2; ++k) {
      out[k] = scale * spectrum[k];
      out[m - k] = scale * spectrum[n - k];
    }
    if (n % 2 == 0) {
      out[half] = 0.5 * scale * spectrum[half];
      out[m - half] = 0.5 * scale * spectrum[half];
    }
  } else {
    // Downsample: keep low bins, fold the +/- target-Nyquist pair into one.
    const int half = m / 2;
    for (int k = 1; k < (m + 1) / 2; ++k) {
      out[k] = scale * spectrum[k];
      out[m - k] = scale * spectrum[n - k];
    }
    if (m % 2 == 0) out[half] = scale * (spectrum[half] + spectrum[n - half]);
  }
  return out;
}

std::vector<double> fourier_resample(std::span<const double> x,
                                     int target_len) {
  const CVec spec = spectral_resample(dft(x), target_len);
  return idft_real(spec, 1e-6);
}

}  // namespace biped
