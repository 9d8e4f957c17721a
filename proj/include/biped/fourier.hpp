#pragma once

#include "biped/common.hpp"

#include <complex>
#include <span>
#include <vector>

namespace biped {

using Cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;

// Unnormalized forward DFT: X[k] = sum_n x[n] e^{-2*pi*i*k*n/N}.
CVec dft(std::span<const double> x);
CVec dft(const CVec& x);

// Inverse with 1/N normalization.
CVec idft(const CVec& x);

// Inverse of a conjugate-symmetric spectrum; throws InvalidData if any
// imaginary residue exceeds imag_tol.
std::vector<double> idft_real(const CVec& x, double imag_tol = 1e-8);

// Resamples a length-N spectrum onto M bins with M/N amplitude scaling so the
// inverse transform keeps time-domain amplitudes. Conjugate symmetry of real
// signals is preserved; Nyquist energy is split on upsampling and folded on
// downsampling so that resampling N->M->N is exact.
CVec spectral_resample(const CVec& spectrum, int target_bins);

// Fourier interpolation of a real signal to a new length.
std::vector<double> fourier_resample(std::span<const double> x, int target_len);

}  // namespace biped
