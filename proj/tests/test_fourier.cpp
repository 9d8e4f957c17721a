#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "biped/fourier.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace biped;

TEST_CASE("dft of a constant concentrates in the DC bin") {
  std::vector<double> x(20, 0.3);
  const CVec spec = spectral_resample(dft(x), 32);
  CHECK(spec[0].real() == doctest::Approx(0.3 * 32).epsilon(1e-12));
  CHECK(std::abs(spec[0].imag()) < 1e-12);
  for (int k = 1; k < 32; ++k) CHECK(std::abs(spec[k]) < 1e-12);
}

TEST_CASE("pure cosine with two periods lands in bins +-2") {
  const int n = 24;
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = std::cos(2.0 * M_PI * 2.0 * i / n);
  const CVec spec = spectral_resample(dft(x), 32);
  CHECK(spec[2].real() == doctest::Approx(16.0).epsilon(1e-9));
  CHECK(spec[30].real() == doctest::Approx(16.0).epsilon(1e-9));
  for (int k = 0; k < 32; ++k) {
    if (k == 2 || k == 30) continue;
    CHECK(std::abs(spec[k]) < 1e-9 * 16.0);
  }
}

TEST_CASE("inverse pair round trip at matched length") {
  std::mt19937_64 rng(5);
  std::vector<double> x(32);
  for (double& v : x) v = static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;
  const auto y = idft_real(spectral_resample(dft(x), 32));
  for (int i = 0; i < 32; ++i)
    CHECK(y[static_cast<std::size_t>(i)] == doctest::Approx(x[static_cast<std::size_t>(i)]).epsilon(1e-9).scale(1.0));
}

TEST_CASE("upsample then downsample is exact") {
  std::mt19937_64 rng(9);
  std::vector<double> x(20);
  for (double& v : x) v = static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;
  const CVec up = spectral_resample(dft(x), 32);
  const CVec back = spectral_resample(up, 20);
  const auto y = idft_real(back);
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(y[i] == doctest::Approx(x[i]).epsilon(1e-9).scale(1.0));
}

TEST_CASE("fourier interpolation of a pure tone matches the closed form") {
  const int n = 16, m = 32;
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i)
    x[static_cast<std::size_t>(i)] = std::sin(2.0 * M_PI * 3.0 * i / n + 0.3);
  const auto y = fourier_resample(x, m);
  for (int i = 0; i < m; ++i) {
    const double expect = std::sin(2.0 * M_PI * 3.0 * i / m + 0.3);
    CHECK(y[static_cast<std::size_t>(i)] == doctest::Approx(expect).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("parseval holds through resampling") {
  std::mt19937_64 rng(13);
  std::vector<double> x(26);
  for (double& v : x) v = static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;
  const CVec spec = spectral_resample(dft(x), 32);
  const auto frames = idft_real(spec);
  double coeff_energy = 0.0;
  for (int k = 0; k < 32; ++k) coeff_energy += std::norm(spec[k]);
  double frame_energy = 0.0;
  for (double v : frames) frame_energy += v * v;
  CHECK(coeff_energy == doctest::Approx(32.0 * frame_energy).epsilon(1e-6));
}

TEST_CASE("conjugate symmetry survives resampling of real input") {
  std::mt19937_64 rng(21);
  for (int n : {9, 16, 33, 64}) {
    std::vector<double> x(static_cast<std::size_t>(n));
    for (double& v : x) v = static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;
    const CVec spec = spectral_resample(dft(x), 32);
    for (int k = 0; k < 32; ++k) {
      const Cplx diff = spec[k] - std::conj(spec[(32 - k) % 32]);
      CHECK(std::abs(diff) < 1e-9);
    }
  }
}

TEST_CASE("asymmetric spectrum is rejected by the real inverse") {
  CVec spec = CVec::Zero(32);
  spec[3] = Cplx(1.0, 1.0);  // no conjugate partner
  CHECK_THROWS_AS(idft_real(spec), InvalidData);
}
