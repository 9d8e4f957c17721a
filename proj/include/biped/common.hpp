#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace biped {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec2 = Eigen::Vector2d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec7 = Eigen::Matrix<double, 7, 1>;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using Mat9 = Eigen::Matrix<double, 9, 9>;

// Malformed or inconsistent data (bad file contents, broken invariants).
class InvalidData : public std::runtime_error {
 public:
  explicit InvalidData(const std::string& what) : std::runtime_error(what) {}
};

using Rng = std::mt19937_64;

// Own uniform/normal draws instead of std distributions: the standard does
// not pin their algorithms, and reproducibility across library versions is
// part of the output contract.
inline double rng_uniform(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0,1)
}

inline double rng_range(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * rng_uniform(rng);
}

inline std::int64_t rng_below(Rng& rng, std::int64_t n) {
  return static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(n));
}

// Stateless Box-Muller (second value discarded) so the engine state alone
// captures the stream position.
inline double rng_normal(Rng& rng) {
  double u1 = 0.0;
  do {
    u1 = rng_uniform(rng);
  } while (u1 <= 0.0);
  const double u2 = rng_uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Counter-based deterministic hash onto [0,1).
inline double hash_unit(std::uint64_t seed, std::int64_t counter) {
  const std::uint64_t h =
      splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(counter)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Shortest exact decimal for doubles; %.17g round-trips bit-exactly and is
// deterministic, which the byte-stable file formats rely on.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string format_double_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::uint64_t fnv1a(const void* data, std::size_t n);
std::uint64_t hash_file(const std::string& path);  // throws InvalidData if unreadable
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

namespace par {

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Runs fn(chunk, begin, end) over a fixed partition of [0,n) into n_chunks
// pieces. The partition does not depend on thread count, so callers that
// accumulate into per-chunk buffers and merge them in chunk order get
// bit-identical results serially and in parallel.
template <class F>
void chunked(std::size_t n, std::size_t n_chunks, bool parallel, F&& fn) {
  if (n == 0) return;
  if (n_chunks > n) n_chunks = n;
  const std::size_t base = n / n_chunks;
  const std::size_t rem = n % n_chunks;
  auto bounds = [&](std::size_t c) {
    const std::size_t b = c * base + std::min(c, rem);
    const std::size_t e = b + base + (c < rem ? 1 : 0);
    return std::pair<std::size_t, std::size_t>(b, e);
  };
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(n_chunks); ++c) {
      auto [b, e] = bounds(static_cast<std::size_t>(c));
      fn(static_cast<std::size_t>(c), b, e);
    }
  } else {
    for (std::size_t c = 0; c < n_chunks; ++c) {
      auto [b, e] = bounds(c);
      fn(c, b, e);
    }
  }
}

}  // namespace par

}  // namespace biped
