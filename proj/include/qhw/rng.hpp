/// @file rng.hpp
/// @brief Deterministic random streams: a seeded mt19937_64 wrapper with
/// inverse-CDF draws, plus stream splitting so parallel jobs never share state.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace qhw {

/// splitmix64 finalizer; mixes (seed, stream index) into an engine seed so that
/// nearby seeds/streams give unrelated sequences.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Inverse standard normal CDF (Wichura's AS 241, double precision).
double norm_quantile(double u);

/// Standard normal CDF via erfc.
inline double norm_cdf(double t) { return 0.5 * std::erfc(-t / std::sqrt(2.0)); }

/// One random stream. All draws are inverse-CDF transforms of uniforms from a
/// single mt19937_64, so a run is reproducible from (seed, stream) alone.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream = 0)
      : eng_(mix_seed(seed, stream)) {}

  /// Uniform on (0,1); 53-bit mantissa, never returns 0 or 1.
  double u01() {
    const std::uint64_t r = eng_();
    return (static_cast<double>(r >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Exponential with the given rate.
  double expo(double rate) { return -std::log1p(-u01()) / rate; }

  double normal() { return norm_quantile(u01()); }

  /// Index drawn from a probability vector by inverse-CDF scan; the vector may
  /// sum to less than 1, in which case the remainder maps to `size` (used for
  /// absorption from sub-stochastic rows). Accepts any Eigen vector expression
  /// (e.g. a matrix column) without materializing it.
  template <typename Derived>
  int pick(const Eigen::MatrixBase<Derived>& probs) {
    const double u = u01();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
      acc += probs(i);
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size());
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace qhw
