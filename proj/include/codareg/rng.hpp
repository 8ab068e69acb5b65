#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace codareg {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Deterministic RNG with hand-rolled samplers so that a seed pins every
/// draw bit-for-bit regardless of the standard library in use.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  /// Derive an independent stream, e.g. one per chain or per restart.
  static Rng stream(std::uint64_t seed, std::uint64_t index) {
    return Rng(splitmix64(seed) ^ splitmix64(0x517cc1b727220a95ull * (index + 1)));
  }

  /// Uniform on (0,1); never returns 0 or 1.
  double uniform() {
    const double u = (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    return u;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller. Stateless: one draw uses two uniforms.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Gamma(shape, scale) by Marsaglia-Tsang; shape < 1 via the boost
  /// u^(1/shape) trick.
  double gamma(double shape, double scale) {
    if (shape < 1.0) {
      const double u = uniform();
      return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
    }
  }

  /// Inverse-gamma with shape a and rate b (density ~ x^{-a-1} e^{-b/x}).
  double inverse_gamma(double shape, double rate) {
    return 1.0 / gamma(shape, 1.0 / rate);
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Poisson by Knuth's product method, split recursively so the e^-lambda
  /// threshold never underflows.
  long poisson(double lambda) {
    if (lambda <= 0.0) return 0;
    if (lambda > 500.0) return poisson(500.0) + poisson(lambda - 500.0);
    const double threshold = std::exp(-lambda);
    long k = 0;
    double prod = uniform();
    while (prod > threshold) {
      ++k;
      prod *= uniform();
    }
    return k;
  }

  /// Negative binomial with mean mu and dispersion theta (gamma-Poisson mix).
  long negative_binomial(double mu, double theta) {
    const double lambda = gamma(theta, mu / theta);
    return poisson(lambda);
  }

  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace codareg
