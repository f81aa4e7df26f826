#include "dmphy/rng.hpp"

#include <numbers>

#include "dmphy/errors.hpp"

namespace dmphy {

std::uint64_t Rng::uniform_int(std::uint64_t n) {
  if (n == 0) throw ValidationError("uniform_int: n must be positive");
  const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % n;
  }
}

double Rng::normal() {
  const double u1 = 1.0 - uniform01();  // (0,1], keeps log finite
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::lognormal_mean_cv(double mean, double cv) {
  if (!(mean > 0.0) || !(cv > 0.0))
    throw ValidationError("lognormal_mean_cv: mean and cv must be positive");
  const double sigma2 = std::log1p(cv * cv);
  const double mu = std::log(mean) - 0.5 * sigma2;
  return std::exp(mu + std::sqrt(sigma2) * normal());
}

double Rng::gamma(double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0))
    throw ValidationError("gamma: shape and scale must be positive");
  if (shape < 1.0) {
    // Boost to shape+1, then scale back with u^(1/shape).
    const double g = gamma(shape + 1.0, 1.0);
    const double u = 1.0 - uniform01();
    return scale * g * std::pow(u, 1.0 / shape);
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
    const double u = 1.0 - uniform01();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return scale * d * v;
  }
}

int Rng::poisson(double rate) {
  if (!(rate >= 0.0)) throw ValidationError("poisson: rate must be non-negative");
  if (rate == 0.0) return 0;
  // exp(-rate) stays normal down to rate ~ 700; rates here are two orders of
  // magnitude smaller.
  const double limit = std::exp(-rate);
  int k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= uniform01();
  } while (p > limit);
  return k - 1;
}

}  // namespace dmphy
