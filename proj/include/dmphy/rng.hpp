#pragma once

#include <cmath>
#include <cstdint>

namespace dmphy {

// Counter-based pseudo-random generator with explicit sub-streams.
//
// The generator is the splitmix64 finalizer applied to an incrementing
// counter offset by a stream key:
//
//   output_i = finalize(key + i * 0x9e3779b97f4a7c15)
//
// Sub-streams are derived with fork(tag):
//
//   child.key = finalize(key ^ finalize(tag + 0x53a3d5c153a3d5c1))
//
// Both rules involve only 64-bit integer arithmetic, so streams are
// bit-identical across platforms and independent of call interleaving in
// other streams. Floating-point variates are built from fixed numbers of
// 53-bit uniforms (except rejection-based ones, which consume a stream
// prefix of data-dependent but deterministic length).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(finalize(seed + kGamma)), counter_(0) {}

  std::uint64_t next_u64() { return finalize(key_ + (++counter_) * kGamma); }

  Rng fork(std::uint64_t tag) const {
    return Rng(FromKey{}, finalize(key_ ^ finalize(tag + kForkSalt)));
  }

  // Uniform on [0,1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform on {0, ..., n-1}; unbiased via rejection.
  std::uint64_t uniform_int(std::uint64_t n);

  double exponential(double mean) { return -mean * std::log1p(-uniform01()); }

  double normal();  // standard normal (Box-Muller, cosine branch)
  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Log-normal parameterized by the distribution's mean and coefficient of
  // variation (sd/mean).
  double lognormal_mean_cv(double mean, double cv);

  double gamma(double shape, double scale);  // Marsaglia-Tsang
  int poisson(double rate);                  // Knuth product-of-uniforms

 private:
  struct FromKey {};
  Rng(FromKey, std::uint64_t key) : key_(key), counter_(0) {}

  static std::uint64_t finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ull;
  static constexpr std::uint64_t kForkSalt = 0x53a3d5c153a3d5c1ull;

  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace dmphy
