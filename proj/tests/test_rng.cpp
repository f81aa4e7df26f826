#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "dmphy/rng.hpp"

using dmphy::Rng;

TEST_CASE("identical seeds give identical streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("forked streams are independent of parent consumption") {
  Rng a(7);
  Rng child_before = a.fork(3);
  a.next_u64();
  a.next_u64();
  Rng child_after = a.fork(3);
  for (int i = 0; i < 100; ++i) CHECK(child_before.next_u64() == child_after.next_u64());
}

TEST_CASE("uniform01 lies in [0,1) and has mean near 1/2") {
  Rng rng(1);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / n - 0.5) < 0.005);
}

TEST_CASE("uniform_int is unbiased over a small range") {
  Rng rng(5);
  std::vector<int> counts(7, 0);
  const int n = 140000;
  for (int i = 0; i < n; ++i) ++counts[rng.uniform_int(7)];
  for (const int c : counts) CHECK(std::abs(c - n / 7.0) < 5.0 * std::sqrt(n / 7.0));
}

TEST_CASE("moment checks for the continuous variates") {
  Rng rng(11);
  const int n = 200000;
  double exp_sum = 0.0, norm_sum = 0.0, norm_sq = 0.0, ln_sum = 0.0, ln_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    exp_sum += rng.exponential(0.003);
    const double z = rng.normal();
    norm_sum += z;
    norm_sq += z * z;
    const double l = rng.lognormal_mean_cv(0.008, 1.0);
    ln_sum += l;
    ln_sq += l * l;
  }
  CHECK(exp_sum / n == doctest::Approx(0.003).epsilon(0.02));
  CHECK(std::abs(norm_sum / n) < 0.01);
  CHECK(norm_sq / n == doctest::Approx(1.0).epsilon(0.02));
  const double ln_mean = ln_sum / n;
  const double ln_var = ln_sq / n - ln_mean * ln_mean;
  CHECK(ln_mean == doctest::Approx(0.008).epsilon(0.03));
  // cv = 1 means sd == mean
  CHECK(std::sqrt(ln_var) == doctest::Approx(0.008).epsilon(0.1));
}

TEST_CASE("gamma and poisson moments") {
  Rng rng(13);
  const int n = 100000;
  double gsum = 0.0, gsq = 0.0;
  long psum = 0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gamma(0.7589, 1.0 / 0.7589);  // mean 1
    gsum += g;
    gsq += g * g;
    psum += rng.poisson(12.0);
  }
  CHECK(gsum / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(gsq / n - 1.0 == doctest::Approx(1.0 / 0.7589).epsilon(0.05));  // var = 1/shape
  CHECK(static_cast<double>(psum) / n == doctest::Approx(12.0).epsilon(0.02));
}

TEST_CASE("small-shape gamma stays positive and finite") {
  Rng rng(17);
  for (int i = 0; i < 10000; ++i) {
    const double g = rng.gamma(0.2, 2.0);
    REQUIRE(std::isfinite(g));
    REQUIRE(g >= 0.0);
  }
}
