#include "dmphy/discrete_gamma.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "dmphy/errors.hpp"

namespace dmphy {

namespace {

// Series expansion of P(a,x), effective for x < a+1.
double lower_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 500; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Modified Lentz continued fraction for Q(a,x), effective for x >= a+1.
double upper_continued_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_cdf_regularized(double a, double x) {
  if (!(a > 0.0)) throw ValidationError("gamma_cdf_regularized: shape must be positive");
  if (x <= 0.0) return 0.0;
  if (x < a + 1.0) return lower_series(a, x);
  return 1.0 - upper_continued_fraction(a, x);
}

double gamma_cdf_inverse(double a, double p) {
  if (!(a > 0.0)) throw ValidationError("gamma_cdf_inverse: shape must be positive");
  if (!(p >= 0.0 && p < 1.0)) throw ValidationError("gamma_cdf_inverse: p must lie in [0,1)");
  if (p == 0.0) return 0.0;

  // Wilson-Hilferty starting point from a rough normal quantile; the
  // Newton/bisection loop below does the real work.
  const double z = std::log(p / (1.0 - p)) / 1.702;
  double x = a * std::pow(1.0 - 1.0 / (9.0 * a) + z / (3.0 * std::sqrt(a)), 3.0);
  if (!(x > 0.0) || !std::isfinite(x)) x = a;

  // Newton with bisection safeguard on P(a,x) - p.
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < 200; ++iter) {
    const double f = gamma_cdf_regularized(a, x) - p;
    if (f > 0.0)
      hi = x;
    else
      lo = x;
    const double log_pdf = -x + (a - 1.0) * std::log(x) - std::lgamma(a);
    const double step = f / std::exp(log_pdf);
    double next = x - step;
    if (!(next > lo) || !(next < hi) || !std::isfinite(next))
      next = std::isfinite(hi) ? 0.5 * (lo + hi) : x * 2.0;
    if (std::abs(next - x) <= 1e-15 * x) return next;
    x = next;
  }
  return x;
}

DiscreteGamma discrete_gamma(int n_categories, double shape, bool mean_one) {
  if (n_categories < 1) throw ValidationError("discrete_gamma: need at least one category");
  if (!(shape > 0.0)) throw ValidationError("discrete_gamma: shape must be positive");

  DiscreteGamma dg;
  dg.n_categories = n_categories;
  dg.shape = shape;
  const double rate = mean_one ? shape : 1.0 / shape;
  const double mean = shape / rate;
  if (n_categories == 1) {
    dg.scalers = {mean};
    return dg;
  }

  // Conditional mean of the m-th inter-quantile slice:
  //   E[X | q_{m-1} < X < q_m] = n * (a/b) * [P(a+1, b q_m) - P(a+1, b q_{m-1})]
  dg.scalers.resize(n_categories);
  double prev_mass = 0.0;  // P(a+1, b*q) at the lower slice edge
  for (int m = 1; m <= n_categories; ++m) {
    double mass;
    if (m == n_categories) {
      mass = 1.0;
    } else {
      const double unit_q = gamma_cdf_inverse(shape, static_cast<double>(m) / n_categories);
      mass = gamma_cdf_regularized(shape + 1.0, unit_q);
    }
    dg.scalers[m - 1] = n_categories * mean * (mass - prev_mass);
    prev_mass = mass;
  }
  for (int m = 1; m < n_categories; ++m)
    if (!(dg.scalers[m] > dg.scalers[m - 1]))
      throw std::runtime_error("discrete_gamma: scalers not strictly increasing (shape " +
                               std::to_string(shape) + ")");
  return dg;
}

}  // namespace dmphy
