#pragma once

#include <vector>

namespace dmphy {

// Among-site rate variation: n_categories equal-probability categories, each
// represented by the conditional mean of its inter-quantile slice of a gamma
// distribution.
//
// With mean_one (default) the gamma has rate = shape, so the category scalers
// average exactly 1. With mean_one = false the distribution is
// Gamma(shape, scale = shape), matching configurations that quote equal shape
// and scale parameters; the scalers then average shape^2.
struct DiscreteGamma {
  int n_categories = 1;
  double shape = 1.0;
  std::vector<double> scalers;  // strictly increasing
};

DiscreteGamma discrete_gamma(int n_categories, double shape, bool mean_one = true);

// Regularized lower incomplete gamma P(a, x) and its inverse in x; exposed
// because the transition-grid diagnostics and the gamma hyperprior both need
// gamma-distribution CDFs.
double gamma_cdf_regularized(double a, double x);
double gamma_cdf_inverse(double a, double p);

}  // namespace dmphy
