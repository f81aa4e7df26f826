#include "dmphy/priors.hpp"

#include <cmath>
#include <limits>

#include "dmphy/errors.hpp"

namespace dmphy {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

double log_cluster_prior(const ClusterAssignment& c, const Topology& t, double alpha,
                         double lambda) {
  if (!(alpha > 0.0)) throw ValidationError("log_cluster_prior: alpha must be positive");
  if (!(lambda > 0.0)) throw ValidationError("log_cluster_prior: lambda must be positive");
  if (!is_clade_partition(t, c)) return kNegInf;

  const int n = c.size();
  const int k = c.cluster_count();
  const auto sizes = c.cluster_sizes();

  // B(n + alpha)/B(alpha) with the symmetric K-dimensional alpha vector.
  double log_prior = std::lgamma(k * alpha) - std::lgamma(n + k * alpha);
  for (const int n_k : sizes)
    log_prior += std::lgamma(n_k + alpha) - std::lgamma(alpha);

  // Multinomial coefficient over the unordered size counts.
  log_prior += std::lgamma(n + 1.0);
  for (const int n_k : sizes) log_prior -= std::lgamma(n_k + 1.0);

  // Poisson weight on the number of occupied clusters.
  log_prior += k * std::log(lambda) - lambda - std::lgamma(k + 1.0);
  return log_prior;
}

double log_alpha_prior(double alpha, double eta, double beta) {
  if (!(eta > 0.0) || !(beta > 0.0))
    throw ValidationError("log_alpha_prior: shape and scale must be positive");
  if (!(alpha > 0.0)) return kNegInf;
  return (eta - 1.0) * std::log(alpha) - alpha / beta - std::lgamma(eta) - eta * std::log(beta);
}

}  // namespace dmphy
