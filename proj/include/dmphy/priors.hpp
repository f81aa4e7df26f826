#pragma once

#include "dmphy/cluster.hpp"
#include "dmphy/tree.hpp"

namespace dmphy {

// Hyperparameters of the marginalized cluster-assignment prior: a Poisson
// weight on the number of clusters and a symmetric Dirichlet (concentration
// alpha) integrated against the multinomial of cluster sizes, with a gamma
// hyperprior (shape eta, scale beta) on alpha.
struct ClusterPriorParams {
  double lambda = 30.0;
  double eta = 1000.0;
  double beta = 0.1;
};

// Unnormalized log prior of a cluster assignment given the topology:
//   log [ B(n + alpha) / B(alpha) ]            (Dirichlet-multinomial)
// + log multinomial(n; n_1..n_K)
// + log Poisson(K; lambda)
// with K = max(c) occupied clusters and alpha the symmetric K-vector. Returns
// -inf for assignments that are not clade partitions of t.
double log_cluster_prior(const ClusterAssignment& c, const Topology& t, double alpha,
                         double lambda);

// Gamma(shape eta, scale beta) log density; -inf for alpha <= 0.
double log_alpha_prior(double alpha, double eta, double beta);

}  // namespace dmphy
