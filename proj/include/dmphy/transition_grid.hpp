#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dmphy/discrete_gamma.hpp"
#include "dmphy/rate_matrix.hpp"

namespace dmphy {

// Branch-length regime: short edges inside a cluster's subtree vs the edges
// connecting cluster ancestors.
enum class Regime : int { within = 0, between = 1 };

// Transition matrices with the branch length integrated out against the
// regime's prior, precomputed on a discrete grid of prior means.
//
// matrix(g, m) approximates  E_l[ exp(Q * xi_m * l) ]  with l drawn from the
// regime's distribution with mean means[g]: exponential for the within
// regime, log-normal with coefficient of variation 1 for the between regime.
// std_error(g, m) holds the entrywise Monte Carlo standard error of that
// average.
struct MarginalTransitionGrid {
  Regime regime = Regime::within;
  Eigen::VectorXd means;  // strictly increasing grid of prior means
  int n_categories = 0;
  std::int64_t mc_samples = 0;

  std::vector<Eigen::Matrix4d> matrices;    // [g * n_categories + m]
  std::vector<Eigen::Matrix4d> std_errors;  // same layout

  int size() const { return static_cast<int>(means.size()); }
  const Eigen::Matrix4d& matrix(int g, int category) const {
    return matrices[static_cast<std::size_t>(g) * n_categories + category];
  }
  const Eigen::Matrix4d& std_error(int g, int category) const {
    return std_errors[static_cast<std::size_t>(g) * n_categories + category];
  }
};

// Builds the grid by Monte Carlo. The grid spans
// [center_mean*(1-radius_fraction), center_mean*(1+radius_fraction)] with
// grid_size equidistant points (grid_size = 1 uses center_mean alone). The
// same mc_samples branch-length draws are shared by all rate categories at a
// grid point; the draw stream for grid point g is
// Rng(seed).fork(regime id).fork(g), so grids are reproducible point by
// point.
MarginalTransitionGrid build_marginal_grid(const RateMatrix& rm, const DiscreteGamma& dg,
                                           Regime regime, double center_mean,
                                           double radius_fraction, int grid_size,
                                           std::int64_t mc_samples, std::uint64_t seed);

// Fingerprint of everything the grid depends on; embedded in cache files so a
// stale cache is never silently reused.
std::uint64_t grid_fingerprint(const RateMatrix& rm, const DiscreteGamma& dg, Regime regime,
                               double center_mean, double radius_fraction, int grid_size,
                               std::int64_t mc_samples, std::uint64_t seed);

void save_grid(const MarginalTransitionGrid& grid, std::uint64_t fingerprint,
               const std::string& path);

// Returns the grid if the file exists, parses, and carries the expected
// fingerprint; nullopt if the file is absent or the fingerprint differs.
std::optional<MarginalTransitionGrid> load_grid(const std::string& path,
                                                std::uint64_t expected_fingerprint);

}  // namespace dmphy
