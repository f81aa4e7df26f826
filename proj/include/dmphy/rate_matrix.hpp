#pragma once

#include <Eigen/Dense>

namespace dmphy {

// Validated GTR rate matrix with its stationary distribution, plus the
// spectral factorization used for transition probabilities.
//
// Construction canonicalizes the input: the diagonal is re-derived from the
// off-diagonals and detailed balance is enforced by averaging pi_i*q_ij with
// pi_j*q_ji. Published matrices are typically printed to 7-9 significant
// digits, which leaves row sums and reversibility off by ~1e-8; the
// canonical form absorbs that rounding so the stored matrix satisfies
// row-sum zero and stationarity to machine precision. Inputs farther than
// the gates below from a valid GTR matrix are rejected.
class RateMatrix {
 public:
  // Gates applied to the raw input before canonicalization.
  static constexpr double kRowSumGate = 1e-6;
  static constexpr double kPiSumGate = 1e-6;
  static constexpr double kStationarityGate = 1e-7;

  static RateMatrix build_gtr(const Eigen::Matrix4d& q, const Eigen::Vector4d& pi);

  const Eigen::Matrix4d& q() const { return q_; }
  const Eigen::Vector4d& pi() const { return pi_; }

  // exp(q * t), exact for the reversible canonical form.
  Eigen::Matrix4d transition_matrix(double t) const;

  // Spectral pieces: q = basis * diag(eigenvalues) * inverse_basis.
  // transition_matrix(t) = basis * diag(exp(eigenvalues*t)) * inverse_basis.
  const Eigen::Vector4d& eigenvalues() const { return eigenvalues_; }
  const Eigen::Matrix4d& basis() const { return basis_; }
  const Eigen::Matrix4d& inverse_basis() const { return inverse_basis_; }

 private:
  RateMatrix() = default;

  Eigen::Matrix4d q_;
  Eigen::Vector4d pi_;
  Eigen::Vector4d eigenvalues_;
  Eigen::Matrix4d basis_;          // diag(pi)^{-1/2} * V
  Eigen::Matrix4d inverse_basis_;  // V^T * diag(pi)^{1/2}
};

}  // namespace dmphy
