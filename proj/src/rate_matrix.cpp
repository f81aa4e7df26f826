#include "dmphy/rate_matrix.hpp"

#include <cmath>
#include <string>

#include "dmphy/errors.hpp"

namespace dmphy {

RateMatrix RateMatrix::build_gtr(const Eigen::Matrix4d& q, const Eigen::Vector4d& pi) {
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      if (!std::isfinite(q(i, j))) throw ValidationError("build_gtr: non-finite rate entry");
      if (i != j && q(i, j) < 0.0)
        throw ValidationError("build_gtr: negative off-diagonal rate at (" +
                              std::to_string(i) + "," + std::to_string(j) + ")");
    }
  for (int i = 0; i < 4; ++i) {
    const double row_sum = q.row(i).sum();
    if (std::abs(row_sum) > kRowSumGate)
      throw ValidationError("build_gtr: row " + std::to_string(i) + " sums to " +
                            std::to_string(row_sum) + ", not 0");
    if (!(pi(i) > 0.0)) throw ValidationError("build_gtr: limiting probabilities must be positive");
  }
  const double pi_sum = pi.sum();
  if (std::abs(pi_sum - 1.0) > kPiSumGate)
    throw ValidationError("build_gtr: limiting probabilities sum to " +
                          std::to_string(pi_sum) + ", not 1");

  RateMatrix rm;
  rm.pi_ = pi / pi_sum;
  const double stationarity = (rm.pi_.transpose() * q).cwiseAbs().maxCoeff();
  if (stationarity > kStationarityGate)
    throw ValidationError("build_gtr: stationarity violation, |pi^T Q| = " +
                          std::to_string(stationarity));

  // Detailed-balance averaging, then exact diagonal.
  rm.q_ = q;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      const double flux = 0.5 * (rm.pi_(i) * q(i, j) + rm.pi_(j) * q(j, i));
      rm.q_(i, j) = flux / rm.pi_(i);
      rm.q_(j, i) = flux / rm.pi_(j);
    }
  for (int i = 0; i < 4; ++i) {
    rm.q_(i, i) = 0.0;
    rm.q_(i, i) = -rm.q_.row(i).sum();
  }

  // diag(pi)^{1/2} Q diag(pi)^{-1/2} is symmetric for the canonical form.
  const Eigen::Vector4d sqrt_pi = rm.pi_.cwiseSqrt();
  Eigen::Matrix4d sym = sqrt_pi.asDiagonal() * rm.q_ * sqrt_pi.cwiseInverse().asDiagonal();
  sym = 0.5 * (sym + sym.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> solver(sym);
  if (solver.info() != Eigen::Success)
    throw ValidationError("build_gtr: eigendecomposition failed");
  rm.eigenvalues_ = solver.eigenvalues();
  rm.basis_ = sqrt_pi.cwiseInverse().asDiagonal() * solver.eigenvectors();
  rm.inverse_basis_ = solver.eigenvectors().transpose() * sqrt_pi.asDiagonal();
  return rm;
}

Eigen::Matrix4d RateMatrix::transition_matrix(double t) const {
  if (!(t >= 0.0) || !std::isfinite(t))
    throw ValidationError("transition_matrix: branch length must be finite and >= 0");
  if (t == 0.0) return Eigen::Matrix4d::Identity();
  return basis_ * (eigenvalues_ * t).array().exp().matrix().asDiagonal() * inverse_basis_;
}

}  // namespace dmphy
