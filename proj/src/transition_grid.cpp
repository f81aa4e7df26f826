#include "dmphy/transition_grid.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "dmphy/errors.hpp"
#include "dmphy/rng.hpp"

namespace dmphy {

namespace {

Eigen::VectorXd grid_means(double center, double radius_fraction, int grid_size) {
  Eigen::VectorXd means(grid_size);
  if (grid_size == 1) {
    means(0) = center;
    return means;
  }
  const double lo = center * (1.0 - radius_fraction);
  const double hi = center * (1.0 + radius_fraction);
  for (int g = 0; g < grid_size; ++g)
    means(g) = lo + (hi - lo) * g / (grid_size - 1);
  return means;
}

}  // namespace

MarginalTransitionGrid build_marginal_grid(const RateMatrix& rm, const DiscreteGamma& dg,
                                           Regime regime, double center_mean,
                                           double radius_fraction, int grid_size,
                                           std::int64_t mc_samples, std::uint64_t seed) {
  if (!(center_mean > 0.0)) throw ValidationError("build_marginal_grid: center mean must be positive");
  if (grid_size < 1) throw ValidationError("build_marginal_grid: grid size must be >= 1");
  if (mc_samples < 1) throw ValidationError("build_marginal_grid: need at least one Monte Carlo sample");
  if (!(radius_fraction >= 0.0 && radius_fraction < 1.0))
    throw ValidationError("build_marginal_grid: radius fraction must lie in [0,1)");

  const int n_cat = dg.n_categories;
  MarginalTransitionGrid grid;
  grid.regime = regime;
  grid.means = grid_means(center_mean, radius_fraction, grid_size);
  grid.n_categories = n_cat;
  grid.mc_samples = mc_samples;
  grid.matrices.resize(static_cast<std::size_t>(grid_size) * n_cat);
  grid.std_errors.resize(static_cast<std::size_t>(grid_size) * n_cat);

  const Eigen::Vector4d lambda = rm.eigenvalues();
  const Rng base(seed);
  const Rng regime_stream = base.fork(static_cast<std::uint64_t>(regime));

  for (int g = 0; g < grid_size; ++g) {
    Rng rng = regime_stream.fork(static_cast<std::uint64_t>(g));
    const double mean_g = grid.means(g);

    // In the eigenbasis exp(Q xi l) = B diag(exp(lambda_j xi l)) B^{-1}, so the
    // Monte Carlo average and its second moments reduce to scalar moments of
    // e_j = exp(lambda_j xi l): first moments give the averaged matrix, pair
    // moments give exact entrywise standard errors. One pass over the draws
    // serves every category (common random numbers across categories).
    std::vector<std::array<double, 4>> m1(n_cat, {0, 0, 0, 0});
    std::vector<std::array<double, 10>> m2(n_cat, {0, 0, 0, 0, 0, 0, 0, 0, 0, 0});

    for (std::int64_t i = 0; i < mc_samples; ++i) {
      const double unit_draw = regime == Regime::within ? rng.exponential(1.0)
                                                        : rng.lognormal_mean_cv(1.0, 1.0);
      const double length = mean_g * unit_draw;
      for (int m = 0; m < n_cat; ++m) {
        const double scaled = length * dg.scalers[m];
        std::array<double, 4> e;
        for (int j = 0; j < 4; ++j) e[j] = std::exp(lambda(j) * scaled);
        int pair = 0;
        for (int j = 0; j < 4; ++j) {
          m1[m][j] += e[j];
          for (int k = j; k < 4; ++k) m2[m][pair++] += e[j] * e[k];
        }
      }
    }

    for (int m = 0; m < n_cat; ++m) {
      Eigen::Vector4d mean_e;
      for (int j = 0; j < 4; ++j) mean_e(j) = m1[m][j] / mc_samples;
      Eigen::Matrix4d pair_e = Eigen::Matrix4d::Zero();
      int pair = 0;
      for (int j = 0; j < 4; ++j)
        for (int k = j; k < 4; ++k) {
          pair_e(j, k) = pair_e(k, j) = m2[m][pair++] / mc_samples;
        }

      Eigen::Matrix4d avg = rm.basis() * mean_e.asDiagonal() * rm.inverse_basis();
      avg = avg.cwiseMax(0.0);  // clear sub-epsilon reconstruction negatives

      Eigen::Matrix4d se;
      for (int x = 0; x < 4; ++x)
        for (int y = 0; y < 4; ++y) {
          Eigen::Vector4d c;
          for (int j = 0; j < 4; ++j) c(j) = rm.basis()(x, j) * rm.inverse_basis()(j, y);
          const double first = c.dot(mean_e);
          const double second = c.dot(pair_e * c);
          double var = second - first * first;
          if (mc_samples > 1) var *= static_cast<double>(mc_samples) / (mc_samples - 1);
          se(x, y) = std::sqrt(std::max(var, 0.0) / mc_samples);
        }

      grid.matrices[static_cast<std::size_t>(g) * n_cat + m] = avg;
      grid.std_errors[static_cast<std::size_t>(g) * n_cat + m] = se;
    }
  }
  return grid;
}

namespace {

struct Fingerprinter {
  std::uint64_t state = 0xcbf29ce484222325ull;
  void add_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state ^= p[i];
      state *= 0x100000001b3ull;
    }
  }
  void add(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    add_bytes(&bits, sizeof bits);
  }
  void add(std::uint64_t v) { add_bytes(&v, sizeof v); }
  void add(std::int64_t v) { add_bytes(&v, sizeof v); }
  void add(int v) { add(static_cast<std::int64_t>(v)); }
};

constexpr char kGridMagic[8] = {'D', 'M', 'G', 'R', 'I', 'D', '0', '1'};

}  // namespace

std::uint64_t grid_fingerprint(const RateMatrix& rm, const DiscreteGamma& dg, Regime regime,
                               double center_mean, double radius_fraction, int grid_size,
                               std::int64_t mc_samples, std::uint64_t seed) {
  Fingerprinter fp;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) fp.add(rm.q()(i, j));
  for (int i = 0; i < 4; ++i) fp.add(rm.pi()(i));
  fp.add(dg.n_categories);
  for (const double s : dg.scalers) fp.add(s);
  fp.add(static_cast<int>(regime));
  fp.add(center_mean);
  fp.add(radius_fraction);
  fp.add(grid_size);
  fp.add(mc_samples);
  fp.add(seed);
  return fp.state;
}

void save_grid(const MarginalTransitionGrid& grid, std::uint64_t fingerprint,
               const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write grid cache: " + path);
  out.write(kGridMagic, sizeof kGridMagic);
  auto put_u64 = [&](std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); };
  put_u64(fingerprint);
  put_u64(static_cast<std::uint64_t>(grid.regime));
  put_u64(static_cast<std::uint64_t>(grid.size()));
  put_u64(static_cast<std::uint64_t>(grid.n_categories));
  put_u64(static_cast<std::uint64_t>(grid.mc_samples));
  auto put_matrix = [&](const Eigen::Matrix4d& mat) {
    out.write(reinterpret_cast<const char*>(mat.data()), 16 * sizeof(double));
  };
  out.write(reinterpret_cast<const char*>(grid.means.data()),
            grid.means.size() * static_cast<std::streamsize>(sizeof(double)));
  for (const auto& mat : grid.matrices) put_matrix(mat);
  for (const auto& mat : grid.std_errors) put_matrix(mat);
  if (!out) throw std::runtime_error("failed writing grid cache: " + path);
}

std::optional<MarginalTransitionGrid> load_grid(const std::string& path,
                                                std::uint64_t expected_fingerprint) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kGridMagic, sizeof magic) != 0) return std::nullopt;
  auto get_u64 = [&] {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
  };
  const std::uint64_t fingerprint = get_u64();
  if (fingerprint != expected_fingerprint) return std::nullopt;

  MarginalTransitionGrid grid;
  grid.regime = static_cast<Regime>(get_u64());
  const auto grid_size = static_cast<int>(get_u64());
  grid.n_categories = static_cast<int>(get_u64());
  grid.mc_samples = static_cast<std::int64_t>(get_u64());
  if (!in || grid_size < 1 || grid.n_categories < 1) return std::nullopt;
  grid.means.resize(grid_size);
  in.read(reinterpret_cast<char*>(grid.means.data()),
          grid_size * static_cast<std::streamsize>(sizeof(double)));
  const std::size_t count = static_cast<std::size_t>(grid_size) * grid.n_categories;
  grid.matrices.resize(count);
  grid.std_errors.resize(count);
  for (auto& mat : grid.matrices) in.read(reinterpret_cast<char*>(mat.data()), 16 * sizeof(double));
  for (auto& mat : grid.std_errors) in.read(reinterpret_cast<char*>(mat.data()), 16 * sizeof(double));
  if (!in) return std::nullopt;
  return grid;
}

}  // namespace dmphy
