#pragma once

// Shared test-side oracles. Everything here recomputes quantities through
// routes independent of the library implementation: truncated series instead
// of eigendecompositions, quadrature instead of Monte Carlo or incomplete
// gamma functions, exhaustive enumeration instead of recursions.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "dmphy/alignment.hpp"
#include "dmphy/cluster.hpp"
#include "dmphy/tree.hpp"

namespace dmphy::testing {

// exp(Q t) by truncated Taylor series.
inline Eigen::Matrix4d taylor_expm(const Eigen::Matrix4d& q, double t, int terms = 30) {
  Eigen::Matrix4d sum = Eigen::Matrix4d::Identity();
  Eigen::Matrix4d power = Eigen::Matrix4d::Identity();
  for (int k = 1; k <= terms; ++k) {
    power = (power * (q * t) / k).eval();
    sum += power;
  }
  return sum;
}

// Series with scaling-and-squaring, usable at any t (the raw series loses all
// precision once |Q| t is large).
inline Eigen::Matrix4d series_expm(const Eigen::Matrix4d& q, double t) {
  int squarings = 0;
  double scaled = t;
  while (std::abs(scaled) * q.cwiseAbs().maxCoeff() > 0.5) {
    scaled *= 0.5;
    ++squarings;
  }
  Eigen::Matrix4d result = taylor_expm(q, scaled, 30);
  for (int i = 0; i < squarings; ++i) result = (result * result).eval();
  return result;
}

// Gauss-Legendre nodes and weights on [-1,1] via the Golub-Welsch
// tridiagonal eigenproblem.
struct GaussLegendre {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

inline GaussLegendre gauss_legendre(int n) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double b = i / std::sqrt(4.0 * i * i - 1.0);
    jacobi(i, i - 1) = b;
    jacobi(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  GaussLegendre gl;
  gl.nodes = solver.eigenvalues();
  gl.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    const double v = solver.eigenvectors()(0, i);
    gl.weights(i) = 2.0 * v * v;
  }
  return gl;
}

// Integrates f over [a,b] with an n-node Gauss-Legendre rule.
template <typename F>
double integrate(const F& f, double a, double b, const GaussLegendre& gl) {
  double sum = 0.0;
  for (int i = 0; i < gl.nodes.size(); ++i) {
    const double x = 0.5 * (a + b) + 0.5 * (b - a) * gl.nodes(i);
    sum += gl.weights(i) * f(x);
  }
  return 0.5 * (b - a) * sum;
}

// Lower incomplete gamma(a, x) / Gamma(a) by quadrature alone:
// gamma(a,x) = (1/a) * Int_0^{x^a} exp(-t^{1/a}) dt  (substitution x = t^{1/a}),
// which has a smooth integrand for every a > 0.
inline double quad_gamma_p(double a, double x, const GaussLegendre& gl) {
  if (x <= 0.0) return 0.0;
  const double integral =
      integrate([&](double t) { return std::exp(-std::pow(t, 1.0 / a)); }, 0.0,
                std::pow(x, a), gl) /
      a;
  return integral / std::exp(std::lgamma(a));
}

// Quantile of Gamma(shape a, rate 1) by bisection on quad_gamma_p.
inline double quad_gamma_quantile(double a, double p, const GaussLegendre& gl) {
  double lo = 0.0, hi = 1.0;
  while (quad_gamma_p(a, hi, gl) < p) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (quad_gamma_p(a, mid, gl) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Discrete-gamma category scalers by quadrature: conditional means of the
// equal-probability slices of Gamma(shape, rate).
inline std::vector<double> quad_gamma_scalers(int n, double shape, double rate,
                                              const GaussLegendre& gl) {
  std::vector<double> scalers(n);
  double prev_mass = 0.0;
  for (int m = 1; m <= n; ++m) {
    double mass;  // P(shape+1, rate * q_m)
    if (m == n) {
      mass = 1.0;
    } else {
      const double q = quad_gamma_quantile(shape, static_cast<double>(m) / n, gl);
      mass = quad_gamma_p(shape + 1.0, q, gl);
    }
    scalers[m - 1] = n * (shape / rate) * (mass - prev_mass);
    prev_mass = mass;
  }
  return scalers;
}

// E_l[exp(Q xi l)] for exponential branch lengths (mean m), by quadrature with
// the substitution u = 1 - exp(-l/m).
inline Eigen::Matrix4d quad_exponential_average(const Eigen::Matrix4d& q, double xi, double mean,
                                                const GaussLegendre& gl) {
  Eigen::Matrix4d sum = Eigen::Matrix4d::Zero();
  for (int i = 0; i < gl.nodes.size(); ++i) {
    const double u = 0.5 + 0.5 * gl.nodes(i);  // (0,1)
    const double l = -mean * std::log1p(-u);
    sum += 0.5 * gl.weights(i) * series_expm(q, xi * l);
  }
  return sum;
}

// Same for log-normal branch lengths with given mean and coefficient of
// variation, integrating over the underlying normal on [-z_max, z_max].
inline Eigen::Matrix4d quad_lognormal_average(const Eigen::Matrix4d& q, double xi, double mean,
                                              double cv, const GaussLegendre& gl,
                                              double z_max = 10.0) {
  const double sigma2 = std::log1p(cv * cv);
  const double mu = std::log(mean) - 0.5 * sigma2;
  const double sigma = std::sqrt(sigma2);
  Eigen::Matrix4d sum = Eigen::Matrix4d::Zero();
  double mass = 0.0;
  for (int i = 0; i < gl.nodes.size(); ++i) {
    const double z = z_max * gl.nodes(i);
    const double phi = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    const double l = std::exp(mu + sigma * z);
    sum += z_max * gl.weights(i) * phi * series_expm(q, xi * l);
    mass += z_max * gl.weights(i) * phi;
  }
  return sum / mass;  // renormalize the truncated normal mass
}

// Exhaustive-state likelihood: sums over every internal-state combination.
// Matrices are supplied per (child node, category); the root prior is pi.
inline double exhaustive_log_likelihood(
    const Topology& t, const Alignment& a,
    const std::function<Eigen::Matrix4d(int child_node, int category)>& matrix_of,
    const Eigen::Vector4d& pi, int n_categories) {
  std::vector<int> internal_nodes;
  for (int v = 0; v < t.node_count(); ++v)
    if (!t.node(v).is_tip()) internal_nodes.push_back(v);
  const int m = static_cast<int>(internal_nodes.size());
  std::vector<int> node_state(t.node_count(), -1);
  std::vector<int> row_of_tip(t.node_count(), -1);
  for (int s = 0; s < t.tip_count(); ++s)
    row_of_tip[t.tips()[s]] = a.row_of(t.tip_label(s));

  double total = 0.0;
  for (int p = 0; p < a.pattern_count(); ++p) {
    double site_sum = 0.0;
    for (int cat = 0; cat < n_categories; ++cat) {
      double cat_sum = 0.0;
      std::vector<int> combo(m, 0);
      for (;;) {
        for (int i = 0; i < m; ++i) node_state[internal_nodes[i]] = combo[i];
        double term = pi(node_state[t.root()]);
        for (int v = 0; v < t.node_count() && term != 0.0; ++v) {
          if (v == t.root()) continue;
          const Eigen::Matrix4d mat = matrix_of(v, cat);
          const int parent_state = node_state[t.node(v).parent];
          if (t.node(v).is_tip()) {
            double tip_sum = 0.0;
            const NucleotideVector nv(a.patterns(row_of_tip[v], p));
            for (int x = 0; x < 4; ++x)
              if (nv.has(x)) tip_sum += mat(parent_state, x);
            term *= tip_sum;
          } else {
            term *= mat(parent_state, node_state[v]);
          }
        }
        cat_sum += term;
        int i = 0;
        while (i < m && ++combo[i] == 4) combo[i++] = 0;
        if (i == m) break;
      }
      site_sum += cat_sum;
    }
    total += a.weights(p) * std::log(site_sum / n_categories);
  }
  return total;
}

// Every partition of t's tips into clades, as canonical assignments.
inline std::vector<ClusterAssignment> enumerate_clade_partitions(const Topology& t) {
  const auto clades = t.clade_tip_slots();
  // Partitions of each subtree as lists of node ids acting as cluster roots.
  std::vector<std::vector<std::vector<int>>> parts(t.node_count());
  for (const int v : t.postorder()) {
    parts[v].push_back({v});
    if (t.node(v).is_tip()) continue;
    for (const auto& left : parts[t.node(v).children[0]])
      for (const auto& right : parts[t.node(v).children[1]]) {
        std::vector<int> merged = left;
        merged.insert(merged.end(), right.begin(), right.end());
        parts[v].push_back(std::move(merged));
      }
  }
  std::vector<ClusterAssignment> result;
  for (const auto& roots : parts[t.root()]) {
    std::vector<int> labels(t.tip_count(), 0);
    int k = 0;
    for (const int r : roots) {
      ++k;
      for (const int slot : clades[r]) labels[slot] = k;
    }
    result.emplace_back(std::move(labels));
  }
  return result;
}

// Patristic distance via explicit root paths (shared-prefix subtraction).
inline Eigen::MatrixXd path_patristic(const Topology& t) {
  const int n = t.tip_count();
  std::vector<std::vector<int>> path(n);        // tip -> root node sequence
  std::vector<std::vector<double>> updist(n);   // cumulative length along path
  for (int s = 0; s < n; ++s) {
    int v = t.tips()[s];
    double d = 0.0;
    while (v >= 0) {
      path[s].push_back(v);
      updist[s].push_back(d);
      if (t.node(v).parent >= 0) d += t.node(v).length;
      v = t.node(v).parent;
    }
  }
  Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      // First common node on the two root paths.
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < path[i].size(); ++a)
        for (std::size_t b = 0; b < path[j].size(); ++b)
          if (path[i][a] == path[j][b]) {
            best = std::min(best, updist[i][a] + updist[j][b]);
          }
      dist(i, j) = dist(j, i) = best;
    }
  return dist;
}

// Reorders vectors/matrices quoted in A,T,C,G state order into the canonical
// A,C,G,T order used throughout the library.
inline Eigen::Vector4d atcg_to_acgt(const Eigen::Vector4d& v) {
  static const int gather[4] = {0, 2, 3, 1};
  Eigen::Vector4d out;
  for (int i = 0; i < 4; ++i) out(i) = v(gather[i]);
  return out;
}

inline Eigen::Matrix4d atcg_to_acgt(const Eigen::Matrix4d& m) {
  static const int gather[4] = {0, 2, 3, 1};
  Eigen::Matrix4d out;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) out(i, j) = m(gather[i], gather[j]);
  return out;
}

// Published HIV-1 subtype B GTR estimates (canonical A,C,G,T order): the pair
// used when generating synthetic data.
inline Eigen::Matrix4d hiv_q_generation() {
  Eigen::Matrix4d q;
  q << -0.83708096, 0.04319486, 0.12127074, 0.67261536,
        0.07657272, -0.82554421, 0.66140131, 0.08757018,
        0.27820934, 0.85593111, -1.18569748, 0.05155703,
        1.19236359, 0.08757018, 0.03983952, -1.31977330;
  return atcg_to_acgt(q);
}

inline Eigen::Vector4d hiv_pi_generation() {
  return atcg_to_acgt(Eigen::Vector4d(0.39, 0.22, 0.17, 0.22));
}

// An independently estimated pair, deliberately different from the
// generation values; used as the inference model in end-to-end runs.
inline Eigen::Matrix4d hiv_q_inference() {
  Eigen::Matrix4d q;
  q << -0.79633415, 0.04560603, 0.10852696, 0.64220116,
        0.08801344, -0.76352160, 0.59189771, 0.08361045,
        0.31977658, 0.90370975, -1.27271206, 0.04922573,
        1.37051455, 0.09245841, 0.03565297, -1.49862593;
  return atcg_to_acgt(q);
}

inline Eigen::Vector4d hiv_pi_inference() {
  return atcg_to_acgt(Eigen::Vector4d(0.4298969, 0.2227602, 0.1459, 0.2014428));
}

}  // namespace dmphy::testing
