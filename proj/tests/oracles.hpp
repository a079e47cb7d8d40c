#pragma once

// Independent reference implementations used only by tests. Each oracle is a
// direct transcription of the defining formula, kept free of the library's
// optimized code paths.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "funcclust/cluster.hpp"
#include "funcclust/gmm.hpp"

namespace oracles {

/// Naive Cox-de Boor recursion straight from the textbook definition,
/// evaluating a single order-k B-spline over an explicit knot vector.
/// The right domain endpoint closes the last non-empty interval.
inline double bspline_naive(const std::vector<double>& knots, int i, int k, double t) {
  const double hi = knots.back();
  if (k == 1) {
    if (t == hi) return knots[i + 1] == hi && knots[i] < hi ? 1.0 : 0.0;
    return knots[i] <= t && t < knots[i + 1] ? 1.0 : 0.0;
  }
  double left = 0.0, right = 0.0;
  const double dl = knots[i + k - 1] - knots[i];
  if (dl > 0.0) left = (t - knots[i]) / dl * bspline_naive(knots, i, k - 1, t);
  const double dr = knots[i + k] - knots[i + 1];
  if (dr > 0.0) right = (knots[i + k] - t) / dr * bspline_naive(knots, i + 1, k - 1, t);
  return left + right;
}

/// Open cubic knot vector matching the library's construction.
inline std::vector<double> cubic_knots(double lo, double hi, int dim) {
  std::vector<double> knots(4, lo);
  for (int i = 1; i <= dim - 4; ++i)
    knots.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(dim - 3));
  knots.insert(knots.end(), 4, hi);
  return knots;
}

/// Dense-arithmetic mixture calculations with explicit determinants and
/// inverses; usable only for well-conditioned covariances.
inline double naive_log_density(const Eigen::VectorXd& b, const funcclust::GmmParams& p) {
  const int d = p.dim();
  double f = 0.0;
  for (int c = 0; c < p.components(); ++c) {
    const Eigen::MatrixXd& cov = p.covariances[static_cast<std::size_t>(c)];
    const Eigen::VectorXd diff = b - p.means.row(c).transpose();
    const double quad = diff.dot(cov.inverse() * diff);
    const double norm = std::pow(2.0 * M_PI, -0.5 * d) / std::sqrt(cov.determinant());
    f += p.weights[c] * norm * std::exp(-0.5 * quad);
  }
  return std::log(f);
}

inline Eigen::MatrixXd naive_responsibilities(const Eigen::MatrixXd& coeffs,
                                              const funcclust::GmmParams& p) {
  const int n = static_cast<int>(coeffs.rows());
  const int d = p.dim();
  const int g = p.components();
  Eigen::MatrixXd tau(n, g);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd b = coeffs.row(i).transpose();
    double f = 0.0;
    for (int c = 0; c < g; ++c) {
      const Eigen::MatrixXd& cov = p.covariances[static_cast<std::size_t>(c)];
      const Eigen::VectorXd diff = b - p.means.row(c).transpose();
      const double quad = diff.dot(cov.inverse() * diff);
      const double phi =
          std::pow(2.0 * M_PI, -0.5 * d) / std::sqrt(cov.determinant()) * std::exp(-0.5 * quad);
      tau(i, c) = p.weights[c] * phi;
      f += tau(i, c);
    }
    tau.row(i) /= f;
  }
  return tau;
}

/// Brute-force adjusted Rand index: iterate every item pair, count the four
/// agreement cells, then apply the expected-index correction.
inline double ari_pair_counting(const std::vector<int>& a, const std::vector<int>& b) {
  const int n = static_cast<int>(a.size());
  std::int64_t both = 0, only_a = 0, only_b = 0, neither = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const bool same_a = a[i] == a[j];
      const bool same_b = b[i] == b[j];
      if (same_a && same_b)
        ++both;
      else if (same_a)
        ++only_a;
      else if (same_b)
        ++only_b;
      else
        ++neither;
    }
  }
  const double pairs = static_cast<double>(both + only_a + only_b + neither);
  const double sum_a = static_cast<double>(both + only_a);
  const double sum_b = static_cast<double>(both + only_b);
  const double expected = sum_a * sum_b / pairs;
  const double maximum = 0.5 * (sum_a + sum_b);
  // maximum == expected only when both partitions are all-singletons or both
  // are one cluster, which are identical partitions.
  if (maximum == expected) return 1.0;
  return (static_cast<double>(both) - expected) / (maximum - expected);
}

/// Composite Simpson quadrature of exp(log_density) for one-dimensional
/// mixtures.
template <typename LogDensity>
double simpson_mass(LogDensity&& logf, double lo, double hi, int intervals) {
  if (intervals % 2 != 0) ++intervals;
  const double h = (hi - lo) / intervals;
  double acc = std::exp(logf(lo)) + std::exp(logf(hi));
  for (int k = 1; k < intervals; ++k)
    acc += (k % 2 == 1 ? 4.0 : 2.0) * std::exp(logf(lo + k * h));
  return acc * h / 3.0;
}

}  // namespace oracles
