#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "funcclust/basis.hpp"
#include "funcclust/cluster.hpp"
#include "funcclust/errors.hpp"
#include "funcclust/projection.hpp"
#include "funcclust/rng.hpp"
#include "funcclust/threads.hpp"

namespace funcclust {

/// Configuration for simulating a mixture of basis-coefficient populations
/// observed through a grid with additive Gaussian noise.
struct GeneratorConfig {
  BasisSystem basis;
  SampleGrid grid;
  int n = 0;
  Eigen::MatrixXd component_means;              // g x d
  std::vector<Eigen::MatrixXd> component_covs;  // g matrices, d x d PSD
  Eigen::VectorXd weights;                      // g, used only when !equal_count
  bool equal_count = true;  // round-robin assignment so per-component counts are exact
  double noise_sd = 0.0;
  std::uint64_t seed = 0;

  int components() const { return static_cast<int>(component_means.rows()); }

  void validate() const {
    const int g = components();
    const int d = static_cast<int>(component_means.cols());
    if (n < 1) throw ConfigError("generator needs n >= 1");
    if (g < 1) throw ConfigError("generator needs at least one component");
    if (d != basis.dim()) throw ConfigError("component means do not match basis dimension");
    if (static_cast<int>(component_covs.size()) != g)
      throw ConfigError("component covariance count does not match component count");
    for (const auto& v : component_covs)
      if (v.rows() != d || v.cols() != d)
        throw ConfigError("component covariance has wrong shape");
    if (!equal_count) {
      if (weights.size() != g) throw ConfigError("weights do not match component count");
      if (weights.minCoeff() <= 0.0) throw ConfigError("weights must be positive");
      if (std::abs(weights.sum() - 1.0) > 1e-12) throw ConfigError("weights must sum to 1");
    }
    if (!(noise_sd >= 0.0)) throw ConfigError("noise standard deviation must be >= 0");
  }
};

/// A simulated dataset together with its generative labels and coefficients.
struct LabeledDataset {
  FunctionalDataset data;
  Partition truth;
  Eigen::MatrixXd true_coeffs;  // n x d
};

namespace detail {

/// Symmetric PSD square root via eigendecomposition; rejects matrices with a
/// meaningfully negative eigenvalue.
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& v, int component) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (v + v.transpose()));
  if (es.info() != Eigen::Success)
    throw ConfigError("eigendecomposition of covariance " + std::to_string(component + 1) +
                      " failed");
  Eigen::VectorXd ev = es.eigenvalues();
  const double floor = -1e-10 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  for (Eigen::Index k = 0; k < ev.size(); ++k) {
    if (ev[k] < floor)
      throw ConfigError("component covariance " + std::to_string(component + 1) +
                        " is not positive semi-definite");
    if (ev[k] < 0.0) ev[k] = 0.0;
  }
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

/// Simulate the dataset described by `config`.
///
/// Function i works entirely from child stream i of config.seed: first the
/// component draw (skipped in equal-count mode, where components are assigned
/// round-robin), then d normals for the coefficients, then one normal per grid
/// point for the noise. Generation per function is order-independent, so
/// parallel runs match sequential ones byte for byte.
inline LabeledDataset generate(const GeneratorConfig& config) {
  config.validate();
  const int n = config.n;
  const int g = config.components();
  const int d = config.basis.dim();
  const int m = config.grid.size();

  if (config.equal_count && n % g != 0)
    std::cerr << "funcclust: warning: n = " << n << " not divisible by g = " << g
              << "; remainder goes to the lowest-indexed components\n";

  std::vector<Eigen::MatrixXd> sqrt_covs;
  sqrt_covs.reserve(static_cast<std::size_t>(g));
  for (int c = 0; c < g; ++c)
    sqrt_covs.push_back(detail::psd_sqrt(config.component_covs[static_cast<std::size_t>(c)], c));

  Eigen::MatrixXd design(m, d);
  for (int j = 0; j < m; ++j)
    design.row(j) = config.basis.evaluate(config.grid.point(j)).transpose();

  Eigen::MatrixXd values(n, m);
  Eigen::MatrixXd true_coeffs(n, d);
  std::vector<int> labels(static_cast<std::size_t>(n));

  const Rng root(config.seed);
  parallel_for(0, static_cast<std::size_t>(n), [&](std::size_t i) {
    Rng rng = root.child(i);
    int c;
    if (config.equal_count) {
      c = static_cast<int>(i) % g;
    } else {
      const double u = rng.uniform();
      double acc = 0.0;
      c = g - 1;
      for (int k = 0; k < g; ++k) {
        acc += config.weights[k];
        if (u < acc) {
          c = k;
          break;
        }
      }
    }
    labels[i] = c + 1;

    Eigen::VectorXd z(d);
    for (int k = 0; k < d; ++k) z[k] = rng.normal();
    const Eigen::VectorXd b =
        config.component_means.row(c).transpose() + sqrt_covs[static_cast<std::size_t>(c)] * z;
    true_coeffs.row(static_cast<Eigen::Index>(i)) = b.transpose();

    Eigen::VectorXd obs = design * b;
    if (config.noise_sd > 0.0)
      for (int j = 0; j < m; ++j) obs[j] += config.noise_sd * rng.normal();
    values.row(static_cast<Eigen::Index>(i)) = obs.transpose();
  });

  return LabeledDataset{
      FunctionalDataset::rectangular(config.grid, std::move(values)),
      Partition(std::move(labels), g),
      std::move(true_coeffs),
  };
}

namespace detail {

inline void warn_unlisted(const char* study, const char* name, int value,
                          std::initializer_list<int> listed) {
  for (int v : listed)
    if (v == value) return;
  std::cerr << "funcclust: warning: " << study << " " << name << " = " << value
            << " is outside the study's standard sizes\n";
}

}  // namespace detail

/// First simulation design: quartic monomial basis on [-1, 1], three
/// components separated along the linear coefficient, V_c = 0.05^2 I,
/// sigma = 0.1, equal counts.
inline GeneratorConfig s1_config(int m, int n, std::uint64_t seed) {
  detail::warn_unlisted("s1", "m", m, {10, 20, 50, 100});
  detail::warn_unlisted("s1", "n", n, {30, 60, 150, 300});
  const Interval domain{-1.0, 1.0};
  const int d = 5;
  GeneratorConfig config{
      BasisSystem(BasisKind::monomial, d, domain),
      SampleGrid::uniform(domain, m),
  };
  config.n = n;
  config.component_means = Eigen::MatrixXd::Zero(3, d);
  config.component_means(1, 1) = 1.0;
  config.component_means(2, 1) = -1.0;
  config.component_covs.assign(3, 0.05 * 0.05 * Eigen::MatrixXd::Identity(d, d));
  config.weights = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
  config.equal_count = true;
  config.noise_sd = 0.1;
  config.seed = seed;
  return config;
}

/// Second simulation design: nine Fourier bases on [0, 2*pi], five components
/// separated along the first two coefficients, V_c = 0.25^2 I, sigma = 0.5,
/// equal counts.
inline GeneratorConfig s2_config(int m, int n, std::uint64_t seed) {
  detail::warn_unlisted("s2", "m", m, {50, 100, 200, 500});
  detail::warn_unlisted("s2", "n", n, {250, 500, 1000, 2500});
  const Interval domain{0.0, 6.283185307179586476925287};
  const int d = 9;
  GeneratorConfig config{
      BasisSystem(BasisKind::fourier, d, domain),
      SampleGrid::uniform(domain, m),
  };
  config.n = n;
  config.component_means = Eigen::MatrixXd::Zero(5, d);
  config.component_means(1, 0) = 1.0;
  config.component_means(2, 0) = -1.0;
  config.component_means(3, 1) = 1.0;
  config.component_means(4, 1) = -1.0;
  config.component_covs.assign(5, 0.25 * 0.25 * Eigen::MatrixXd::Identity(d, d));
  config.weights = Eigen::VectorXd::Constant(5, 0.2);
  config.equal_count = true;
  config.noise_sd = 0.5;
  config.seed = seed;
  return config;
}

}  // namespace funcclust
