#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "funcclust/errors.hpp"
#include "funcclust/projection.hpp"
#include "funcclust/rng.hpp"
#include "funcclust/threads.hpp"

namespace funcclust {

/// Parameters of a g-component Gaussian mixture over d-dimensional vectors.
struct GmmParams {
  Eigen::VectorXd weights;                 // g, positive, sums to 1
  Eigen::MatrixXd means;                   // g x d, row c = mu_c
  std::vector<Eigen::MatrixXd> covariances;  // g matrices, d x d, symmetric PD

  int components() const { return static_cast<int>(weights.size()); }
  int dim() const { return static_cast<int>(means.cols()); }

  void validate() const {
    const int g = components();
    const int d = dim();
    if (g < 1) throw ConfigError("mixture needs at least one component");
    if (means.rows() != g || static_cast<int>(covariances.size()) != g)
      throw ConfigError("mixture parameter shapes disagree");
    double sum = 0.0;
    for (int c = 0; c < g; ++c) {
      if (!(weights[c] > 0.0)) throw ConfigError("component weights must be positive");
      sum += weights[c];
      const Eigen::MatrixXd& cov = covariances[static_cast<std::size_t>(c)];
      if (cov.rows() != d || cov.cols() != d)
        throw ConfigError("covariance " + std::to_string(c + 1) + " has wrong shape");
      if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + cov.cwiseAbs().maxCoeff()))
        throw ConfigError("covariance " + std::to_string(c + 1) + " is not symmetric");
    }
    if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("component weights must sum to 1");
  }
};

/// Posterior probabilities tau_ic, one row per observation; rows sum to 1.
struct ResponsibilityMatrix {
  Eigen::MatrixXd values;  // n x g

  int size() const { return static_cast<int>(values.rows()); }
  int components() const { return static_cast<int>(values.cols()); }
};

struct EmConfig {
  double tol = 0.01;       // stop when the log-likelihood increment falls below this
  int max_iter = 500;
  int restarts = 10;
  std::uint64_t seed = 0;
  double ridge = 1e-6;     // initial ridge factor for covariance repair
};

struct FitReport {
  GmmParams params;
  std::vector<double> loglik_trace;  // one entry per parameter iterate, non-decreasing
  int iterations = 0;                // EM iterations performed
  bool converged = false;
  int restart_index = 0;             // which initialization won
  ResponsibilityMatrix responsibilities;
  std::uint64_t seed = 0;

  double loglik() const { return loglik_trace.back(); }
};

namespace detail {

/// Per-component Cholesky factors of a mixture, for density evaluation.
class MixtureEvaluator {
 public:
  explicit MixtureEvaluator(const GmmParams& params)
      : g_(params.components()), d_(params.dim()), means_(params.means) {
    factors_.reserve(static_cast<std::size_t>(g_));
    log_weight_norm_.resize(g_);
    const double log2pi = 1.837877066409345483560659;
    for (int c = 0; c < g_; ++c) {
      Eigen::LLT<Eigen::MatrixXd> llt(params.covariances[static_cast<std::size_t>(c)]);
      if (llt.info() != Eigen::Success)
        throw SingularCovarianceError("covariance of component " + std::to_string(c + 1) +
                                      " is not positive-definite");
      double log_det = 0.0;
      const auto& l = llt.matrixLLT();
      for (int k = 0; k < d_; ++k) log_det += 2.0 * std::log(l(k, k));
      log_weight_norm_[c] = std::log(params.weights[c]) - 0.5 * (d_ * log2pi + log_det);
      factors_.push_back(std::move(llt));
    }
  }

  int components() const { return g_; }

  /// log(pi_c * phi(b; mu_c, Sigma_c)) for all c into `out`.
  void log_weighted_components(const Eigen::VectorXd& b, Eigen::VectorXd& out) const {
    for (int c = 0; c < g_; ++c) {
      Eigen::VectorXd y = b - means_.row(c).transpose();
      factors_[static_cast<std::size_t>(c)].matrixL().solveInPlace(y);
      out[c] = log_weight_norm_[c] - 0.5 * y.squaredNorm();
    }
  }

  /// log f(b; psi) = logsumexp_c of the weighted component log-densities.
  double log_density(const Eigen::VectorXd& b) const {
    Eigen::VectorXd logc(g_);
    log_weighted_components(b, logc);
    const double m = logc.maxCoeff();
    double s = 0.0;
    for (int c = 0; c < g_; ++c) s += std::exp(logc[c] - m);
    return m + std::log(s);
  }

 private:
  int g_;
  int d_;
  Eigen::MatrixXd means_;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> factors_;
  Eigen::VectorXd log_weight_norm_;
};

}  // namespace detail

/// log f(b; psi), computed through per-component Cholesky factors.
inline double log_density(const Eigen::VectorXd& point, const GmmParams& params) {
  params.validate();
  if (point.size() != params.dim()) throw ConfigError("point dimension does not match mixture");
  return detail::MixtureEvaluator(params).log_density(point);
}

/// E-step over a coefficient matrix: responsibilities and the log-likelihood
/// sum_i log f(b_i; psi). All arithmetic is done in log space.
inline std::pair<ResponsibilityMatrix, double> e_step(const Eigen::MatrixXd& coeffs,
                                                      const GmmParams& params) {
  if (coeffs.cols() != params.dim())
    throw ConfigError("coefficient dimension does not match mixture");
  const detail::MixtureEvaluator eval(params);
  const int n = static_cast<int>(coeffs.rows());
  const int g = params.components();
  ResponsibilityMatrix resp;
  resp.values.resize(n, g);
  Eigen::VectorXd row_loglik(n);
  Eigen::VectorXd logc(g);
  for (int i = 0; i < n; ++i) {
    eval.log_weighted_components(coeffs.row(i).transpose(), logc);
    const double m = logc.maxCoeff();
    double s = 0.0;
    for (int c = 0; c < g; ++c) s += std::exp(logc[c] - m);
    const double lse = m + std::log(s);
    for (int c = 0; c < g; ++c) resp.values(i, c) = std::exp(logc[c] - lse);
    row_loglik[i] = lse;
  }
  double loglik = 0.0;
  for (int i = 0; i < n; ++i) loglik += row_loglik[i];
  return {std::move(resp), loglik};
}

inline std::pair<ResponsibilityMatrix, double> e_step(const CoefficientMatrix& coeffs,
                                                      const GmmParams& params) {
  return e_step(coeffs.coeffs(), params);
}

/// Weighted-moment M-step. Covariances are symmetrized and, if a Cholesky
/// factorization fails, repaired by adding lambda * tr(Sigma)/d * I with
/// lambda starting at `ridge` and doubling up to 1e-2.
inline GmmParams m_step(const Eigen::MatrixXd& coeffs, const ResponsibilityMatrix& resp,
                        double ridge = 1e-6) {
  const int n = static_cast<int>(coeffs.rows());
  const int d = static_cast<int>(coeffs.cols());
  const int g = resp.components();
  if (resp.size() != n) throw ConfigError("responsibility rows do not match data");

  GmmParams params;
  params.weights.resize(g);
  params.means.resize(g, d);
  params.covariances.assign(static_cast<std::size_t>(g), Eigen::MatrixXd());

  const double starvation = 10.0 * std::numeric_limits<double>::epsilon() * n;
  for (int c = 0; c < g; ++c) {
    const Eigen::VectorXd tau = resp.values.col(c);
    const double nk = tau.sum();
    if (nk < starvation)
      throw StarvedComponentError("component " + std::to_string(c + 1) +
                                  " starved (responsibility mass " + std::to_string(nk) + ")");
    params.weights[c] = nk / static_cast<double>(n);
    const Eigen::VectorXd mu = (tau.transpose() * coeffs).transpose() / nk;
    params.means.row(c) = mu.transpose();

    Eigen::MatrixXd centered = coeffs.rowwise() - mu.transpose();
    Eigen::MatrixXd cov =
        centered.transpose() * (centered.array().colwise() * tau.array()).matrix() / nk;
    cov = 0.5 * (cov + cov.transpose());

    double lambda = ridge;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    while (llt.info() != Eigen::Success) {
      if (lambda > 1e-2)
        throw SingularCovarianceError("covariance of component " + std::to_string(c + 1) +
                                      " stayed singular after ridge repair");
      const double trace = cov.trace();
      const double scale = trace > 0.0 ? trace / d : 1.0;
      cov += lambda * scale * Eigen::MatrixXd::Identity(d, d);
      lambda *= 2.0;
      llt.compute(cov);
    }
    params.covariances[static_cast<std::size_t>(c)] = std::move(cov);
  }
  params.weights /= params.weights.sum();
  return params;
}

inline GmmParams m_step(const CoefficientMatrix& coeffs, const ResponsibilityMatrix& resp,
                        double ridge = 1e-6) {
  return m_step(coeffs.coeffs(), resp, ridge);
}

namespace detail {

/// k-means++ seeding, Lloyd iterations to convergence, then one
/// hard-assignment M-step. The Lloyd refinement is what makes random
/// restarts competitive with agglomerative preclustering on overlapping
/// mixtures; seeding alone leaves most restarts in poor basins.
inline GmmParams kmeanspp_init(const Eigen::MatrixXd& coeffs, int g, Rng& rng, double ridge) {
  const int n = static_cast<int>(coeffs.rows());
  const int d = static_cast<int>(coeffs.cols());
  std::vector<int> centers;
  centers.reserve(static_cast<std::size_t>(g));
  centers.push_back(static_cast<int>(rng.index_below(static_cast<std::size_t>(n))));

  Eigen::VectorXd dist2 =
      (coeffs.rowwise() - coeffs.row(centers[0])).rowwise().squaredNorm();
  while (static_cast<int>(centers.size()) < g) {
    const double total = dist2.sum();
    int pick;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (int i = 0; i < n; ++i) {
        acc += dist2[i];
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<int>(rng.index_below(static_cast<std::size_t>(n)));
    }
    centers.push_back(pick);
    dist2 = dist2.cwiseMin(
        (coeffs.rowwise() - coeffs.row(pick)).rowwise().squaredNorm());
  }

  Eigen::MatrixXd mu(g, d);
  for (int c = 0; c < g; ++c) mu.row(c) = coeffs.row(centers[static_cast<std::size_t>(c)]);

  std::vector<int> assign(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (coeffs.row(i) - mu.row(0)).squaredNorm();
      for (int c = 1; c < g; ++c) {
        const double dd = (coeffs.row(i) - mu.row(c)).squaredNorm();
        if (dd < best_d) {
          best_d = dd;
          best = c;
        }
      }
      if (assign[static_cast<std::size_t>(i)] != best) {
        assign[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    if (!changed) break;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(g, d);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(g);
    for (int i = 0; i < n; ++i) {
      sums.row(assign[static_cast<std::size_t>(i)]) += coeffs.row(i);
      counts[assign[static_cast<std::size_t>(i)]] += 1.0;
    }
    // A cluster that lost every point keeps its previous center.
    for (int c = 0; c < g; ++c)
      if (counts[c] > 0.0) mu.row(c) = sums.row(c) / counts[c];
  }

  ResponsibilityMatrix hard;
  hard.values = Eigen::MatrixXd::Zero(n, g);
  for (int i = 0; i < n; ++i) hard.values(i, assign[static_cast<std::size_t>(i)]) = 1.0;
  return m_step(coeffs, hard, ridge);
}

}  // namespace detail

/// Run EM from an explicit initialization until the log-likelihood increment
/// falls below config.tol or config.max_iter is reached.
///
/// The trace holds one log-likelihood per parameter iterate and is
/// non-decreasing up to 1e-8 * (1 + |l|) slack. Ridge repair inside the
/// M-step can in principle perturb the ascent; a decrease beyond the slack
/// stops the run at the previous iterate rather than accepting it.
inline FitReport run_em(const Eigen::MatrixXd& coeffs, GmmParams params, const EmConfig& config) {
  FitReport report;
  auto [resp, loglik] = e_step(coeffs, params);
  report.loglik_trace.push_back(loglik);
  double prev = loglik;
  for (int iter = 1; iter <= config.max_iter; ++iter) {
    GmmParams next = m_step(coeffs, resp, config.ridge);
    auto [next_resp, next_loglik] = e_step(coeffs, next);
    if (next_loglik < prev - 1e-8 * (1.0 + std::abs(prev))) break;
    params = std::move(next);
    resp = std::move(next_resp);
    report.loglik_trace.push_back(next_loglik);
    report.iterations = iter;
    if (next_loglik - prev < config.tol) {
      report.converged = true;
      break;
    }
    prev = next_loglik;
  }
  report.params = std::move(params);
  report.responsibilities = std::move(resp);
  report.seed = config.seed;
  return report;
}

/// Best-of-restarts EM fit initialized by k-means++ seeded Lloyd clustering.
///
/// Restart r draws from child stream r of config.seed and restarts run in
/// parallel; the result is identical for any thread count. The highest final
/// log-likelihood wins, with exact ties broken by the lowest restart index.
inline FitReport fit(const Eigen::MatrixXd& coeffs, int g, const EmConfig& config) {
  const int n = static_cast<int>(coeffs.rows());
  const int d = static_cast<int>(coeffs.cols());
  if (g < 1 || g > n)
    throw ConfigError("component count must lie in [1, n]; got g = " + std::to_string(g) +
                      " with n = " + std::to_string(n));
  if (config.restarts < 1) throw ConfigError("at least one restart is required");
  if (d > n)
    std::cerr << "funcclust: warning: dimension " << d << " exceeds sample size " << n << "\n";

  const Rng root(config.seed);
  const int r_count = config.restarts;
  std::vector<std::optional<FitReport>> results(static_cast<std::size_t>(r_count));
  std::vector<std::string> failures(static_cast<std::size_t>(r_count));
  parallel_for(0, static_cast<std::size_t>(r_count), [&](std::size_t r) {
    Rng rng = root.child(r);
    try {
      GmmParams init = detail::kmeanspp_init(coeffs, g, rng, config.ridge);
      FitReport rep = run_em(coeffs, init, config);
      rep.restart_index = static_cast<int>(r);
      results[r] = std::move(rep);
    } catch (const Error& e) {
      failures[r] = e.what();
    }
  });

  int best = -1;
  for (int r = 0; r < r_count; ++r) {
    if (!results[static_cast<std::size_t>(r)]) continue;
    if (best < 0 || results[static_cast<std::size_t>(r)]->loglik() >
                        results[static_cast<std::size_t>(best)]->loglik())
      best = r;
  }
  if (best < 0) {
    std::vector<std::string> diag;
    for (int r = 0; r < r_count; ++r)
      diag.push_back("restart " + std::to_string(r) + ": " +
                     failures[static_cast<std::size_t>(r)]);
    throw FitFailedError("all " + std::to_string(r_count) + " restarts failed", std::move(diag));
  }
  return std::move(*results[static_cast<std::size_t>(best)]);
}

inline FitReport fit(const CoefficientMatrix& coeffs, int g, const EmConfig& config) {
  return fit(coeffs.coeffs(), g, config);
}

}  // namespace funcclust
