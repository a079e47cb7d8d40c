#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "funcclust/errors.hpp"
#include "funcclust/gmm.hpp"
#include "funcclust/rng.hpp"
#include "funcclust/threads.hpp"

namespace funcclust {

/// Number of free parameters of a g-component full-covariance GMM in d
/// dimensions: g (1 + d + d(d+1)/2) - 1.
inline std::int64_t penalty_dim(int g, int d) {
  if (g < 1 || d < 1) throw ConfigError("penalty_dim needs g >= 1 and d >= 1");
  const std::int64_t dd = d;
  return static_cast<std::int64_t>(g) * (1 + dd + dd * (dd + 1) / 2) - 1;
}

enum class SelectionMethod { slope, bic };

struct SelectionRow {
  int g = 0;
  double loglik = 0.0;
  std::int64_t penalty = 0;
  double criterion = 0.0;
};

/// Criterion table over a sweep of mixture orders; chosen_g minimizes the
/// criterion, ties broken by the smallest g.
struct SelectionTable {
  std::vector<SelectionRow> rows;  // sorted by g, unique g
  SelectionMethod method = SelectionMethod::bic;
  double kappa = 0.0;  // slope method only
  int chosen_g = 0;
};

/// Outcome of fitting one mixture per order in g_range. Failed orders are
/// recorded and skipped instead of aborting the sweep.
struct SweepResult {
  std::vector<int> orders;        // successful g values, ascending
  std::vector<FitReport> fits;    // parallel to orders
  std::vector<std::pair<int, std::string>> failures;

  std::vector<std::pair<int, double>> loglik_rows() const {
    std::vector<std::pair<int, double>> rows;
    rows.reserve(orders.size());
    for (std::size_t k = 0; k < orders.size(); ++k)
      rows.emplace_back(orders[k], fits[k].loglik());
    return rows;
  }
};

/// Fit one best-of-restarts GMM per order. Order g uses child stream g of
/// config.seed, so sweep entries are independent and may run in parallel with
/// the same result as a sequential sweep.
///
/// The log-likelihood of nested fits should be non-decreasing in g; EM does
/// not guarantee it, so a violation (beyond 1e-6 slack) triggers one re-fit
/// of the offending order with doubled restarts, keeping the better fit.
inline SweepResult sweep(const Eigen::MatrixXd& coeffs, const std::vector<int>& g_range,
                         const EmConfig& config) {
  if (g_range.empty()) throw ConfigError("sweep needs a non-empty order range");
  std::vector<int> orders(g_range);
  std::sort(orders.begin(), orders.end());
  orders.erase(std::unique(orders.begin(), orders.end()), orders.end());
  const int n = static_cast<int>(coeffs.rows());
  if (orders.back() > n) throw ConfigError("largest order exceeds the sample size");

  const Rng root(config.seed);
  const std::size_t count = orders.size();
  std::vector<std::optional<FitReport>> results(count);
  std::vector<std::string> errors(count);
  const auto fit_order = [&](std::size_t k, int restarts) {
    EmConfig local = config;
    local.seed = root.child(static_cast<std::uint64_t>(orders[k])).key();
    local.restarts = restarts;
    try {
      results[k] = fit(coeffs, orders[k], local);
      errors[k].clear();
    } catch (const Error& e) {
      if (!results[k]) errors[k] = e.what();
    }
  };
  parallel_for(0, count, [&](std::size_t k) { fit_order(k, config.restarts); });

  // Nested-model repair pass, ascending in g.
  for (std::size_t k = 1; k < count; ++k) {
    if (!results[k] || !results[k - 1]) continue;
    if (results[k]->loglik() < results[k - 1]->loglik() - 1e-6) {
      FitReport previous = std::move(*results[k]);
      fit_order(k, 2 * config.restarts);
      if (!results[k] || results[k]->loglik() < previous.loglik())
        results[k] = std::move(previous);
    }
  }

  SweepResult out;
  for (std::size_t k = 0; k < count; ++k) {
    if (results[k]) {
      out.orders.push_back(orders[k]);
      out.fits.push_back(std::move(*results[k]));
    } else {
      std::cerr << "funcclust: warning: order g = " << orders[k]
                << " failed to fit: " << errors[k] << "\n";
      out.failures.emplace_back(orders[k], errors[k]);
    }
  }
  if (out.orders.empty()) throw SweepFailedError("every order in the sweep failed to fit");
  return out;
}

inline SweepResult sweep(const CoefficientMatrix& coeffs, const std::vector<int>& g_range,
                         const EmConfig& config) {
  return sweep(coeffs.coeffs(), g_range, config);
}

namespace detail {

inline std::vector<SelectionRow> make_rows(const std::vector<std::pair<int, double>>& table_input,
                                           int d) {
  if (table_input.empty()) throw ConfigError("criterion table needs at least one row");
  std::vector<SelectionRow> rows;
  rows.reserve(table_input.size());
  for (const auto& [g, loglik] : table_input)
    rows.push_back({g, loglik, penalty_dim(g, d), 0.0});
  std::sort(rows.begin(), rows.end(),
            [](const SelectionRow& a, const SelectionRow& b) { return a.g < b.g; });
  for (std::size_t k = 1; k < rows.size(); ++k)
    if (rows[k].g == rows[k - 1].g) throw ConfigError("duplicate order in criterion table");
  return rows;
}

inline int argmin_g(const std::vector<SelectionRow>& rows) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < rows.size(); ++k)
    if (rows[k].criterion < rows[best].criterion) best = k;  // ties keep the smaller g
  return rows[best].g;
}

}  // namespace detail

/// Slope-heuristic criterion: -n^-1 l_n(g) + kappa Pen(g) with kappa = 2 s,
/// where s is the OLS slope of n^-1 l_n against Pen(g) over the fit_window
/// largest orders. Passing kappa_override skips the slope estimation and
/// reproduces a known multiplier exactly.
inline SelectionTable slope_criterion(const std::vector<std::pair<int, double>>& table_input,
                                      int d, int n, int fit_window = 0,
                                      std::optional<double> kappa_override = std::nullopt) {
  std::vector<SelectionRow> rows = detail::make_rows(table_input, d);
  const int count = static_cast<int>(rows.size());

  double kappa;
  if (kappa_override) {
    kappa = *kappa_override;
  } else {
    if (fit_window == 0) fit_window = std::max(3, (count + 1) / 2);
    if (fit_window < 3) throw ConfigError("slope fit window must cover at least 3 orders");
    if (fit_window > count)
      throw ConfigError("slope fit window exceeds the number of fitted orders");
    // OLS of y = n^-1 loglik on x = Pen(g) over the largest-g rows.
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (int k = count - fit_window; k < count; ++k) {
      const double x = static_cast<double>(rows[static_cast<std::size_t>(k)].penalty);
      const double y = rows[static_cast<std::size_t>(k)].loglik / static_cast<double>(n);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double w = static_cast<double>(fit_window);
    const double denom = w * sxx - sx * sx;
    if (denom <= 0.0) throw SlopeEstimationError("penalty values in the fit window are constant");
    const double slope = (w * sxy - sx * sy) / denom;
    if (!(slope > 0.0))
      throw SlopeEstimationError("estimated slope " + std::to_string(slope) +
                                 " is not positive; the criterion would not penalize");
    kappa = 2.0 * slope;
  }

  for (auto& r : rows)
    r.criterion = -r.loglik / static_cast<double>(n) + kappa * static_cast<double>(r.penalty);
  SelectionTable table;
  table.rows = std::move(rows);
  table.method = SelectionMethod::slope;
  table.kappa = kappa;
  table.chosen_g = detail::argmin_g(table.rows);
  return table;
}

/// BIC-style criterion: -2 l_n(g) + Pen(g) log n, minimized.
inline SelectionTable bic_criterion(const std::vector<std::pair<int, double>>& table_input,
                                    int d, int n) {
  std::vector<SelectionRow> rows = detail::make_rows(table_input, d);
  const double log_n = std::log(static_cast<double>(n));
  for (auto& r : rows) r.criterion = -2.0 * r.loglik + static_cast<double>(r.penalty) * log_n;
  SelectionTable table;
  table.rows = std::move(rows);
  table.method = SelectionMethod::bic;
  table.chosen_g = detail::argmin_g(table.rows);
  return table;
}

}  // namespace funcclust
