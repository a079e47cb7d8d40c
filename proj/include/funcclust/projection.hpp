#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "funcclust/basis.hpp"
#include "funcclust/errors.hpp"
#include "funcclust/threads.hpp"

namespace funcclust {

/// n observed series, either on one shared grid (rectangular) or on
/// per-function grids (irregular). Values must be finite; missing entries are
/// an error, not an imputation target.
class FunctionalDataset {
 public:
  enum class Layout { rectangular, irregular };

  static FunctionalDataset rectangular(SampleGrid grid, Eigen::MatrixXd values) {
    if (values.rows() < 1) throw DataError("dataset must contain at least one function");
    if (values.cols() != grid.size())
      throw DataError("value matrix has " + std::to_string(values.cols()) +
                      " columns but the grid has " + std::to_string(grid.size()) + " points");
    for (Eigen::Index i = 0; i < values.rows(); ++i)
      for (Eigen::Index j = 0; j < values.cols(); ++j)
        if (!std::isfinite(values(i, j)))
          throw DataError("non-finite value at row " + std::to_string(i + 1) + ", column " +
                          std::to_string(j + 1));
    FunctionalDataset ds;
    ds.layout_ = Layout::rectangular;
    ds.grid_.push_back(std::move(grid));
    ds.values_ = std::move(values);
    return ds;
  }

  static FunctionalDataset irregular(std::vector<SampleGrid> grids,
                                     std::vector<Eigen::VectorXd> series) {
    if (grids.empty()) throw DataError("dataset must contain at least one function");
    if (grids.size() != series.size())
      throw DataError("grid count and series count differ");
    for (std::size_t i = 0; i < series.size(); ++i) {
      if (series[i].size() != grids[i].size())
        throw DataError("series " + std::to_string(i + 1) +
                        " length does not match its grid");
      for (Eigen::Index j = 0; j < series[i].size(); ++j)
        if (!std::isfinite(series[i][j]))
          throw DataError("non-finite value at row " + std::to_string(i + 1) + ", column " +
                          std::to_string(j + 1));
    }
    FunctionalDataset ds;
    ds.layout_ = Layout::irregular;
    ds.grid_ = std::move(grids);
    ds.series_ = std::move(series);
    return ds;
  }

  Layout layout() const { return layout_; }
  int size() const {
    return layout_ == Layout::rectangular ? static_cast<int>(values_.rows())
                                          : static_cast<int>(series_.size());
  }

  const SampleGrid& shared_grid() const { return grid_.front(); }
  const Eigen::MatrixXd& values() const { return values_; }

  const SampleGrid& grid_of(int i) const {
    return layout_ == Layout::rectangular ? grid_.front()
                                          : grid_[static_cast<std::size_t>(i)];
  }
  Eigen::VectorXd series_of(int i) const {
    return layout_ == Layout::rectangular
               ? Eigen::VectorXd(values_.row(i).transpose())
               : series_[static_cast<std::size_t>(i)];
  }

 private:
  FunctionalDataset() = default;

  Layout layout_ = Layout::rectangular;
  std::vector<SampleGrid> grid_;
  Eigen::MatrixXd values_;                // rectangular
  std::vector<Eigen::VectorXd> series_;   // irregular
};

/// OLS basis-coefficient estimates, one row per function.
class CoefficientMatrix {
 public:
  CoefficientMatrix(Eigen::MatrixXd coeffs, BasisSystem basis, Eigen::MatrixXd gram_inverse)
      : coeffs_(std::move(coeffs)), basis_(std::move(basis)), gram_inverse_(std::move(gram_inverse)) {}

  int size() const { return static_cast<int>(coeffs_.rows()); }
  int dim() const { return static_cast<int>(coeffs_.cols()); }
  const Eigen::MatrixXd& coeffs() const { return coeffs_; }
  const BasisSystem& basis() const { return basis_; }

  /// (X^T X)^+ of the shared design (rectangular), or the mean of the
  /// per-series gram inverses (irregular); diagnostic only.
  const Eigen::MatrixXd& gram_inverse() const { return gram_inverse_; }

 private:
  Eigen::MatrixXd coeffs_;
  BasisSystem basis_;
  Eigen::MatrixXd gram_inverse_;
};

/// OLS projection of every observed series onto the basis span.
///
/// Rectangular datasets factor the shared design once and reuse it for all
/// rows; irregular datasets factor per series. Row work is independent and
/// runs in parallel with output identical to sequential execution.
inline CoefficientMatrix project(const FunctionalDataset& dataset, const BasisSystem& basis) {
  const int n = dataset.size();
  const int d = basis.dim();
  if (dataset.layout() == FunctionalDataset::Layout::rectangular) {
    DesignMatrix design = build_design(basis, dataset.shared_grid());
    Eigen::MatrixXd coeffs = design.solve_rows(dataset.values());
    return CoefficientMatrix(std::move(coeffs), basis, design.gram_inverse());
  }
  Eigen::MatrixXd coeffs(n, d);
  std::vector<Eigen::MatrixXd> grams(static_cast<std::size_t>(n));
  parallel_for(0, static_cast<std::size_t>(n), [&](std::size_t i) {
    DesignMatrix design = build_design(basis, dataset.grid_of(static_cast<int>(i)));
    coeffs.row(static_cast<Eigen::Index>(i)) =
        design.solve(dataset.series_of(static_cast<int>(i))).transpose();
    grams[i] = design.gram_inverse();
  });
  Eigen::MatrixXd mean_gram = Eigen::MatrixXd::Zero(d, d);
  for (const auto& g : grams) mean_gram += g;
  mean_gram /= static_cast<double>(n);
  return CoefficientMatrix(std::move(coeffs), basis, std::move(mean_gram));
}

/// Pooled residual variance sum_i ||z_i - X b_i||^2 / (n (m - d)).
///
/// Estimates the error-model variance only when the basis spans the truth;
/// otherwise it also absorbs approximation error.
inline double noise_variance_estimate(const FunctionalDataset& dataset, const BasisSystem& basis,
                                      const CoefficientMatrix& coeffs) {
  if (dataset.layout() != FunctionalDataset::Layout::rectangular)
    throw InsufficientDataError("noise variance estimate requires a rectangular dataset");
  const int n = dataset.size();
  const int m = dataset.shared_grid().size();
  const int d = basis.dim();
  if (m <= d)
    throw InsufficientDataError("noise variance estimate requires m > d (got m = " +
                                std::to_string(m) + ", d = " + std::to_string(d) + ")");
  DesignMatrix design = build_design(basis, dataset.shared_grid());
  if (design.gram_rank() < d)
    throw InsufficientDataError("noise variance estimate requires a full-rank design");
  const Eigen::MatrixXd residuals =
      dataset.values() - coeffs.coeffs() * design.matrix().transpose();
  return residuals.squaredNorm() / (static_cast<double>(n) * static_cast<double>(m - d));
}

}  // namespace funcclust
