#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "funcclust/errors.hpp"

namespace funcclust {

struct Interval {
  double lo;
  double hi;

  double length() const { return hi - lo; }
  bool contains(double t) const { return t >= lo && t <= hi; }
};

/// Ordered sampling points t_1 < ... < t_m inside a domain interval.
class SampleGrid {
 public:
  SampleGrid(std::vector<double> points, Interval domain)
      : points_(std::move(points)), domain_(domain) {
    if (points_.empty()) throw ConfigError("sample grid must contain at least one point");
    if (!(domain_.lo < domain_.hi)) throw ConfigError("grid domain must have positive length");
    for (std::size_t j = 0; j < points_.size(); ++j) {
      if (!std::isfinite(points_[j]))
        throw ConfigError("grid point " + std::to_string(j + 1) + " is not finite");
      if (!domain_.contains(points_[j]))
        throw ConfigError("grid point " + std::to_string(j + 1) + " lies outside the domain");
      if (j > 0 && !(points_[j] > points_[j - 1]))
        throw ConfigError("grid points must be strictly increasing");
    }
  }

  /// m equally spaced points covering [lo, hi], both endpoints included.
  static SampleGrid uniform(Interval domain, int m) {
    if (m < 2) throw ConfigError("uniform grid needs at least 2 points");
    std::vector<double> pts(static_cast<std::size_t>(m));
    const double step = domain.length() / static_cast<double>(m - 1);
    for (int j = 0; j < m; ++j) pts[static_cast<std::size_t>(j)] = domain.lo + j * step;
    pts.back() = domain.hi;  // exact endpoint regardless of rounding
    return SampleGrid(std::move(pts), domain);
  }

  int size() const { return static_cast<int>(points_.size()); }
  const std::vector<double>& points() const { return points_; }
  double point(int j) const { return points_[static_cast<std::size_t>(j)]; }
  const Interval& domain() const { return domain_; }

 private:
  std::vector<double> points_;
  Interval domain_;
};

enum class BasisKind { monomial, fourier, bspline };

inline const char* to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::monomial: return "monomial";
    case BasisKind::fourier: return "fourier";
    case BasisKind::bspline: return "bspline";
  }
  return "?";
}

inline BasisKind basis_kind_from_string(const std::string& name) {
  if (name == "monomial") return BasisKind::monomial;
  if (name == "fourier") return BasisKind::fourier;
  if (name == "bspline") return BasisKind::bspline;
  throw ConfigError("unknown basis kind '" + name + "'");
}

enum class OutOfDomain { error, clamp };

/// A d-dimensional basis x(t) on a fixed domain interval.
///
/// monomial: (1, t, t^2, ..., t^{d-1}). No internal rescaling of t is
///   performed; high d on a wide domain carries the usual conditioning risk.
/// fourier:  (1, sin wt, cos wt, sin 2wt, cos 2wt, ...) with
///   w = 2*pi / (hi - lo); requires odd d.
/// bspline:  cubic (order 4) B-splines on d-4 equally spaced interior knots,
///   evaluated by the Cox-de Boor recursion; requires d >= 4.
class BasisSystem {
 public:
  BasisSystem(BasisKind kind, int dim, Interval domain)
      : kind_(kind), dim_(dim), domain_(domain) {
    if (!(domain_.lo < domain_.hi)) throw ConfigError("basis domain must have positive length");
    if (dim_ < 1) throw ConfigError("basis dimension must be at least 1");
    if (kind_ == BasisKind::fourier && dim_ % 2 == 0)
      throw ConfigError("fourier basis requires odd dimension (intercept plus sin/cos pairs)");
    if (kind_ == BasisKind::bspline && dim_ < 4)
      throw ConfigError("cubic B-spline basis requires dimension >= 4");
    if (kind_ == BasisKind::bspline) {
      // Open knot vector: 4 copies of each endpoint around d-4 interior knots.
      knots_.assign(4, domain_.lo);
      const int segments = dim_ - 3;
      for (int i = 1; i <= dim_ - 4; ++i)
        knots_.push_back(domain_.lo + domain_.length() * static_cast<double>(i) /
                                          static_cast<double>(segments));
      knots_.insert(knots_.end(), 4, domain_.hi);
    }
  }

  BasisKind kind() const { return kind_; }
  int dim() const { return dim_; }
  const Interval& domain() const { return domain_; }

  Eigen::VectorXd evaluate(double t, OutOfDomain policy = OutOfDomain::error) const {
    if (!domain_.contains(t)) {
      if (policy == OutOfDomain::error)
        throw DomainError("evaluation point " + std::to_string(t) + " outside basis domain [" +
                          std::to_string(domain_.lo) + ", " + std::to_string(domain_.hi) + "]");
      t = std::clamp(t, domain_.lo, domain_.hi);
    }
    Eigen::VectorXd x = Eigen::VectorXd::Zero(dim_);
    switch (kind_) {
      case BasisKind::monomial: {
        double p = 1.0;
        for (int k = 0; k < dim_; ++k) {
          x[k] = p;
          p *= t;
        }
        break;
      }
      case BasisKind::fourier: {
        const double w = 6.283185307179586476925287 / domain_.length();
        x[0] = 1.0;
        const int pairs = (dim_ - 1) / 2;
        for (int k = 1; k <= pairs; ++k) {
          x[2 * k - 1] = std::sin(k * w * t);
          x[2 * k] = std::cos(k * w * t);
        }
        break;
      }
      case BasisKind::bspline: {
        evaluate_bspline(t, x);
        break;
      }
    }
    return x;
  }

 private:
  void evaluate_bspline(double t, Eigen::VectorXd& x) const {
    // Span index j with knots[j] <= t < knots[j+1]; the right endpoint maps
    // to the last non-empty span so the basis covers the closed domain.
    int span;
    if (t >= knots_[static_cast<std::size_t>(dim_)]) {
      span = dim_ - 1;
    } else {
      span = 3;
      int hi = dim_ - 1;
      while (span < hi) {
        const int mid = (span + hi + 1) / 2;
        if (knots_[static_cast<std::size_t>(mid)] <= t)
          span = mid;
        else
          hi = mid - 1;
      }
    }
    // Cox-de Boor recursion for the 4 basis functions alive on this span.
    double vals[4] = {1.0, 0.0, 0.0, 0.0};
    for (int r = 1; r <= 3; ++r) {
      double saved = 0.0;
      for (int s = 0; s < r; ++s) {
        const double denom = knots_[static_cast<std::size_t>(span + s + 1)] -
                             knots_[static_cast<std::size_t>(span - r + s + 1)];
        const double temp = vals[s] / denom;
        vals[s] = saved + (knots_[static_cast<std::size_t>(span + s + 1)] - t) * temp;
        saved = (t - knots_[static_cast<std::size_t>(span - r + s + 1)]) * temp;
      }
      vals[r] = saved;
    }
    for (int s = 0; s < 4; ++s) x[span - 3 + s] = vals[s];
  }

  BasisKind kind_;
  int dim_;
  Interval domain_;
  std::vector<double> knots_;  // bspline only
};

inline Eigen::VectorXd evaluate_basis(const BasisSystem& basis, double t,
                                      OutOfDomain policy = OutOfDomain::error) {
  return basis.evaluate(t, policy);
}

/// The m x d evaluation matrix X of a basis over a grid, with a rank-revealing
/// SVD factorization for applying the Moore-Penrose pseudo-inverse.
class DesignMatrix {
 public:
  DesignMatrix(const BasisSystem& basis, const SampleGrid& grid) {
    const int m = grid.size();
    const int d = basis.dim();
    values_.resize(m, d);
    for (int j = 0; j < m; ++j) values_.row(j) = basis.evaluate(grid.point(j)).transpose();

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(values_,
                                          Eigen::ComputeThinU | Eigen::ComputeThinV);
    u_ = svd.matrixU();
    v_ = svd.matrixV();
    singular_values_ = svd.singularValues();

    // Singular values below max(m, d) * eps * sigma_max are treated as zero.
    const double cutoff = std::max(m, d) * std::numeric_limits<double>::epsilon() *
                          (singular_values_.size() > 0 ? singular_values_[0] : 0.0);
    rank_ = 0;
    for (Eigen::Index k = 0; k < singular_values_.size(); ++k)
      if (singular_values_[k] > cutoff) ++rank_;
  }

  int rows() const { return static_cast<int>(values_.rows()); }
  int dim() const { return static_cast<int>(values_.cols()); }
  const Eigen::MatrixXd& matrix() const { return values_; }
  int gram_rank() const { return rank_; }
  const Eigen::VectorXd& singular_values() const { return singular_values_; }

  /// Minimum-norm least-squares solution of min ||z - X b||.
  Eigen::VectorXd solve(const Eigen::VectorXd& z) const {
    Eigen::VectorXd ut_z = u_.leftCols(rank_).transpose() * z;
    for (int k = 0; k < rank_; ++k) ut_z[k] /= singular_values_[k];
    return v_.leftCols(rank_) * ut_z;
  }

  /// Row-wise solve: returns an n x d matrix whose i-th row solves for Z's i-th row.
  Eigen::MatrixXd solve_rows(const Eigen::MatrixXd& z_rows) const {
    Eigen::MatrixXd t = z_rows * u_.leftCols(rank_);
    for (int k = 0; k < rank_; ++k) t.col(k) /= singular_values_[k];
    return t * v_.leftCols(rank_).transpose();
  }

  /// (X^T X)^+ via the stored factorization.
  Eigen::MatrixXd gram_inverse() const {
    Eigen::MatrixXd vr = v_.leftCols(rank_);
    Eigen::VectorXd inv_sq(rank_);
    for (int k = 0; k < rank_; ++k) inv_sq[k] = 1.0 / (singular_values_[k] * singular_values_[k]);
    return vr * inv_sq.asDiagonal() * vr.transpose();
  }

  /// The d x m pseudo-inverse (X^T X)^+ X^T itself; diagnostic use.
  Eigen::MatrixXd pseudo_inverse() const {
    Eigen::MatrixXd ur = u_.leftCols(rank_);
    Eigen::MatrixXd vr = v_.leftCols(rank_);
    Eigen::VectorXd inv_s(rank_);
    for (int k = 0; k < rank_; ++k) inv_s[k] = 1.0 / singular_values_[k];
    return vr * inv_s.asDiagonal() * ur.transpose();
  }

 private:
  Eigen::MatrixXd values_;
  Eigen::MatrixXd u_, v_;
  Eigen::VectorXd singular_values_;
  int rank_ = 0;
};

inline DesignMatrix build_design(const BasisSystem& basis, const SampleGrid& grid) {
  return DesignMatrix(basis, grid);
}

}  // namespace funcclust
