#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "funcclust/errors.hpp"
#include "funcclust/gmm.hpp"

namespace funcclust {

/// A hard partition: 1-based labels over a label space of size g.
class Partition {
 public:
  Partition(std::vector<int> labels, int g) : labels_(std::move(labels)), g_(g) {
    if (labels_.empty()) throw DataError("partition must label at least one item");
    if (g_ < 1) throw DataError("label space must be positive");
    for (std::size_t i = 0; i < labels_.size(); ++i)
      if (labels_[i] < 1 || labels_[i] > g_)
        throw DataError("label " + std::to_string(labels_[i]) + " at row " +
                        std::to_string(i + 1) + " outside 1.." + std::to_string(g_));
  }

  int size() const { return static_cast<int>(labels_.size()); }
  int label_space() const { return g_; }
  const std::vector<int>& labels() const { return labels_; }
  int label(int i) const { return labels_[static_cast<std::size_t>(i)]; }

 private:
  std::vector<int> labels_;
  int g_;
};

/// Maximum-posterior cluster allocation; ties go to the smallest component
/// index, so runs are reproducible.
inline Partition allocate(const ResponsibilityMatrix& resp) {
  const int n = resp.size();
  const int g = resp.components();
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    int best = 0;
    for (int c = 1; c < g; ++c)
      if (resp.values(i, c) > resp.values(i, best)) best = c;
    labels[static_cast<std::size_t>(i)] = best + 1;
  }
  return Partition(std::move(labels), g);
}

/// Adjusted Rand index of Hubert & Arabie via the pair-counting contingency
/// table. Pair counts use 128-bit integer arithmetic; the only floating-point
/// step is the final division. Returns 1 when the partitions are identical up
/// to relabeling, including the degenerate identical-trivial cases.
inline double adjusted_rand_index(const Partition& a, const Partition& b) {
  if (a.size() != b.size())
    throw DataError("partitions have different lengths (" + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()) + ")");
  const int n = a.size();
  if (n < 2) throw DataError("adjusted Rand index needs at least two items");

  const int ga = a.label_space();
  const int gb = b.label_space();
  std::vector<std::int64_t> table(static_cast<std::size_t>(ga) * static_cast<std::size_t>(gb), 0);
  std::vector<std::int64_t> row(static_cast<std::size_t>(ga), 0);
  std::vector<std::int64_t> col(static_cast<std::size_t>(gb), 0);
  for (int i = 0; i < n; ++i) {
    const int u = a.label(i) - 1;
    const int v = b.label(i) - 1;
    ++table[static_cast<std::size_t>(u) * static_cast<std::size_t>(gb) + static_cast<std::size_t>(v)];
    ++row[static_cast<std::size_t>(u)];
    ++col[static_cast<std::size_t>(v)];
  }

  const auto choose2 = [](std::int64_t k) -> std::int64_t { return k * (k - 1) / 2; };
  std::int64_t sum_cells = 0;
  for (std::int64_t cell : table) sum_cells += choose2(cell);
  std::int64_t sum_rows = 0;
  for (std::int64_t r : row) sum_rows += choose2(r);
  std::int64_t sum_cols = 0;
  for (std::int64_t c : col) sum_cols += choose2(c);
  const std::int64_t pairs = choose2(n);

  // ARI = (sum_cells - sum_rows*sum_cols/pairs)
  //     / ((sum_rows+sum_cols)/2 - sum_rows*sum_cols/pairs),
  // cleared of fractions so both sides stay integral.
  using int128 = __int128;
  const int128 numer = 2 * (int128(pairs) * sum_cells - int128(sum_rows) * sum_cols);
  const int128 denom =
      int128(pairs) * (sum_rows + sum_cols) - 2 * int128(sum_rows) * sum_cols;
  if (denom == 0) {
    // Both partitions all-one-cluster or both all-singletons: identical.
    return 1.0;
  }
  return static_cast<double>(numer) / static_cast<double>(denom);
}

}  // namespace funcclust
