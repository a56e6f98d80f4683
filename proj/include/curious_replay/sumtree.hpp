#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "curious_replay/errors.hpp"
#include "curious_replay/rng.hpp"

namespace cr {

/// Complete binary tree whose leaves hold nonnegative priorities and whose
/// internal nodes hold subtree sums. set() and sample() are O(log capacity).
///
/// Layout: nodes_[1] is the root and leaf i lives at nodes_[base_ + i], where
/// base_ is capacity rounded up to a power of two. Padding leaves beyond
/// capacity stay zero and carry no mass.
class SumTree {
public:
  explicit SumTree(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("SumTree: capacity must be at least 1");
    while (base_ < capacity) base_ <<= 1;
    nodes_.assign(2 * base_, 0.0);
  }

  std::size_t capacity() const noexcept { return capacity_; }

  double total() const noexcept { return nodes_[1]; }

  double get(std::size_t index) const {
    check_index(index);
    return nodes_[base_ + index];
  }

  void set(std::size_t index, double priority) {
    check_index(index);
    if (!std::isfinite(priority) || priority < 0.0)
      throw std::invalid_argument("SumTree::set: priority must be finite and nonnegative");
    std::size_t node = base_ + index;
    nodes_[node] = priority;
    while (node > 1) {
      node >>= 1;
      nodes_[node] = nodes_[2 * node] + nodes_[2 * node + 1];
    }
    if (++sets_since_rebuild_ >= kRebuildPeriod) rebuild();
  }

  /// Proportional draw at quantile u in [0, 1): returns the leaf whose
  /// cumulative-sum interval contains u * total(). When the residual equals a
  /// left-subtree sum exactly the descent goes right, so leaves with zero
  /// priority are never selected.
  std::size_t sample(double u) const {
    if (!(u >= 0.0) || !(u < 1.0))
      throw std::invalid_argument("SumTree::sample: u must be in [0, 1)");
    if (!(total() > 0.0))
      throw EmptyDistributionError("SumTree::sample: total priority is zero");
    double target = u * total();
    std::size_t node = 1;
    while (node < base_) {
      const std::size_t left = 2 * node;
      if (target < nodes_[left]) {
        node = left;
      } else {
        target -= nodes_[left];
        node = left + 1;
      }
    }
    std::size_t index = node - base_;
    // Summation error can land the descent one past the final positive leaf;
    // back up onto real mass.
    while (index > 0 && nodes_[base_ + index] <= 0.0) --index;
    return index;
  }

  template <typename Generator>
  std::vector<std::size_t> sample_batch(std::size_t n, Generator& rng) const {
    std::vector<std::size_t> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(sample(random_unit(rng)));
    return out;
  }

  /// Recompute every internal node from the leaves, discarding accumulated
  /// floating-point drift. Runs automatically every kRebuildPeriod sets.
  void rebuild() {
    for (std::size_t node = base_ - 1; node >= 1; --node)
      nodes_[node] = nodes_[2 * node] + nodes_[2 * node + 1];
    sets_since_rebuild_ = 0;
  }

private:
  static constexpr std::uint64_t kRebuildPeriod = 1ull << 20;

  void check_index(std::size_t index) const {
    if (index >= capacity_) throw std::out_of_range("SumTree: leaf index out of range");
  }

  std::size_t capacity_;
  std::size_t base_ = 1;
  std::vector<double> nodes_;
  std::uint64_t sets_since_rebuild_ = 0;
};

}  // namespace cr
