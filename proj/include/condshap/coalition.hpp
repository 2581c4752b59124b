#pragma once

#include <Eigen/Dense>
#include <bit>
#include <cstdint>
#include <vector>

namespace condshap {

// A subset of the feature indices {0..M-1}, stored as a bitmask. Bit j set
// means feature j is observed (inside the coalition). Immutable after
// construction and freely shareable across threads.
class Coalition {
 public:
  // Exact power-set enumeration is capped here; 2^20 tables are the largest
  // the engine will materialize.
  static constexpr int kMaxFeatures = 20;

  Coalition(std::uint32_t mask, int feature_count);

  static Coalition empty(int feature_count) { return Coalition(0, feature_count); }
  static Coalition grand(int feature_count);

  std::uint32_t mask() const { return mask_; }
  int size() const { return size_; }
  int feature_count() const { return feature_count_; }

  bool contains(int feature) const { return (mask_ >> feature) & 1u; }
  bool is_empty() const { return mask_ == 0; }
  bool is_grand() const { return size_ == feature_count_; }

  Coalition complement() const;
  Coalition with(int feature) const;

  // Set feature indices in ascending order.
  std::vector<int> members() const;
  std::vector<int> complement_members() const;

 private:
  std::uint32_t mask_ = 0;
  int feature_count_ = 0;
  int size_ = 0;
};

// All 2^M coalitions in ascending mask order: the empty set first, the grand
// coalition last. The order is stable so estimator caches and output files
// are byte-identical across runs.
std::vector<Coalition> enumerate_coalitions(int feature_count);

// The kernel weight |S|! (M-|S|-1)! / M! attached to a coalition of the given
// size when feature j is excluded. Computed with running binomial products,
// exact in double precision up to kMaxFeatures.
double shapley_weight(int coalition_size, int feature_count);

// Picks coordinate j from foreground when j is in S, from background
// otherwise. Both vectors must have length S.feature_count().
Eigen::VectorXd masked_merge(const Eigen::VectorXd& foreground,
                             const Eigen::VectorXd& background,
                             const Coalition& coalition);

}  // namespace condshap
