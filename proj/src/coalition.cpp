#include "condshap/coalition.hpp"

#include <string>

#include "condshap/errors.hpp"

namespace condshap {

Coalition::Coalition(std::uint32_t mask, int feature_count)
    : mask_(mask), feature_count_(feature_count) {
  if (feature_count < 1 || feature_count > kMaxFeatures) {
    throw CapacityError("coalition feature count " + std::to_string(feature_count) +
                        " outside [1, " + std::to_string(kMaxFeatures) + "]");
  }
  if (feature_count < 32 && (mask >> feature_count) != 0) {
    throw DomainError("coalition mask " + std::to_string(mask) +
                      " has bits above feature count " + std::to_string(feature_count));
  }
  size_ = std::popcount(mask_);
}

Coalition Coalition::grand(int feature_count) {
  if (feature_count < 1 || feature_count > kMaxFeatures) {
    throw CapacityError("coalition feature count " + std::to_string(feature_count) +
                        " outside [1, " + std::to_string(kMaxFeatures) + "]");
  }
  return Coalition((std::uint32_t{1} << feature_count) - 1, feature_count);
}

Coalition Coalition::complement() const {
  const std::uint32_t full = (std::uint32_t{1} << feature_count_) - 1;
  return Coalition(full & ~mask_, feature_count_);
}

Coalition Coalition::with(int feature) const {
  return Coalition(mask_ | (std::uint32_t{1} << feature), feature_count_);
}

std::vector<int> Coalition::members() const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(size_));
  for (int j = 0; j < feature_count_; ++j) {
    if (contains(j)) out.push_back(j);
  }
  return out;
}

std::vector<int> Coalition::complement_members() const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(feature_count_ - size_));
  for (int j = 0; j < feature_count_; ++j) {
    if (!contains(j)) out.push_back(j);
  }
  return out;
}

std::vector<Coalition> enumerate_coalitions(int feature_count) {
  if (feature_count < 1 || feature_count > Coalition::kMaxFeatures) {
    throw CapacityError("exact enumeration supports 1 <= M <= " +
                        std::to_string(Coalition::kMaxFeatures) + ", got " +
                        std::to_string(feature_count));
  }
  const std::uint32_t count = std::uint32_t{1} << feature_count;
  std::vector<Coalition> out;
  out.reserve(count);
  for (std::uint32_t mask = 0; mask < count; ++mask) {
    out.emplace_back(mask, feature_count);
  }
  return out;
}

double shapley_weight(int coalition_size, int feature_count) {
  if (feature_count < 1 || feature_count > Coalition::kMaxFeatures) {
    throw CapacityError("shapley_weight feature count " + std::to_string(feature_count) +
                        " outside [1, " + std::to_string(Coalition::kMaxFeatures) + "]");
  }
  if (coalition_size < 0 || coalition_size >= feature_count) {
    throw DomainError("shapley_weight needs 0 <= s <= M-1, got s=" +
                      std::to_string(coalition_size) + " M=" + std::to_string(feature_count));
  }
  // s!(M-s-1)!/M! = 1 / (M * binom(M-1, s)); the binomial stays an exact
  // integer in double precision for M <= 20.
  double binom = 1.0;
  for (int i = 1; i <= coalition_size; ++i) {
    binom = binom * static_cast<double>(feature_count - coalition_size - 1 + i) /
            static_cast<double>(i);
  }
  return 1.0 / (static_cast<double>(feature_count) * binom);
}

Eigen::VectorXd masked_merge(const Eigen::VectorXd& foreground,
                             const Eigen::VectorXd& background,
                             const Coalition& coalition) {
  const int m = coalition.feature_count();
  if (foreground.size() != m || background.size() != m) {
    throw ShapeError("masked_merge expects two length-" + std::to_string(m) +
                     " vectors, got " + std::to_string(foreground.size()) + " and " +
                     std::to_string(background.size()));
  }
  Eigen::VectorXd out(m);
  for (int j = 0; j < m; ++j) {
    out[j] = coalition.contains(j) ? foreground[j] : background[j];
  }
  return out;
}

}  // namespace condshap
