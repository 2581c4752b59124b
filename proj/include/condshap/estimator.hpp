#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "condshap/coalition.hpp"

namespace condshap {

// One estimation method for the contribution function v(S). Implementations
// are immutable after construction and queryable from multiple threads; any
// randomness comes from substreams keyed by (seed, coalition, observation),
// never from shared mutable state.
class ContributionEstimator {
 public:
  virtual ~ContributionEstimator() = default;

  virtual const std::string& name() const = 0;
  virtual int feature_count() const = 0;

  // v-hat(S) at x_star. observation_index keys the RNG substream for Monte
  // Carlo methods; regression methods ignore it.
  virtual double contribution(const Coalition& coalition, const Eigen::VectorXd& x_star,
                              std::int64_t observation_index) const = 0;
};

}  // namespace condshap
