#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "condshap/coalition.hpp"
#include "condshap/estimator.hpp"
#include "condshap/model.hpp"
#include "condshap/simdata.hpp"

namespace condshap {

enum class RegressionFamily {
  kRidgePoly,  // ridge on {1, x, x^2, cross terms, cos(x)} of the inputs
  kKnn,        // k-nearest-neighbor average of the targets
};

struct RegressionOptions {
  RegressionFamily family = RegressionFamily::kRidgePoly;
  double lambda = 1e-4;        // ridge penalty
  int k_neighbors = 25;        // kNN neighborhood size
  bool knn_distance_weighted = true;  // inverse-distance weights vs plain average
  int coalitions_per_row = 16;  // surrogate training coalitions per data row
};

// A fitted regression g_S over a fixed input layout.
class FittedRegression {
 public:
  virtual ~FittedRegression() = default;
  virtual double predict(const Eigen::VectorXd& input) const = 0;
};

// One regression per coalition: g_S is fit on the coalition's feature
// columns with targets f(x). The empty coalition stores the training mean of
// f; the grand coalition evaluates f directly.
class SeparateRegressionEstimator final : public ContributionEstimator {
 public:
  const std::string& name() const override { return name_; }
  int feature_count() const override { return feature_count_; }
  double empty_value() const { return empty_value_; }

  double contribution(const Coalition& coalition, const Eigen::VectorXd& x_star,
                      std::int64_t observation_index) const override;

  friend std::unique_ptr<SeparateRegressionEstimator> fit_separate(
      const Dataset& train, std::shared_ptr<const PredictiveModel> model,
      const RegressionOptions& options, int threads);

 private:
  std::string name_ = "reg_separate";
  int feature_count_ = 0;
  double empty_value_ = 0.0;
  std::shared_ptr<const PredictiveModel> model_;
  std::vector<std::unique_ptr<FittedRegression>> per_mask_;  // indexed by mask
};

// One surrogate regression over mask-augmented inputs (masked feature values
// with zeros outside the coalition, followed by the mask indicator bits).
class SurrogateRegressionEstimator final : public ContributionEstimator {
 public:
  const std::string& name() const override { return name_; }
  int feature_count() const override { return feature_count_; }
  double empty_value() const { return empty_value_; }

  double contribution(const Coalition& coalition, const Eigen::VectorXd& x_star,
                      std::int64_t observation_index) const override;

  friend std::unique_ptr<SurrogateRegressionEstimator> fit_surrogate(
      const Dataset& train, std::shared_ptr<const PredictiveModel> model,
      const RegressionOptions& options, std::uint64_t master_seed);

 private:
  std::string name_ = "reg_surrogate";
  int feature_count_ = 0;
  double empty_value_ = 0.0;
  std::shared_ptr<const PredictiveModel> model_;
  std::unique_ptr<FittedRegression> surrogate_;
};

// Fits all 2^M - 2 interior coalition regressions. threads > 1 fans the
// independent fits out over a worker pool; results do not depend on the
// thread count.
std::unique_ptr<SeparateRegressionEstimator> fit_separate(
    const Dataset& train, std::shared_ptr<const PredictiveModel> model,
    const RegressionOptions& options, int threads = 1);

// Builds the surrogate training set by pairing every training row with
// coalitions_per_row interior coalitions drawn uniformly (substream keyed by
// the master seed), then fits one regression on the augmented inputs.
std::unique_ptr<SurrogateRegressionEstimator> fit_surrogate(
    const Dataset& train, std::shared_ptr<const PredictiveModel> model,
    const RegressionOptions& options, std::uint64_t master_seed);

// v-hat(S)(x_star) for a fitted regression estimator. Thin forwarding
// wrapper; both estimators implement the same query contract.
double estimate_v_reg(const ContributionEstimator& estimator, const Coalition& coalition,
                      const Eigen::VectorXd& x_star);

}  // namespace condshap
