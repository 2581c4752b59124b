#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "condshap/coalition.hpp"
#include "condshap/estimator.hpp"
#include "condshap/model.hpp"
#include "condshap/simdata.hpp"

namespace condshap {

// Dense table of contribution values v-hat(S), indexed by coalition mask.
// Slots start as NaN; aggregate rejects tables with unset or non-finite
// entries.
struct ContributionTable {
  int feature_count = 0;
  std::vector<double> values;
  std::string estimator_tag;
  std::int64_t observation_id = 0;

  explicit ContributionTable(int feature_count_in, std::string estimator_tag_in = {},
                             std::int64_t observation_id_in = 0);

  double& at(std::uint32_t mask) { return values[mask]; }
  double at(std::uint32_t mask) const { return values[mask]; }
  std::uint32_t grand_mask() const { return (std::uint32_t{1} << feature_count) - 1; }
};

// Additive explanation of one prediction: phi0 plus one value per feature.
// phi0 + sum(phi) equals the table's grand-coalition value within 1e-9.
struct Explanation {
  double phi0 = 0.0;
  Eigen::VectorXd phi;
  std::int64_t observation_id = 0;
  std::string estimator_tag;
};

// Exact Shapley aggregation over the full table:
//   phi_j = sum_{S not containing j} w(|S|, M) (v(S + j) - v(S)),
// phi0 = v(empty). One dense weighted pass, O(M 2^M).
Explanation aggregate(const ContributionTable& table);

// Fills a table by querying the estimator on every coalition (the grand
// coalition comes from the model directly), then aggregates it.
Explanation explain_observation(const PredictiveModel& model,
                                const ContributionEstimator& estimator,
                                const Eigen::VectorXd& x_star, std::int64_t observation_id);

// Ground-truth explanation with per-feature Monte Carlo standard errors.
struct TruthExplanation {
  Explanation explanation;
  Eigen::VectorXd phi_std_error;
  double mean_std_error = 0.0;
};

// Reference Shapley values from the known data-generating distribution:
// exact Gaussian conditioning plus antithetic Monte Carlo with k_truth
// samples per coalition. Standard errors propagate the per-coalition
// variances through the aggregation weights.
TruthExplanation true_shapley(const Eigen::VectorXd& x_star, const GaussianParams& dgp,
                              const PredictiveModel& model, int k_truth, std::uint64_t seed,
                              std::int64_t observation_id);

// CSV with one row per observation: id, estimator, phi0, phi1..phiM.
void write_explanations_csv(const std::vector<Explanation>& explanations,
                            const std::string& path);
std::string explanation_to_json(const Explanation& explanation);

}  // namespace condshap
