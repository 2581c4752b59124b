#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "condshap/model.hpp"
#include "condshap/shapley_engine.hpp"
#include "condshap/simdata.hpp"

namespace condshap {

// Mean absolute error between true and estimated phi matrices (rows =
// observations, columns = features).
struct MaeResult {
  double overall = 0.0;
  Eigen::VectorXd per_instance;
};

MaeResult mae(const Eigen::MatrixXd& true_phi, const Eigen::MatrixXd& est_phi);

// Euclidean distance of every test row to the mean of the training features.
Eigen::VectorXd distance_to_center(const Dataset& train, const Eigen::MatrixXd& test_features);

// Spearman rank correlation with mid-ranks for ties. Constant inputs have no
// defined correlation and yield nullopt rather than an error.
std::optional<double> spearman(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// One-sided permutation p-value for spearman(a, b) > 0.
double spearman_positive_pvalue(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                int n_shuffles, std::uint64_t seed);

// Indices with value > Q3 + 1.5 (Q3 - Q1); quartiles by type-7 linear
// interpolation of the order statistics.
std::vector<int> tukey_outliers(const Eigen::VectorXd& values);

// Type-7 quantile of a sample (linear interpolation between order
// statistics), exposed because the outlier sets are part of frozen output.
double quantile_type7(const Eigen::VectorXd& values, double p);

// Fraction of the top-k features by |phi| shared between truth and estimate;
// ties break toward the lower feature index.
double rank_agreement(const Eigen::VectorXd& true_phi_row, const Eigen::VectorXd& est_phi_row,
                      int top_k);

// All explanations produced by one method, aligned with the test set.
struct MethodExplanations {
  std::string name;
  std::vector<Explanation> rows;
};

struct MethodReport {
  std::string name;
  double overall_mae = 0.0;
  Eigen::VectorXd per_instance_mae;
  std::optional<double> spearman_mae_distance;
  std::optional<double> spearman_mae_pred_offset;
  std::vector<int> outlier_indices;  // positions in the test set
  double mean_rank_agreement_top3 = 0.0;
};

// Per-method and per-instance precision report for one benchmark run.
struct EvaluationReport {
  std::vector<std::int64_t> observation_ids;
  Eigen::VectorXd distance;             // Euclidean distance to training center
  Eigen::VectorXd mahalanobis;          // auxiliary companion distance
  Eigen::VectorXd prediction;           // f(x*) per test observation
  Eigen::VectorXd pred_offset;          // |f(x*) - phi0| with the truth phi0
  double truth_phi0 = 0.0;
  double truth_mean_std_error = 0.0;
  std::vector<MethodReport> methods;
  Eigen::MatrixXd method_spearman;      // pairwise per-instance MAE correlations
  double scaled_mae_floor = 0.1;        // denominator floor for the diagnostic column
};

// Assembles every metric for the given truth and method explanations. All
// explanation sets must cover the same observation ids in the same order as
// the test set rows.
EvaluationReport build_report(const std::vector<TruthExplanation>& truth,
                              const std::vector<MethodExplanations>& methods,
                              const Dataset& train, const Dataset& test,
                              const PredictiveModel& model, double scaled_mae_floor = 0.1);

// Per-instance CSV: id, distances, prediction, |f - phi0|, one MAE column
// per method, the diagnostic scaled-MAE columns, and 0/1 outlier flags.
void write_report_csv(const EvaluationReport& report, const std::string& path);

// Summary JSON: overall MAEs, correlations, rank agreement, outliers.
void write_report_json(const EvaluationReport& report, const std::string& path);

}  // namespace condshap
