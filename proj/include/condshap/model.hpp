#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "condshap/simdata.hpp"

namespace condshap {

// A fitted or analytic prediction function. predict is pure; batch_predict
// row i always equals predict(row i). Inputs are validated here so derived
// classes only see well-formed data. Instances are immutable and safe for
// concurrent callers.
class PredictiveModel {
 public:
  virtual ~PredictiveModel() = default;

  virtual int feature_count() const = 0;

  double predict(const Eigen::VectorXd& x) const;
  Eigen::VectorXd batch_predict(const Eigen::MatrixXd& x) const;

 private:
  virtual double do_predict(const Eigen::VectorXd& x) const = 0;
  // Default maps do_predict over rows; override for vectorized evaluation.
  virtual Eigen::VectorXd do_batch_predict(const Eigen::MatrixXd& x) const;
};

// The response surface itself as a model: predict(x) = response_mean(x).
// Lets the benchmark run against a model with zero fitting error.
class AnalyticModel final : public PredictiveModel {
 public:
  explicit AnalyticModel(ResponseCoefficients coef);

  int feature_count() const override { return coef_.feature_count(); }
  const ResponseCoefficients& coefficients() const { return coef_; }

 private:
  double do_predict(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd do_batch_predict(const Eigen::MatrixXd& x) const override;

  ResponseCoefficients coef_;
};

// Ridge least squares on the basis {1, cos(x_j) for all j, and the monomials
// x_a x_b, x_a x_b^2, x_b x_a^2 per interaction pair}.
class BasisModel final : public PredictiveModel {
 public:
  int feature_count() const override { return feature_count_; }
  const Eigen::VectorXd& coefficients() const { return coefficients_; }
  double ridge_lambda() const { return lambda_; }
  double training_r2() const { return training_r2_; }

  // Human-readable basis term names, aligned with coefficients().
  std::vector<std::string> term_names() const;

  // Basis expansion of one input row.
  Eigen::VectorXd expand(const Eigen::VectorXd& x) const;

  // Coefficient audit document (term list + coefficient array).
  std::string to_json() const;

  friend BasisModel fit_basis_model(const Dataset& train,
                                    const std::vector<std::pair<int, int>>& interaction_pairs,
                                    double lambda);

 private:
  int feature_count_ = 0;
  std::vector<std::pair<int, int>> interaction_pairs_;
  Eigen::VectorXd coefficients_;
  double lambda_ = 0.0;
  double training_r2_ = 0.0;

  double do_predict(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd do_batch_predict(const Eigen::MatrixXd& x) const override;
};

// Minimizes ||y - Bc||^2 + lambda ||c||^2 over the basis expansion B of the
// training features. Solves the normal equations by Cholesky, falling back
// to a pivoted factorization; a rank-deficient design with lambda = 0 is an
// error.
BasisModel fit_basis_model(const Dataset& train,
                           const std::vector<std::pair<int, int>>& interaction_pairs,
                           double lambda);

}  // namespace condshap
