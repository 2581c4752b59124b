#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace condshap {

// Mean and SPD covariance of a multivariate Gaussian feature distribution.
// Validates symmetry and positive definiteness on construction and keeps the
// lower Cholesky factor for sampling.
struct GaussianParams {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd chol_lower;

  GaussianParams(Eigen::VectorXd mean_in, Eigen::MatrixXd covariance_in);

  int dim() const { return static_cast<int>(mean.size()); }
};

enum class DatasetRole { kTrain, kTest };

// Feature matrix plus response vector. Rows of both always agree.
struct Dataset {
  Eigen::MatrixXd features;
  Eigen::VectorXd response;
  DatasetRole role = DatasetRole::kTrain;

  Dataset(Eigen::MatrixXd features_in, Eigen::VectorXd response_in, DatasetRole role_in);

  int rows() const { return static_cast<int>(features.rows()); }
  int cols() const { return static_cast<int>(features.cols()); }
};

// Coefficients of the synthetic response surface
//   y = beta0 + sum_j beta_j cos(x_j) + sum_p gamma_p g(x_{p1}, x_{p2}) + eps
// with eps ~ N(0, noise_sd^2). Interaction pairs use 0-based feature indices.
struct ResponseCoefficients {
  Eigen::VectorXd beta;  // length M+1: intercept followed by cosine coefficients
  Eigen::VectorXd gamma;  // one coefficient per interaction pair
  std::vector<std::pair<int, int>> interaction_pairs;
  double noise_sd = 1.0;

  int feature_count() const { return static_cast<int>(beta.size()) - 1; }

  // The default 8-feature benchmark setting.
  static ResponseCoefficients defaults();

  void validate() const;
};

// AR(1)-style correlation matrix with entry (j,l) = rho^|j-l|.
Eigen::MatrixXd make_ar_covariance(int feature_count, double rho);

// The nonlinear interaction term x_j x_k + x_j x_k^2 + x_k x_j^2, symmetric
// in its arguments.
double interaction_g(double xj, double xk);

// Noiseless conditional mean of the response at x.
double response_mean(const Eigen::VectorXd& x, const ResponseCoefficients& coef);

// Draws n rows from N(mean, covariance) via the Cholesky transform and adds
// Gaussian noise to the response. Identical seeds give bit-identical data.
// Stream layout: per row, M feature normals followed by one noise normal.
Dataset sample_dataset(const GaussianParams& params, const ResponseCoefficients& coef,
                       int n, std::uint64_t seed, DatasetRole role = DatasetRole::kTrain);

// CSV with header x1..xM,y; shortest round-trip number formatting.
void write_dataset_csv(const Dataset& data, const std::string& path);
Dataset read_dataset_csv(const std::string& path, DatasetRole role);

}  // namespace condshap
