#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "condshap/coalition.hpp"
#include "condshap/estimator.hpp"
#include "condshap/model.hpp"
#include "condshap/rng.hpp"
#include "condshap/simdata.hpp"

namespace condshap {

// Conditional law of the unobserved block given x_S = x_star_S, in the
// complement's ascending index order. chol_lower factors the conditional
// covariance (with diagonal jitter escalation when it is only numerically
// PSD).
struct ConditionalGaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd chol_lower;
};

// Exact multivariate-normal conditioning:
//   mean = mu_Sbar + Sigma_{Sbar,S} Sigma_{S,S}^-1 (x_S - mu_S)
//   cov  = Sigma_{Sbar,Sbar} - Sigma_{Sbar,S} Sigma_{S,S}^-1 Sigma_{S,Sbar}
// The empty coalition returns the unconditional law. The grand coalition has
// no unobserved block and is rejected.
ConditionalGaussian gaussian_condition(const GaussianParams& params, const Coalition& coalition,
                                       const Eigen::VectorXd& x_star);

// Generates completions of the unobserved features given the observed ones.
// sample returns a K x |Sbar| matrix, deterministic given the rng state.
class ConditionalSampler {
 public:
  virtual ~ConditionalSampler() = default;

  virtual const std::string& name() const = 0;
  virtual int feature_count() const = 0;
  virtual Eigen::MatrixXd sample(const Coalition& coalition, const Eigen::VectorXd& x_star,
                                 int n_samples, Rng& rng) const = 0;
};

// Samples from the exact conditional of a fitted (or known) Gaussian.
// Per-coalition conditioning pieces that do not depend on x_star are
// precomputed for all masks when the dimension allows it.
class GaussianSampler final : public ConditionalSampler {
 public:
  explicit GaussianSampler(GaussianParams params);

  // Estimates parameters from training data: sample mean and sample
  // covariance with diagonal jitter, so the method sees only the data.
  static GaussianSampler fit(const Dataset& train, double jitter = 1e-8);

  const std::string& name() const override { return name_; }
  int feature_count() const override { return params_.dim(); }
  const GaussianParams& params() const { return params_; }

  Eigen::MatrixXd sample(const Coalition& coalition, const Eigen::VectorXd& x_star,
                         int n_samples, Rng& rng) const override;

 private:
  struct MaskCache {
    Eigen::MatrixXd regression;  // Sigma_{Sbar,S} Sigma_{S,S}^-1
    Eigen::MatrixXd chol_lower;  // factor of the conditional covariance
  };

  ConditionalGaussian condition_cached(const Coalition& coalition,
                                       const Eigen::VectorXd& x_star) const;

  std::string name_ = "gaussian";
  GaussianParams params_;
  std::vector<MaskCache> cache_;  // indexed by mask; empty above kCacheDim
  static constexpr int kCacheDim = 12;
};

// Draws training rows uniformly with replacement, ignoring x_star: the
// independence assumption.
class IndependenceSampler final : public ConditionalSampler {
 public:
  explicit IndependenceSampler(const Dataset& train);

  const std::string& name() const override { return name_; }
  int feature_count() const override { return static_cast<int>(train_features_.cols()); }

  Eigen::MatrixXd sample(const Coalition& coalition, const Eigen::VectorXd& x_star,
                         int n_samples, Rng& rng) const override;

 private:
  std::string name_ = "independence";
  Eigen::MatrixXd train_features_;
};

// Weights training rows by a Gaussian kernel on the Mahalanobis distance
// between their S-coordinates and x_star_S (scaling matrix: the training
// covariance of x_S), then draws completions from the weighted rows with
// replacement. The effective kernel width is bandwidth * sqrt(|S|). When
// every weight underflows to zero the sampler falls back to the single
// nearest row and counts the event.
class EmpiricalSampler final : public ConditionalSampler {
 public:
  EmpiricalSampler(const Dataset& train, double bandwidth);

  const std::string& name() const override { return name_; }
  int feature_count() const override { return static_cast<int>(train_features_.cols()); }
  double bandwidth() const { return bandwidth_; }

  // Number of sample() calls that hit the nearest-row fallback.
  long fallback_count() const { return fallback_count_.load(); }

  Eigen::MatrixXd sample(const Coalition& coalition, const Eigen::VectorXd& x_star,
                         int n_samples, Rng& rng) const override;

 private:
  std::string name_ = "empirical";
  Eigen::MatrixXd train_features_;
  Eigen::MatrixXd feature_covariance_;
  double bandwidth_ = 0.1;
  mutable std::atomic<long> fallback_count_{0};
};

// Monte Carlo contribution estimate: the mean of f over merged samples,
// optionally with the standard error of that mean.
struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

// (1/K) sum_k f(merge(x_star, completion_k, S)). The grand coalition is
// f(x_star) exactly, with no sampling and no rng consumption.
double estimate_v_mc(const PredictiveModel& model, const ConditionalSampler& sampler,
                     const Coalition& coalition, const Eigen::VectorXd& x_star, int n_samples,
                     Rng& rng);

McEstimate estimate_v_mc_with_se(const PredictiveModel& model, const ConditionalSampler& sampler,
                                 const Coalition& coalition, const Eigen::VectorXd& x_star,
                                 int n_samples, Rng& rng);

// Builds the K x M matrix whose rows are x_star with the complement
// coordinates replaced by the sampled completions.
Eigen::MatrixXd merge_completions(const Eigen::VectorXd& x_star,
                                  const Eigen::MatrixXd& completions,
                                  const Coalition& coalition);

// Adapts a sampler + model into a ContributionEstimator with per-(coalition,
// observation) substreams derived from the master seed and estimator name.
class MonteCarloEstimator final : public ContributionEstimator {
 public:
  MonteCarloEstimator(std::string name, std::shared_ptr<const PredictiveModel> model,
                      std::shared_ptr<const ConditionalSampler> sampler, int n_samples,
                      std::uint64_t master_seed);

  const std::string& name() const override { return name_; }
  int feature_count() const override { return sampler_->feature_count(); }
  const ConditionalSampler& sampler() const { return *sampler_; }

  double contribution(const Coalition& coalition, const Eigen::VectorXd& x_star,
                      std::int64_t observation_index) const override;

 private:
  std::string name_;
  std::shared_ptr<const PredictiveModel> model_;
  std::shared_ptr<const ConditionalSampler> sampler_;
  int n_samples_;
  std::uint64_t master_seed_;
  std::uint64_t salt_;
};

}  // namespace condshap
