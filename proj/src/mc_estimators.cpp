#include "condshap/mc_estimators.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "condshap/errors.hpp"

namespace condshap {

namespace {

// Cholesky with escalating diagonal jitter for conditional covariances that
// are PSD only up to roundoff.
Eigen::MatrixXd chol_with_jitter(const Eigen::MatrixXd& cov, const std::string& context) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  const double scale = std::max(1.0, cov.diagonal().maxCoeff());
  for (double jitter = 1e-12; jitter <= 1e-6; jitter *= 100.0) {
    Eigen::MatrixXd bumped = cov;
    bumped.diagonal().array() += jitter * scale;
    llt.compute(bumped);
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  throw ConditioningError(context + ": conditional covariance is not PSD within jitter budget");
}

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& full, const std::vector<int>& rows,
                          const std::vector<int>& cols) {
  Eigen::MatrixXd out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          full(rows[i], cols[j]);
    }
  }
  return out;
}

// x_star-independent pieces of the Gaussian conditioning for one coalition.
struct ConditionPieces {
  Eigen::MatrixXd regression;  // Sigma_{Sbar,S} Sigma_{S,S}^-1, |Sbar| x |S|
  Eigen::MatrixXd covariance;  // conditional covariance of the hidden block
  Eigen::MatrixXd chol_lower;
};

ConditionPieces condition_pieces(const GaussianParams& params, const Coalition& coalition) {
  ConditionPieces out;
  if (coalition.is_empty()) {
    out.regression.resize(params.dim(), 0);
    out.covariance = params.covariance;
    out.chol_lower = params.chol_lower;
    return out;
  }
  const std::vector<int> observed = coalition.members();
  const std::vector<int> hidden = coalition.complement_members();
  const Eigen::MatrixXd cov_ss = submatrix(params.covariance, observed, observed);
  const Eigen::MatrixXd cov_hs = submatrix(params.covariance, hidden, observed);
  const Eigen::MatrixXd cov_hh = submatrix(params.covariance, hidden, hidden);
  Eigen::LLT<Eigen::MatrixXd> llt(cov_ss);
  if (llt.info() != Eigen::Success) {
    throw ConditioningError("singular observed-block covariance for coalition mask " +
                            std::to_string(coalition.mask()));
  }
  out.regression = llt.solve(cov_hs.transpose()).transpose();
  out.covariance = cov_hh - out.regression * cov_hs.transpose();
  // Symmetrize before factoring; the subtraction leaves roundoff skew.
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  out.chol_lower = chol_with_jitter(out.covariance,
                                    "coalition mask " + std::to_string(coalition.mask()));
  return out;
}

Eigen::VectorXd conditional_mean(const GaussianParams& params, const Coalition& coalition,
                                 const Eigen::MatrixXd& regression,
                                 const Eigen::VectorXd& x_star) {
  if (coalition.is_empty()) return params.mean;
  const std::vector<int> observed = coalition.members();
  const std::vector<int> hidden = coalition.complement_members();
  Eigen::VectorXd obs_delta(observed.size());
  for (std::size_t i = 0; i < observed.size(); ++i) {
    obs_delta[static_cast<Eigen::Index>(i)] = x_star[observed[i]] - params.mean[observed[i]];
  }
  Eigen::VectorXd mean(hidden.size());
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    mean[static_cast<Eigen::Index>(i)] = params.mean[hidden[i]];
  }
  mean += regression * obs_delta;
  return mean;
}

// Uniform training-row draws shared by the independence sampler and the
// empty-coalition path of the empirical sampler, so both consume the stream
// identically.
Eigen::MatrixXd draw_training_rows(const Eigen::MatrixXd& features, const std::vector<int>& cols,
                                   int n_samples, Rng& rng) {
  const auto n_rows = static_cast<std::uint64_t>(features.rows());
  Eigen::MatrixXd out(n_samples, static_cast<Eigen::Index>(cols.size()));
  for (int k = 0; k < n_samples; ++k) {
    const auto row = static_cast<Eigen::Index>(rng.uniform_index(n_rows));
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out(k, static_cast<Eigen::Index>(j)) = features(row, cols[j]);
    }
  }
  return out;
}

}  // namespace

ConditionalGaussian gaussian_condition(const GaussianParams& params, const Coalition& coalition,
                                       const Eigen::VectorXd& x_star) {
  const int m = params.dim();
  if (coalition.feature_count() != m) {
    throw ShapeError("coalition is over " + std::to_string(coalition.feature_count()) +
                     " features, distribution over " + std::to_string(m));
  }
  if (x_star.size() != m) {
    throw ShapeError("x_star has length " + std::to_string(x_star.size()) + ", expected " +
                     std::to_string(m));
  }
  if (coalition.is_grand()) {
    throw ConditioningError("grand coalition leaves no features to condition");
  }

  ConditionPieces pieces = condition_pieces(params, coalition);
  ConditionalGaussian out;
  out.mean = conditional_mean(params, coalition, pieces.regression, x_star);
  out.covariance = std::move(pieces.covariance);
  out.chol_lower = std::move(pieces.chol_lower);
  return out;
}

GaussianSampler::GaussianSampler(GaussianParams params) : params_(std::move(params)) {
  const int m = params_.dim();
  if (m <= kCacheDim) {
    const std::uint32_t n_masks = std::uint32_t{1} << m;
    cache_.resize(n_masks);
    for (std::uint32_t mask = 0; mask + 1 < n_masks; ++mask) {
      ConditionPieces pieces = condition_pieces(params_, Coalition(mask, m));
      cache_[mask].regression = std::move(pieces.regression);
      cache_[mask].chol_lower = std::move(pieces.chol_lower);
    }
  }
}

GaussianSampler GaussianSampler::fit(const Dataset& train, double jitter) {
  if (train.rows() < 2) throw DataError("gaussian sampler needs at least two training rows");
  const Eigen::VectorXd mean = train.features.colwise().mean();
  const Eigen::MatrixXd centered = train.features.rowwise() - mean.transpose();
  Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(train.rows() - 1);
  cov.diagonal().array() += jitter;
  return GaussianSampler(GaussianParams(mean, cov));
}

ConditionalGaussian GaussianSampler::condition_cached(const Coalition& coalition,
                                                      const Eigen::VectorXd& x_star) const {
  if (cache_.empty()) return gaussian_condition(params_, coalition, x_star);
  const MaskCache& slot = cache_[coalition.mask()];
  ConditionalGaussian out;
  out.chol_lower = slot.chol_lower;
  out.mean = conditional_mean(params_, coalition, slot.regression, x_star);
  return out;
}

Eigen::MatrixXd GaussianSampler::sample(const Coalition& coalition,
                                        const Eigen::VectorXd& x_star, int n_samples,
                                        Rng& rng) const {
  if (n_samples < 1) throw ParameterError("sample count must be positive");
  const ConditionalGaussian cond = condition_cached(coalition, x_star);
  const Eigen::Index dim = cond.mean.size();
  Eigen::MatrixXd z(dim, n_samples);
  rng.fill_normals(z.data(), z.size());
  Eigen::MatrixXd out = (cond.chol_lower * z).transpose();
  out.rowwise() += cond.mean.transpose();
  return out;
}

IndependenceSampler::IndependenceSampler(const Dataset& train)
    : train_features_(train.features) {
  if (train.rows() < 1) throw DataError("independence sampler needs a nonempty training set");
}

Eigen::MatrixXd IndependenceSampler::sample(const Coalition& coalition,
                                            const Eigen::VectorXd& x_star, int n_samples,
                                            Rng& rng) const {
  (void)x_star;
  if (n_samples < 1) throw ParameterError("sample count must be positive");
  return draw_training_rows(train_features_, coalition.complement_members(), n_samples, rng);
}

EmpiricalSampler::EmpiricalSampler(const Dataset& train, double bandwidth)
    : train_features_(train.features), bandwidth_(bandwidth) {
  if (train.rows() < 1) throw DataError("empirical sampler needs a nonempty training set");
  if (!(bandwidth > 0.0)) throw ParameterError("bandwidth must be positive");
  const Eigen::VectorXd mean = train_features_.colwise().mean();
  const Eigen::MatrixXd centered = train_features_.rowwise() - mean.transpose();
  const double denom = std::max(1, train.rows() - 1);
  feature_covariance_ = (centered.transpose() * centered) / denom;
  feature_covariance_.diagonal().array() += 1e-8;
}

Eigen::MatrixXd EmpiricalSampler::sample(const Coalition& coalition,
                                         const Eigen::VectorXd& x_star, int n_samples,
                                         Rng& rng) const {
  if (n_samples < 1) throw ParameterError("sample count must be positive");
  const std::vector<int> hidden = coalition.complement_members();
  if (coalition.is_empty()) {
    // No conditioning coordinates: same draws as the independence sampler.
    return draw_training_rows(train_features_, hidden, n_samples, rng);
  }

  const std::vector<int> observed = coalition.members();
  const Eigen::MatrixXd cov_ss = submatrix(feature_covariance_, observed, observed);
  Eigen::LLT<Eigen::MatrixXd> llt(cov_ss);
  if (llt.info() != Eigen::Success) {
    throw ConditioningError("empirical sampler: singular training covariance for coalition mask " +
                            std::to_string(coalition.mask()));
  }

  const Eigen::Index n_rows = train_features_.rows();
  Eigen::VectorXd x_obs(observed.size());
  for (std::size_t j = 0; j < observed.size(); ++j) {
    x_obs[static_cast<Eigen::Index>(j)] = x_star[observed[j]];
  }

  const double width = bandwidth_ * std::sqrt(static_cast<double>(coalition.size()));
  const double inv_two_width_sq = 1.0 / (2.0 * width * width);

  Eigen::VectorXd sq_dist(n_rows);
  Eigen::VectorXd delta(observed.size());
  for (Eigen::Index i = 0; i < n_rows; ++i) {
    for (std::size_t j = 0; j < observed.size(); ++j) {
      delta[static_cast<Eigen::Index>(j)] = train_features_(i, observed[j]) -
                                            x_obs[static_cast<Eigen::Index>(j)];
    }
    sq_dist[i] = delta.dot(llt.solve(delta));
  }

  Eigen::VectorXd cumulative(n_rows);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n_rows; ++i) {
    total += std::exp(-sq_dist[i] * inv_two_width_sq);
    cumulative[i] = total;
  }

  Eigen::MatrixXd out(n_samples, static_cast<Eigen::Index>(hidden.size()));
  if (total <= 0.0) {
    // Every kernel weight underflowed; fall back to the single nearest row.
    fallback_count_.fetch_add(1, std::memory_order_relaxed);
    Eigen::Index nearest = 0;
    sq_dist.minCoeff(&nearest);
    for (int k = 0; k < n_samples; ++k) {
      for (std::size_t j = 0; j < hidden.size(); ++j) {
        out(k, static_cast<Eigen::Index>(j)) = train_features_(nearest, hidden[j]);
      }
    }
    return out;
  }

  for (int k = 0; k < n_samples; ++k) {
    const double target = rng.uniform() * total;
    const double* begin = cumulative.data();
    const double* pos = std::lower_bound(begin, begin + n_rows, target);
    const Eigen::Index row = std::min<Eigen::Index>(pos - begin, n_rows - 1);
    for (std::size_t j = 0; j < hidden.size(); ++j) {
      out(k, static_cast<Eigen::Index>(j)) = train_features_(row, hidden[j]);
    }
  }
  return out;
}

Eigen::MatrixXd merge_completions(const Eigen::VectorXd& x_star,
                                  const Eigen::MatrixXd& completions,
                                  const Coalition& coalition) {
  const std::vector<int> hidden = coalition.complement_members();
  if (completions.cols() != static_cast<Eigen::Index>(hidden.size())) {
    throw ShapeError("completions have " + std::to_string(completions.cols()) +
                     " columns for a complement of size " + std::to_string(hidden.size()));
  }
  Eigen::MatrixXd merged(completions.rows(), x_star.size());
  merged.rowwise() = x_star.transpose();
  for (std::size_t j = 0; j < hidden.size(); ++j) {
    merged.col(hidden[j]) = completions.col(static_cast<Eigen::Index>(j));
  }
  return merged;
}

double estimate_v_mc(const PredictiveModel& model, const ConditionalSampler& sampler,
                     const Coalition& coalition, const Eigen::VectorXd& x_star, int n_samples,
                     Rng& rng) {
  return estimate_v_mc_with_se(model, sampler, coalition, x_star, n_samples, rng).value;
}

McEstimate estimate_v_mc_with_se(const PredictiveModel& model, const ConditionalSampler& sampler,
                                 const Coalition& coalition, const Eigen::VectorXd& x_star,
                                 int n_samples, Rng& rng) {
  if (n_samples < 1) throw ParameterError("estimate_v_mc needs K >= 1");
  if (coalition.is_grand()) {
    return {model.predict(x_star), 0.0};
  }
  const Eigen::MatrixXd completions = sampler.sample(coalition, x_star, n_samples, rng);
  const Eigen::MatrixXd merged = merge_completions(x_star, completions, coalition);
  const Eigen::VectorXd preds = model.batch_predict(merged);
  McEstimate out;
  out.value = preds.mean();
  if (n_samples > 1) {
    const double var = (preds.array() - out.value).square().sum() /
                       static_cast<double>(n_samples - 1);
    out.std_error = std::sqrt(var / static_cast<double>(n_samples));
  }
  return out;
}

MonteCarloEstimator::MonteCarloEstimator(std::string name,
                                         std::shared_ptr<const PredictiveModel> model,
                                         std::shared_ptr<const ConditionalSampler> sampler,
                                         int n_samples, std::uint64_t master_seed)
    : name_(std::move(name)),
      model_(std::move(model)),
      sampler_(std::move(sampler)),
      n_samples_(n_samples),
      master_seed_(master_seed),
      salt_(name_salt(name_.c_str())) {
  if (n_samples_ < 1) throw ParameterError("Monte Carlo estimator needs K >= 1");
  if (model_->feature_count() != sampler_->feature_count()) {
    throw ShapeError("model and sampler disagree on feature count");
  }
}

double MonteCarloEstimator::contribution(const Coalition& coalition,
                                         const Eigen::VectorXd& x_star,
                                         std::int64_t observation_index) const {
  if (coalition.is_grand()) return model_->predict(x_star);
  Rng rng(stream_key({master_seed_, stream_tag::kEstimator, salt_, coalition.mask(),
                      static_cast<std::uint64_t>(observation_index)}));
  return estimate_v_mc(*model_, *sampler_, coalition, x_star, n_samples_, rng);
}

}  // namespace condshap
