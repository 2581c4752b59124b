#include "condshap/reg_estimators.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>
#include <utility>

#include "condshap/errors.hpp"
#include "condshap/rng.hpp"

namespace condshap {

namespace {

// Degree-2 polynomial expansion plus cosine terms over `n_values` input
// coordinates, with `n_linear` extra coordinates entering linearly (the
// surrogate's mask bits). Layout:
//   [1, v, v^2, v_a v_b (a<b), cos(v), linear block]
Eigen::Index design_width(Eigen::Index n_values, Eigen::Index n_linear) {
  return 1 + 2 * n_values + n_values * (n_values - 1) / 2 + n_values + n_linear;
}

void expand_row(const Eigen::VectorXd& values, const Eigen::VectorXd& linear, double* out) {
  Eigen::Index c = 0;
  out[c++] = 1.0;
  for (Eigen::Index j = 0; j < values.size(); ++j) out[c++] = values[j];
  for (Eigen::Index j = 0; j < values.size(); ++j) out[c++] = values[j] * values[j];
  for (Eigen::Index a = 0; a < values.size(); ++a) {
    for (Eigen::Index b = a + 1; b < values.size(); ++b) out[c++] = values[a] * values[b];
  }
  for (Eigen::Index j = 0; j < values.size(); ++j) out[c++] = std::cos(values[j]);
  for (Eigen::Index j = 0; j < linear.size(); ++j) out[c++] = linear[j];
}

class RidgePolyRegression final : public FittedRegression {
 public:
  RidgePolyRegression(const Eigen::MatrixXd& value_inputs, const Eigen::MatrixXd& linear_inputs,
                      const Eigen::VectorXd& targets, double lambda) {
    n_values_ = value_inputs.cols();
    n_linear_ = linear_inputs.cols();
    const Eigen::Index width = design_width(n_values_, n_linear_);
    Eigen::MatrixXd design(value_inputs.rows(), width);
    for (Eigen::Index i = 0; i < value_inputs.rows(); ++i) {
      expand_row(value_inputs.row(i).transpose(),
                 n_linear_ ? Eigen::VectorXd(linear_inputs.row(i).transpose())
                           : Eigen::VectorXd(0),
                 design.row(i).data());
    }
    Eigen::MatrixXd gram = design.transpose() * design;
    gram.diagonal().array() += lambda;
    const Eigen::VectorXd rhs = design.transpose() * targets;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() == Eigen::Success) {
      coefficients_ = llt.solve(rhs);
    } else if (lambda > 0.0) {
      coefficients_ = gram.ldlt().solve(rhs);
    } else {
      throw SingularSystemError("ridge design is singular with lambda = 0");
    }
  }

  double predict(const Eigen::VectorXd& input) const override {
    Eigen::VectorXd row(coefficients_.size());
    expand_row(input.head(n_values_), input.tail(n_linear_), row.data());
    return row.dot(coefficients_);
  }

 private:
  Eigen::Index n_values_ = 0;
  Eigen::Index n_linear_ = 0;
  Eigen::VectorXd coefficients_;
};

class KnnRegression final : public FittedRegression {
 public:
  KnnRegression(Eigen::MatrixXd inputs, Eigen::VectorXd targets, int k, bool distance_weighted)
      : inputs_(std::move(inputs)),
        targets_(std::move(targets)),
        k_(std::min<Eigen::Index>(k, inputs_.rows())),
        distance_weighted_(distance_weighted) {
    if (k < 1) throw ParameterError("kNN needs k >= 1");
  }

  double predict(const Eigen::VectorXd& input) const override {
    const Eigen::Index n = inputs_.rows();
    Eigen::VectorXd sq_dist = (inputs_.rowwise() - input.transpose()).rowwise().squaredNorm();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    const auto closer = [&](Eigen::Index a, Eigen::Index b) {
      return sq_dist[a] != sq_dist[b] ? sq_dist[a] < sq_dist[b] : a < b;
    };
    std::nth_element(order.begin(), order.begin() + (k_ - 1), order.end(), closer);
    // Canonical accumulation order, so results are platform-stable.
    std::sort(order.begin(), order.begin() + k_, closer);
    double weight_sum = 0.0;
    double value = 0.0;
    for (Eigen::Index i = 0; i < k_; ++i) {
      const Eigen::Index row = order[static_cast<std::size_t>(i)];
      const double w =
          distance_weighted_ ? 1.0 / (std::sqrt(sq_dist[row]) + 1e-8) : 1.0;
      weight_sum += w;
      value += w * targets_[row];
    }
    return value / weight_sum;
  }

 private:
  Eigen::MatrixXd inputs_;
  Eigen::VectorXd targets_;
  Eigen::Index k_;
  bool distance_weighted_;
};

std::unique_ptr<FittedRegression> fit_family(const RegressionOptions& options,
                                             const Eigen::MatrixXd& value_inputs,
                                             const Eigen::MatrixXd& linear_inputs,
                                             const Eigen::VectorXd& targets) {
  switch (options.family) {
    case RegressionFamily::kRidgePoly:
      return std::make_unique<RidgePolyRegression>(value_inputs, linear_inputs, targets,
                                                   options.lambda);
    case RegressionFamily::kKnn: {
      Eigen::MatrixXd inputs(value_inputs.rows(), value_inputs.cols() + linear_inputs.cols());
      inputs << value_inputs, linear_inputs;
      return std::make_unique<KnnRegression>(std::move(inputs), targets, options.k_neighbors,
                                             options.knn_distance_weighted);
    }
  }
  throw ParameterError("unknown regression family");
}

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& features, const std::vector<int>& cols) {
  Eigen::MatrixXd out(features.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = features.col(cols[j]);
  }
  return out;
}

// Mask-augmented surrogate input: feature values zeroed outside S, then the
// mask bits.
Eigen::VectorXd surrogate_input(const Eigen::VectorXd& x, const Coalition& coalition) {
  const int m = coalition.feature_count();
  Eigen::VectorXd input(2 * m);
  for (int j = 0; j < m; ++j) {
    const bool in = coalition.contains(j);
    input[j] = in ? x[j] : 0.0;
    input[m + j] = in ? 1.0 : 0.0;
  }
  return input;
}

void check_query(const ContributionEstimator& estimator, const Coalition& coalition,
                 const Eigen::VectorXd& x_star) {
  if (coalition.feature_count() != estimator.feature_count()) {
    throw ShapeError("coalition is over " + std::to_string(coalition.feature_count()) +
                     " features, estimator '" + estimator.name() + "' over " +
                     std::to_string(estimator.feature_count()));
  }
  if (x_star.size() != estimator.feature_count()) {
    throw ShapeError("x_star has length " + std::to_string(x_star.size()) + ", expected " +
                     std::to_string(estimator.feature_count()));
  }
}

}  // namespace

double SeparateRegressionEstimator::contribution(const Coalition& coalition,
                                                 const Eigen::VectorXd& x_star,
                                                 std::int64_t observation_index) const {
  (void)observation_index;
  check_query(*this, coalition, x_star);
  if (coalition.is_empty()) return empty_value_;
  if (coalition.is_grand()) return model_->predict(x_star);
  const auto& fitted = per_mask_[coalition.mask()];
  if (!fitted) {
    throw MissingCoalitionError("no fitted regression for coalition mask " +
                                std::to_string(coalition.mask()));
  }
  Eigen::VectorXd x_obs(coalition.size());
  Eigen::Index c = 0;
  for (int j = 0; j < feature_count_; ++j) {
    if (coalition.contains(j)) x_obs[c++] = x_star[j];
  }
  return fitted->predict(x_obs);
}

std::unique_ptr<SeparateRegressionEstimator> fit_separate(
    const Dataset& train, std::shared_ptr<const PredictiveModel> model,
    const RegressionOptions& options, int threads) {
  if (train.rows() < 1) throw DataError("fit_separate needs a nonempty training set");
  const int m = train.cols();
  if (model->feature_count() != m) {
    throw ShapeError("model expects " + std::to_string(model->feature_count()) +
                     " features, training data has " + std::to_string(m));
  }

  auto out = std::unique_ptr<SeparateRegressionEstimator>(new SeparateRegressionEstimator());
  out->feature_count_ = m;
  out->model_ = model;
  const Eigen::VectorXd targets = model->batch_predict(train.features);
  out->empty_value_ = targets.mean();

  const std::uint32_t grand = (std::uint32_t{1} << m) - 1;
  out->per_mask_.resize(grand + 1);

  const auto fit_mask = [&](std::uint32_t mask) {
    const Coalition coalition(mask, m);
    try {
      const Eigen::MatrixXd inputs = select_columns(train.features, coalition.members());
      out->per_mask_[mask] =
          fit_family(options, inputs, Eigen::MatrixXd(inputs.rows(), 0), targets);
    } catch (const Error& err) {
      throw Error("separate regression for coalition mask " + std::to_string(mask) + ": " +
                  err.what());
    }
  };

  if (threads <= 1) {
    for (std::uint32_t mask = 1; mask < grand; ++mask) fit_mask(mask);
  } else {
    std::atomic<std::uint32_t> next{1};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::uint32_t mask = next.fetch_add(1); mask < grand;
               mask = next.fetch_add(1)) {
            fit_mask(mask);
          }
        } catch (...) {
          failures[static_cast<std::size_t>(t)] = std::current_exception();
        }
      });
    }
    for (auto& worker : pool) worker.join();
    for (const auto& failure : failures) {
      if (failure) std::rethrow_exception(failure);
    }
  }
  return out;
}

double SurrogateRegressionEstimator::contribution(const Coalition& coalition,
                                                  const Eigen::VectorXd& x_star,
                                                  std::int64_t observation_index) const {
  (void)observation_index;
  check_query(*this, coalition, x_star);
  if (coalition.is_empty()) return empty_value_;
  if (coalition.is_grand()) return model_->predict(x_star);
  return surrogate_->predict(surrogate_input(x_star, coalition));
}

std::unique_ptr<SurrogateRegressionEstimator> fit_surrogate(
    const Dataset& train, std::shared_ptr<const PredictiveModel> model,
    const RegressionOptions& options, std::uint64_t master_seed) {
  if (train.rows() < 1) throw DataError("fit_surrogate needs a nonempty training set");
  if (options.coalitions_per_row < 1) {
    throw ParameterError("coalitions_per_row must be at least 1");
  }
  const int m = train.cols();
  if (model->feature_count() != m) {
    throw ShapeError("model expects " + std::to_string(model->feature_count()) +
                     " features, training data has " + std::to_string(m));
  }
  if (m < 2) throw DataError("surrogate needs at least two features");

  auto out = std::unique_ptr<SurrogateRegressionEstimator>(new SurrogateRegressionEstimator());
  out->feature_count_ = m;
  out->model_ = model;
  const Eigen::VectorXd targets = model->batch_predict(train.features);
  out->empty_value_ = targets.mean();

  const std::uint32_t grand = (std::uint32_t{1} << m) - 1;
  const Eigen::Index n_rows =
      static_cast<Eigen::Index>(train.rows()) * options.coalitions_per_row;
  Eigen::MatrixXd value_inputs(n_rows, m);
  Eigen::MatrixXd linear_inputs(n_rows, m);
  Eigen::VectorXd expanded_targets(n_rows);

  Rng rng(stream_key({master_seed, stream_tag::kSurrogateMasks}));
  Eigen::Index r = 0;
  for (int i = 0; i < train.rows(); ++i) {
    const Eigen::VectorXd x = train.features.row(i).transpose();
    for (int c = 0; c < options.coalitions_per_row; ++c, ++r) {
      // Interior coalitions only: masks 1 .. grand-1.
      const auto mask = static_cast<std::uint32_t>(rng.uniform_index(grand - 1) + 1);
      const Coalition coalition(mask, m);
      const Eigen::VectorXd input = surrogate_input(x, coalition);
      value_inputs.row(r) = input.head(m).transpose();
      linear_inputs.row(r) = input.tail(m).transpose();
      expanded_targets[r] = targets[i];
    }
  }

  try {
    out->surrogate_ = fit_family(options, value_inputs, linear_inputs, expanded_targets);
  } catch (const Error& err) {
    throw Error(std::string("surrogate regression fit: ") + err.what());
  }
  return out;
}

double estimate_v_reg(const ContributionEstimator& estimator, const Coalition& coalition,
                      const Eigen::VectorXd& x_star) {
  return estimator.contribution(coalition, x_star, 0);
}

}  // namespace condshap
