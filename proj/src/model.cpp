#include "condshap/model.hpp"

#include <cmath>
#include <sstream>

#include "condshap/errors.hpp"
#include "condshap/format.hpp"

namespace condshap {

double PredictiveModel::predict(const Eigen::VectorXd& x) const {
  if (x.size() != feature_count()) {
    throw ShapeError("predict got a length-" + std::to_string(x.size()) + " vector, model has " +
                     std::to_string(feature_count()) + " features");
  }
  if (!x.allFinite()) throw InputError("predict input contains a non-finite value");
  return do_predict(x);
}

Eigen::VectorXd PredictiveModel::batch_predict(const Eigen::MatrixXd& x) const {
  if (x.cols() != feature_count()) {
    throw ShapeError("batch_predict got " + std::to_string(x.cols()) + " columns, model has " +
                     std::to_string(feature_count()) + " features");
  }
  if (!x.allFinite()) throw InputError("batch_predict input contains a non-finite value");
  return do_batch_predict(x);
}

Eigen::VectorXd PredictiveModel::do_batch_predict(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = do_predict(x.row(i).transpose());
  return out;
}

AnalyticModel::AnalyticModel(ResponseCoefficients coef) : coef_(std::move(coef)) {
  coef_.validate();
}

double AnalyticModel::do_predict(const Eigen::VectorXd& x) const {
  return response_mean(x, coef_);
}

Eigen::VectorXd AnalyticModel::do_batch_predict(const Eigen::MatrixXd& x) const {
  const int m = coef_.feature_count();
  Eigen::VectorXd out =
      (x.array().cos().matrix() * coef_.beta.tail(m)).array() + coef_.beta[0];
  for (std::size_t p = 0; p < coef_.interaction_pairs.size(); ++p) {
    const auto& [a, b] = coef_.interaction_pairs[p];
    const auto xa = x.col(a).array();
    const auto xb = x.col(b).array();
    out.array() += coef_.gamma[static_cast<Eigen::Index>(p)] *
                   (xa * xb + xa * xb.square() + xb * xa.square());
  }
  return out;
}

std::vector<std::string> BasisModel::term_names() const {
  std::vector<std::string> names;
  names.emplace_back("intercept");
  for (int j = 0; j < feature_count_; ++j) names.push_back("cos(x" + std::to_string(j + 1) + ")");
  for (const auto& [a, b] : interaction_pairs_) {
    const std::string xa = "x" + std::to_string(a + 1);
    const std::string xb = "x" + std::to_string(b + 1);
    names.push_back(xa + "*" + xb);
    names.push_back(xa + "*" + xb + "^2");
    names.push_back(xb + "*" + xa + "^2");
  }
  return names;
}

Eigen::VectorXd BasisModel::expand(const Eigen::VectorXd& x) const {
  Eigen::VectorXd row(coefficients_.size());
  Eigen::Index c = 0;
  row[c++] = 1.0;
  for (int j = 0; j < feature_count_; ++j) row[c++] = std::cos(x[j]);
  for (const auto& [a, b] : interaction_pairs_) {
    row[c++] = x[a] * x[b];
    row[c++] = x[a] * x[b] * x[b];
    row[c++] = x[b] * x[a] * x[a];
  }
  return row;
}

double BasisModel::do_predict(const Eigen::VectorXd& x) const {
  return expand(x).dot(coefficients_);
}

Eigen::VectorXd BasisModel::do_batch_predict(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd out =
      (x.array().cos().matrix() * coefficients_.segment(1, feature_count_)).array() +
      coefficients_[0];
  Eigen::Index c = 1 + feature_count_;
  for (const auto& [a, b] : interaction_pairs_) {
    const auto xa = x.col(a).array();
    const auto xb = x.col(b).array();
    out.array() += coefficients_[c] * (xa * xb) + coefficients_[c + 1] * (xa * xb.square()) +
                   coefficients_[c + 2] * (xb * xa.square());
    c += 3;
  }
  return out;
}

std::string BasisModel::to_json() const {
  const auto names = term_names();
  std::ostringstream out;
  out << "{\n  \"model\": \"ridge_basis\",\n  \"lambda\": " << format_double(lambda_)
      << ",\n  \"training_r2\": " << format_double(training_r2_) << ",\n  \"terms\": [";
  for (std::size_t i = 0; i < names.size(); ++i) {
    out << (i ? ", " : "") << '"' << names[i] << '"';
  }
  out << "],\n  \"coefficients\": [";
  for (Eigen::Index i = 0; i < coefficients_.size(); ++i) {
    out << (i ? ", " : "") << format_double(coefficients_[i]);
  }
  out << "]\n}\n";
  return out.str();
}

BasisModel fit_basis_model(const Dataset& train,
                           const std::vector<std::pair<int, int>>& interaction_pairs,
                           double lambda) {
  if (train.rows() < 1) throw DataError("fit_basis_model needs a nonempty training set");
  if (lambda < 0.0) throw ParameterError("ridge penalty must be nonnegative");
  const int m = train.cols();
  for (const auto& [a, b] : interaction_pairs) {
    if (a < 0 || a >= m || b < 0 || b >= m) {
      throw ParameterError("interaction pair (" + std::to_string(a + 1) + "," +
                           std::to_string(b + 1) + ") outside 1.." + std::to_string(m));
    }
  }

  BasisModel model;
  model.feature_count_ = m;
  model.interaction_pairs_ = interaction_pairs;
  model.lambda_ = lambda;
  const Eigen::Index n_terms = 1 + m + 3 * static_cast<Eigen::Index>(interaction_pairs.size());
  model.coefficients_ = Eigen::VectorXd::Zero(n_terms);

  Eigen::MatrixXd basis(train.rows(), n_terms);
  for (int i = 0; i < train.rows(); ++i) {
    basis.row(i) = model.expand(train.features.row(i).transpose()).transpose();
  }

  Eigen::MatrixXd gram = basis.transpose() * basis;
  gram.diagonal().array() += lambda;
  const Eigen::VectorXd rhs = basis.transpose() * train.response;

  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() == Eigen::Success) {
    model.coefficients_ = llt.solve(rhs);
  } else {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(basis);
    if (lambda == 0.0 && qr.rank() < n_terms) {
      throw SingularSystemError("design matrix is rank-deficient (rank " +
                                std::to_string(qr.rank()) + " of " + std::to_string(n_terms) +
                                ") and lambda = 0");
    }
    // Pivoted fallback on the regularized normal equations.
    model.coefficients_ = gram.colPivHouseholderQr().solve(rhs);
  }

  const Eigen::VectorXd fitted = basis * model.coefficients_;
  const double ss_res = (train.response - fitted).squaredNorm();
  const double ss_tot = (train.response.array() - train.response.mean()).square().sum();
  model.training_r2_ = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return model;
}

}  // namespace condshap
