#include "condshap/simdata.hpp"

#include <cassert>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

#include "condshap/errors.hpp"
#include "condshap/format.hpp"
#include "condshap/rng.hpp"

namespace condshap {

GaussianParams::GaussianParams(Eigen::VectorXd mean_in, Eigen::MatrixXd covariance_in)
    : mean(std::move(mean_in)), covariance(std::move(covariance_in)) {
  const auto n = mean.size();
  if (covariance.rows() != n || covariance.cols() != n) {
    throw ShapeError("covariance must be " + std::to_string(n) + "x" + std::to_string(n));
  }
  const double asym = (covariance - covariance.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12) {
    throw NotSpdError("covariance asymmetric by " + std::to_string(asym));
  }
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success) {
    throw NotSpdError("covariance is not positive definite");
  }
  chol_lower = llt.matrixL();
}

Dataset::Dataset(Eigen::MatrixXd features_in, Eigen::VectorXd response_in, DatasetRole role_in)
    : features(std::move(features_in)), response(std::move(response_in)), role(role_in) {
  if (features.rows() != response.size()) {
    throw ShapeError("dataset has " + std::to_string(features.rows()) + " feature rows but " +
                     std::to_string(response.size()) + " responses");
  }
}

ResponseCoefficients ResponseCoefficients::defaults() {
  ResponseCoefficients coef;
  coef.beta.resize(9);
  coef.beta << 1.0, 0.2, -0.8, 1.0, 0.5, -0.8, 0.6, -0.7, -0.6;
  coef.gamma.resize(2);
  coef.gamma << 0.8, -1.0;
  coef.interaction_pairs = {{0, 1}, {2, 3}};
  coef.noise_sd = 1.0;
  return coef;
}

void ResponseCoefficients::validate() const {
  if (beta.size() < 2) {
    throw ShapeError("beta must hold an intercept plus at least one feature coefficient");
  }
  if (gamma.size() != static_cast<Eigen::Index>(interaction_pairs.size())) {
    throw ShapeError("gamma has " + std::to_string(gamma.size()) + " entries for " +
                     std::to_string(interaction_pairs.size()) + " interaction pairs");
  }
  if (!(noise_sd > 0.0)) {
    throw ParameterError("noise_sd must be positive");
  }
  const int m = feature_count();
  for (const auto& [a, b] : interaction_pairs) {
    if (a < 0 || a >= m || b < 0 || b >= m) {
      throw ParameterError("interaction pair (" + std::to_string(a + 1) + "," +
                           std::to_string(b + 1) + ") outside 1.." + std::to_string(m));
    }
  }
}

Eigen::MatrixXd make_ar_covariance(int feature_count, double rho) {
  if (!(std::abs(rho) < 1.0)) {
    throw ParameterError("AR covariance needs |rho| < 1, got " + std::to_string(rho));
  }
  if (feature_count < 1) {
    throw ParameterError("feature count must be positive");
  }
  Eigen::MatrixXd cov(feature_count, feature_count);
  for (int j = 0; j < feature_count; ++j) {
    for (int l = 0; l < feature_count; ++l) {
      cov(j, l) = std::pow(rho, std::abs(j - l));
    }
  }
  return cov;
}

double interaction_g(double xj, double xk) {
  return xj * xk + xj * xk * xk + xk * xj * xj;
}

double response_mean(const Eigen::VectorXd& x, const ResponseCoefficients& coef) {
  const int m = coef.feature_count();
  if (x.size() != m) {
    throw ShapeError("response_mean got a length-" + std::to_string(x.size()) +
                     " vector for " + std::to_string(m) + " coefficients");
  }
  double out = coef.beta[0];
  for (int j = 0; j < m; ++j) out += coef.beta[j + 1] * std::cos(x[j]);
  for (std::size_t p = 0; p < coef.interaction_pairs.size(); ++p) {
    const auto& [a, b] = coef.interaction_pairs[p];
    out += coef.gamma[static_cast<Eigen::Index>(p)] * interaction_g(x[a], x[b]);
  }
  return out;
}

Dataset sample_dataset(const GaussianParams& params, const ResponseCoefficients& coef,
                       int n, std::uint64_t seed, DatasetRole role) {
  if (n < 1) throw ParameterError("sample_dataset needs n >= 1");
  coef.validate();
  const int m = params.dim();
  if (m != coef.feature_count()) {
    throw ShapeError("distribution dimension " + std::to_string(m) +
                     " does not match coefficient dimension " +
                     std::to_string(coef.feature_count()));
  }
  Rng rng(seed);
  Eigen::MatrixXd features(n, m);
  Eigen::VectorXd response(n);
  Eigen::VectorXd z(m);
  for (int i = 0; i < n; ++i) {
    rng.fill_normals(z.data(), m);
    features.row(i) = (params.mean + params.chol_lower * z).transpose();
    response[i] = response_mean(features.row(i).transpose(), coef) + coef.noise_sd * rng.normal();
  }
  return Dataset(std::move(features), std::move(response), role);
}

void write_dataset_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  const int m = data.cols();
  for (int j = 0; j < m; ++j) out << 'x' << (j + 1) << ',';
  out << "y\n";
  for (int i = 0; i < data.rows(); ++i) {
    for (int j = 0; j < m; ++j) out << format_double(data.features(i, j)) << ',';
    out << format_double(data.response[i]) << '\n';
  }
  if (!out) throw IoError("write failed for " + path);
}

namespace {

double parse_field(const std::string& text, const std::string& path, int line_no) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw IoError(path + ":" + std::to_string(line_no) + ": bad numeric field '" + text + "'");
  }
  return value;
}

}  // namespace

Dataset read_dataset_csv(const std::string& path, DatasetRole role) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");

  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) header.push_back(field);
  }
  if (header.size() < 2 || header.back() != "y") {
    throw IoError(path + ": expected header x1..xM,y");
  }
  const int m = static_cast<int>(header.size()) - 1;
  for (int j = 0; j < m; ++j) {
    if (header[static_cast<std::size_t>(j)] != "x" + std::to_string(j + 1)) {
      throw IoError(path + ": expected column x" + std::to_string(j + 1) + ", got " +
                    header[static_cast<std::size_t>(j)]);
    }
  }

  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(static_cast<std::size_t>(m) + 1);
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) row.push_back(parse_field(field, path, line_no));
    if (row.size() != static_cast<std::size_t>(m) + 1) {
      throw IoError(path + ":" + std::to_string(line_no) + ": expected " +
                    std::to_string(m + 1) + " fields, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }

  const int n = static_cast<int>(rows.size());
  Eigen::MatrixXd features(n, m);
  Eigen::VectorXd response(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) features(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    response[i] = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(m)];
  }
  return Dataset(std::move(features), std::move(response), role);
}

}  // namespace condshap
