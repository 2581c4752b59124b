#include "condshap/shapley_engine.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <utility>

#include "condshap/errors.hpp"
#include "condshap/format.hpp"
#include "condshap/mc_estimators.hpp"
#include "condshap/rng.hpp"

namespace condshap {

ContributionTable::ContributionTable(int feature_count_in, std::string estimator_tag_in,
                                     std::int64_t observation_id_in)
    : feature_count(feature_count_in),
      estimator_tag(std::move(estimator_tag_in)),
      observation_id(observation_id_in) {
  if (feature_count < 1 || feature_count > Coalition::kMaxFeatures) {
    throw CapacityError("contribution table feature count " + std::to_string(feature_count) +
                        " outside [1, " + std::to_string(Coalition::kMaxFeatures) + "]");
  }
  values.assign(std::size_t{1} << feature_count,
                std::numeric_limits<double>::quiet_NaN());
}

namespace {

void check_complete(const ContributionTable& table) {
  std::string missing;
  int n_missing = 0;
  for (std::size_t mask = 0; mask < table.values.size(); ++mask) {
    if (!std::isfinite(table.values[mask])) {
      if (n_missing < 8) missing += (n_missing ? "," : "") + std::to_string(mask);
      ++n_missing;
    }
  }
  if (n_missing > 0) {
    throw MissingCoalitionError("table '" + table.estimator_tag + "' has " +
                                std::to_string(n_missing) +
                                " unset or non-finite coalition values (masks " + missing +
                                (n_missing > 8 ? ",..." : "") + ")");
  }
}

}  // namespace

Explanation aggregate(const ContributionTable& table) {
  check_complete(table);
  const int m = table.feature_count;
  std::vector<double> weight(static_cast<std::size_t>(m));
  for (int s = 0; s < m; ++s) weight[static_cast<std::size_t>(s)] = shapley_weight(s, m);

  Explanation out;
  out.phi0 = table.values[0];
  out.phi = Eigen::VectorXd::Zero(m);
  out.observation_id = table.observation_id;
  out.estimator_tag = table.estimator_tag;

  const std::uint32_t n_masks = std::uint32_t{1} << m;
  for (int j = 0; j < m; ++j) {
    const std::uint32_t bit = std::uint32_t{1} << j;
    double phi = 0.0;
    for (std::uint32_t mask = 0; mask < n_masks; ++mask) {
      if (mask & bit) continue;
      phi += weight[static_cast<std::size_t>(std::popcount(mask))] *
             (table.values[mask | bit] - table.values[mask]);
    }
    out.phi[j] = phi;
  }
  return out;
}

Explanation explain_observation(const PredictiveModel& model,
                                const ContributionEstimator& estimator,
                                const Eigen::VectorXd& x_star, std::int64_t observation_id) {
  const int m = estimator.feature_count();
  if (model.feature_count() != m) {
    throw ShapeError("model has " + std::to_string(model.feature_count()) +
                     " features, estimator " + std::to_string(m));
  }
  ContributionTable table(m, estimator.name(), observation_id);
  const std::uint32_t grand = table.grand_mask();
  for (std::uint32_t mask = 0; mask <= grand; ++mask) {
    const Coalition coalition(mask, m);
    try {
      table.at(mask) = mask == grand ? model.predict(x_star)
                                     : estimator.contribution(coalition, x_star, observation_id);
    } catch (const Error& err) {
      throw Error("observation " + std::to_string(observation_id) + ", coalition mask " +
                  std::to_string(mask) + ": " + err.what());
    }
  }
  return aggregate(table);
}

TruthExplanation true_shapley(const Eigen::VectorXd& x_star, const GaussianParams& dgp,
                              const PredictiveModel& model, int k_truth, std::uint64_t seed,
                              std::int64_t observation_id) {
  const int m = dgp.dim();
  if (model.feature_count() != m) {
    throw ShapeError("model has " + std::to_string(model.feature_count()) +
                     " features, distribution " + std::to_string(m));
  }
  if (k_truth < 2) throw ParameterError("true_shapley needs k_truth >= 2");

  ContributionTable table(m, "truth", observation_id);
  std::vector<double> variance(table.values.size(), 0.0);
  const std::uint32_t grand = table.grand_mask();
  const int n_pairs = (k_truth + 1) / 2;

  for (std::uint32_t mask = 0; mask <= grand; ++mask) {
    if (mask == grand) {
      table.at(mask) = model.predict(x_star);
      continue;
    }
    const Coalition coalition(mask, m);
    const ConditionalGaussian cond = gaussian_condition(dgp, coalition, x_star);
    const Eigen::Index dim = cond.mean.size();

    Rng rng(stream_key({seed, stream_tag::kTruth, mask,
                        static_cast<std::uint64_t>(observation_id)}));
    Eigen::MatrixXd z(dim, n_pairs);
    rng.fill_normals(z.data(), z.size());

    // Antithetic pairs: evaluate at mean + Lz and mean - Lz.
    Eigen::MatrixXd completions(2 * n_pairs, dim);
    const Eigen::MatrixXd shift = (cond.chol_lower * z).transpose();
    completions.topRows(n_pairs) = shift;
    completions.bottomRows(n_pairs) = -shift;
    completions.rowwise() += cond.mean.transpose();

    const Eigen::MatrixXd merged = merge_completions(x_star, completions, coalition);
    const Eigen::VectorXd preds = model.batch_predict(merged);

    const Eigen::VectorXd pair_means =
        0.5 * (preds.head(n_pairs) + preds.tail(n_pairs));
    const double value = pair_means.mean();
    table.at(mask) = value;
    if (n_pairs > 1) {
      const double pair_var = (pair_means.array() - value).square().sum() /
                              static_cast<double>(n_pairs - 1);
      variance[mask] = pair_var / static_cast<double>(n_pairs);
    }
  }

  TruthExplanation out;
  out.explanation = aggregate(table);

  // phi_j is a fixed linear combination of independent per-coalition
  // estimates; its variance is the weighted sum of their variances.
  out.phi_std_error = Eigen::VectorXd::Zero(m);
  for (int j = 0; j < m; ++j) {
    const std::uint32_t bit = std::uint32_t{1} << j;
    double var = 0.0;
    for (std::uint32_t mask = 0; mask <= grand; ++mask) {
      const int size = std::popcount(mask);
      const double coeff = (mask & bit) ? shapley_weight(size - 1, m) : -shapley_weight(size, m);
      var += coeff * coeff * variance[mask];
    }
    out.phi_std_error[j] = std::sqrt(var);
  }
  out.mean_std_error = out.phi_std_error.mean();
  return out;
}

void write_explanations_csv(const std::vector<Explanation>& explanations,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  const int m = explanations.empty() ? 0 : static_cast<int>(explanations.front().phi.size());
  out << "id,estimator,phi0";
  for (int j = 0; j < m; ++j) out << ",phi" << (j + 1);
  out << '\n';
  for (const Explanation& e : explanations) {
    out << e.observation_id << ',' << e.estimator_tag << ',' << format_double(e.phi0);
    for (Eigen::Index j = 0; j < e.phi.size(); ++j) out << ',' << format_double(e.phi[j]);
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path);
}

std::string explanation_to_json(const Explanation& explanation) {
  std::ostringstream out;
  out << "{\"id\": " << explanation.observation_id << ", \"estimator\": \""
      << explanation.estimator_tag << "\", \"phi0\": " << format_double(explanation.phi0)
      << ", \"phi\": [";
  for (Eigen::Index j = 0; j < explanation.phi.size(); ++j) {
    out << (j ? ", " : "") << format_double(explanation.phi[j]);
  }
  out << "]}";
  return out.str();
}

}  // namespace condshap
