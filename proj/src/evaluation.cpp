#include "condshap/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "condshap/errors.hpp"
#include "condshap/format.hpp"
#include "condshap/rng.hpp"

#include <nlohmann/json.hpp>

namespace condshap {

MaeResult mae(const Eigen::MatrixXd& true_phi, const Eigen::MatrixXd& est_phi) {
  if (true_phi.rows() != est_phi.rows() || true_phi.cols() != est_phi.cols()) {
    throw ShapeError("mae got " + std::to_string(true_phi.rows()) + "x" +
                     std::to_string(true_phi.cols()) + " vs " + std::to_string(est_phi.rows()) +
                     "x" + std::to_string(est_phi.cols()));
  }
  MaeResult out;
  out.per_instance = (true_phi - est_phi).cwiseAbs().rowwise().mean();
  out.overall = out.per_instance.mean();
  return out;
}

Eigen::VectorXd distance_to_center(const Dataset& train, const Eigen::MatrixXd& test_features) {
  if (test_features.cols() != train.cols()) {
    throw ShapeError("test features have " + std::to_string(test_features.cols()) +
                     " columns, training data " + std::to_string(train.cols()));
  }
  const Eigen::VectorXd center = train.features.colwise().mean();
  return (test_features.rowwise() - center.transpose()).rowwise().norm();
}

namespace {

// Mid-ranks (ties averaged), 1-based.
Eigen::VectorXd midranks(const Eigen::VectorXd& values) {
  const Eigen::Index n = values.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return values[a] < values[b]; });
  Eigen::VectorXd ranks(n);
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && values[order[static_cast<std::size_t>(j + 1)]] ==
                            values[order[static_cast<std::size_t>(i)]]) {
      ++j;
    }
    const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Eigen::Index k = i; k <= j; ++k) ranks[order[static_cast<std::size_t>(k)]] = shared;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double ma = a.mean();
  const double mb = b.mean();
  const Eigen::ArrayXd da = a.array() - ma;
  const Eigen::ArrayXd db = b.array() - mb;
  const double denom = std::sqrt(da.square().sum() * db.square().sum());
  if (denom == 0.0) return std::nullopt;
  return std::clamp((da * db).sum() / denom, -1.0, 1.0);
}

}  // namespace

std::optional<double> spearman(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) {
    throw ShapeError("spearman got lengths " + std::to_string(a.size()) + " and " +
                     std::to_string(b.size()));
  }
  if (a.size() < 3) throw ParameterError("spearman needs at least 3 observations");
  return pearson(midranks(a), midranks(b));
}

double spearman_positive_pvalue(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                int n_shuffles, std::uint64_t seed) {
  if (n_shuffles < 1) throw ParameterError("permutation test needs at least one shuffle");
  const auto observed = spearman(a, b);
  if (!observed) return 1.0;

  // Permuting ranks directly leaves the correlation distribution unchanged.
  const Eigen::VectorXd rank_a = midranks(a);
  Eigen::VectorXd rank_b = midranks(b);
  Rng rng(seed);
  int at_least = 0;
  for (int s = 0; s < n_shuffles; ++s) {
    // Fisher-Yates on rank_b.
    for (Eigen::Index i = rank_b.size() - 1; i > 0; --i) {
      const auto j = static_cast<Eigen::Index>(
          rng.uniform_index(static_cast<std::uint64_t>(i) + 1));
      std::swap(rank_b[i], rank_b[j]);
    }
    const auto shuffled = pearson(rank_a, rank_b);
    if (shuffled && *shuffled >= *observed) ++at_least;
  }
  // Add-one correction keeps the p-value valid.
  return (static_cast<double>(at_least) + 1.0) / (static_cast<double>(n_shuffles) + 1.0);
}

double quantile_type7(const Eigen::VectorXd& values, double p) {
  if (values.size() < 1) throw ParameterError("quantile of an empty sample");
  std::vector<double> sorted(values.data(), values.data() + values.size());
  std::sort(sorted.begin(), sorted.end());
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - std::floor(h)) * (sorted[hi] - sorted[lo]);
}

std::vector<int> tukey_outliers(const Eigen::VectorXd& values) {
  if (values.size() < 4) {
    throw ParameterError("tukey_outliers needs at least 4 values, got " +
                         std::to_string(values.size()));
  }
  const double q1 = quantile_type7(values, 0.25);
  const double q3 = quantile_type7(values, 0.75);
  const double threshold = q3 + 1.5 * (q3 - q1);
  std::vector<int> out;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values[i] > threshold) out.push_back(static_cast<int>(i));
  }
  return out;
}

double rank_agreement(const Eigen::VectorXd& true_phi_row, const Eigen::VectorXd& est_phi_row,
                      int top_k) {
  if (true_phi_row.size() != est_phi_row.size()) {
    throw ShapeError("rank_agreement rows differ in length");
  }
  const auto m = static_cast<int>(true_phi_row.size());
  if (top_k < 1 || top_k > m) {
    throw ParameterError("rank_agreement needs 1 <= k <= " + std::to_string(m) + ", got " +
                         std::to_string(top_k));
  }
  const auto top_set = [&](const Eigen::VectorXd& row) {
    std::vector<int> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const double va = std::abs(row[a]);
      const double vb = std::abs(row[b]);
      return va != vb ? va > vb : a < b;
    });
    order.resize(static_cast<std::size_t>(top_k));
    return order;
  };
  const std::vector<int> top_true = top_set(true_phi_row);
  const std::vector<int> top_est = top_set(est_phi_row);
  int shared = 0;
  for (int j : top_true) {
    if (std::find(top_est.begin(), top_est.end(), j) != top_est.end()) ++shared;
  }
  return static_cast<double>(shared) / static_cast<double>(top_k);
}

namespace {

Eigen::MatrixXd phi_matrix(const std::vector<Explanation>& rows, int m) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = rows[i].phi.transpose();
  }
  return out;
}

}  // namespace

EvaluationReport build_report(const std::vector<TruthExplanation>& truth,
                              const std::vector<MethodExplanations>& methods,
                              const Dataset& train, const Dataset& test,
                              const PredictiveModel& model, double scaled_mae_floor) {
  const auto n = static_cast<std::size_t>(test.rows());
  const int m = test.cols();
  if (truth.size() != n) {
    throw AlignmentError("truth covers " + std::to_string(truth.size()) + " observations, test " +
                         std::to_string(n));
  }
  for (const auto& method : methods) {
    if (method.rows.size() != n) {
      throw AlignmentError("method '" + method.name + "' covers " +
                           std::to_string(method.rows.size()) + " observations, test " +
                           std::to_string(n));
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (method.rows[i].observation_id != truth[i].explanation.observation_id) {
        throw AlignmentError("method '" + method.name + "' row " + std::to_string(i) +
                             " has id " + std::to_string(method.rows[i].observation_id) +
                             ", truth has " +
                             std::to_string(truth[i].explanation.observation_id));
      }
    }
  }

  EvaluationReport report;
  report.scaled_mae_floor = scaled_mae_floor;
  report.observation_ids.reserve(n);
  for (const auto& t : truth) report.observation_ids.push_back(t.explanation.observation_id);

  report.distance = distance_to_center(train, test.features);

  {
    const Eigen::VectorXd center = train.features.colwise().mean();
    const Eigen::MatrixXd centered = train.features.rowwise() - center.transpose();
    Eigen::MatrixXd cov = (centered.transpose() * centered) /
                          static_cast<double>(std::max(1, train.rows() - 1));
    cov.diagonal().array() += 1e-12;
    const Eigen::LLT<Eigen::MatrixXd> llt(cov);
    report.mahalanobis.resize(test.rows());
    for (int i = 0; i < test.rows(); ++i) {
      const Eigen::VectorXd delta = test.features.row(i).transpose() - center;
      report.mahalanobis[i] = std::sqrt(delta.dot(llt.solve(delta)));
    }
  }

  report.prediction = model.batch_predict(test.features);

  std::vector<Explanation> truth_rows;
  truth_rows.reserve(n);
  double se_sum = 0.0;
  for (const auto& t : truth) {
    truth_rows.push_back(t.explanation);
    se_sum += t.mean_std_error;
  }
  report.truth_mean_std_error = se_sum / static_cast<double>(n);
  report.truth_phi0 = truth.front().explanation.phi0;
  report.pred_offset = (report.prediction.array() - report.truth_phi0).abs();

  const Eigen::MatrixXd truth_phi = phi_matrix(truth_rows, m);

  for (const auto& method : methods) {
    MethodReport entry;
    entry.name = method.name;
    const MaeResult err = mae(truth_phi, phi_matrix(method.rows, m));
    entry.overall_mae = err.overall;
    entry.per_instance_mae = err.per_instance;
    entry.spearman_mae_distance = spearman(err.per_instance, report.distance);
    entry.spearman_mae_pred_offset = spearman(err.per_instance, report.pred_offset);
    entry.outlier_indices = tukey_outliers(err.per_instance);
    double agreement = 0.0;
    const int top_k = std::min(3, m);
    for (std::size_t i = 0; i < n; ++i) {
      agreement += rank_agreement(truth_rows[i].phi, method.rows[i].phi, top_k);
    }
    entry.mean_rank_agreement_top3 = agreement / static_cast<double>(n);
    report.methods.push_back(std::move(entry));
  }

  const auto n_methods = static_cast<Eigen::Index>(methods.size());
  report.method_spearman = Eigen::MatrixXd::Identity(n_methods, n_methods);
  for (Eigen::Index a = 0; a < n_methods; ++a) {
    for (Eigen::Index b = a + 1; b < n_methods; ++b) {
      const auto rho = spearman(report.methods[static_cast<std::size_t>(a)].per_instance_mae,
                                report.methods[static_cast<std::size_t>(b)].per_instance_mae);
      report.method_spearman(a, b) = rho.value_or(std::numeric_limits<double>::quiet_NaN());
      report.method_spearman(b, a) = report.method_spearman(a, b);
    }
  }
  return report;
}

void write_report_csv(const EvaluationReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "# per-instance precision report, schema v1\n";
  out << "id,distance,mahalanobis,prediction,abs_pred_minus_phi0";
  for (const auto& method : report.methods) out << ",mae_" << method.name;
  for (const auto& method : report.methods) out << ",scaled_mae_diag_" << method.name;
  for (const auto& method : report.methods) out << ",outlier_" << method.name;
  out << '\n';
  const auto n = report.observation_ids.size();
  std::vector<std::vector<char>> outlier_flags(report.methods.size(),
                                               std::vector<char>(n, 0));
  for (std::size_t q = 0; q < report.methods.size(); ++q) {
    for (int idx : report.methods[q].outlier_indices) {
      outlier_flags[q][static_cast<std::size_t>(idx)] = 1;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    out << report.observation_ids[i] << ',' << format_double(report.distance[idx]) << ','
        << format_double(report.mahalanobis[idx]) << ','
        << format_double(report.prediction[idx]) << ','
        << format_double(report.pred_offset[idx]);
    for (const auto& method : report.methods) {
      out << ',' << format_double(method.per_instance_mae[idx]);
    }
    for (const auto& method : report.methods) {
      const double denom = std::max(report.pred_offset[idx], report.scaled_mae_floor);
      out << ',' << format_double(method.per_instance_mae[idx] / denom);
    }
    for (std::size_t q = 0; q < report.methods.size(); ++q) {
      out << ',' << static_cast<int>(outlier_flags[q][i]);
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path);
}

void write_report_json(const EvaluationReport& report, const std::string& path) {
  nlohmann::ordered_json doc;
  doc["schema"] = "summary v1";
  std::vector<std::string> names;
  for (const auto& method : report.methods) names.push_back(method.name);
  doc["methods"] = names;

  nlohmann::ordered_json overall;
  nlohmann::ordered_json corr_distance;
  nlohmann::ordered_json corr_offset;
  nlohmann::ordered_json agreement;
  nlohmann::ordered_json outliers;
  for (const auto& method : report.methods) {
    overall[method.name] = method.overall_mae;
    if (method.spearman_mae_distance) {
      corr_distance[method.name] = *method.spearman_mae_distance;
    } else {
      corr_distance[method.name] = nullptr;
    }
    if (method.spearman_mae_pred_offset) {
      corr_offset[method.name] = *method.spearman_mae_pred_offset;
    } else {
      corr_offset[method.name] = nullptr;
    }
    agreement[method.name] = method.mean_rank_agreement_top3;
    std::vector<std::int64_t> ids;
    for (int idx : method.outlier_indices) {
      ids.push_back(report.observation_ids[static_cast<std::size_t>(idx)]);
    }
    outliers[method.name] = ids;
  }
  doc["overall_mae"] = overall;
  doc["spearman_mae_vs_distance"] = corr_distance;
  doc["spearman_mae_vs_pred_offset"] = corr_offset;
  doc["rank_agreement_top3"] = agreement;
  doc["outlier_ids"] = outliers;

  std::vector<std::vector<double>> cross;
  for (Eigen::Index a = 0; a < report.method_spearman.rows(); ++a) {
    std::vector<double> row;
    for (Eigen::Index b = 0; b < report.method_spearman.cols(); ++b) {
      row.push_back(report.method_spearman(a, b));
    }
    cross.push_back(std::move(row));
  }
  doc["spearman_between_methods"] = cross;
  doc["truth"] = {{"phi0", report.truth_phi0},
                  {"mean_phi_std_error", report.truth_mean_std_error}};
  doc["scaled_mae_floor"] = report.scaled_mae_floor;

  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace condshap
