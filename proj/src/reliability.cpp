#include "ctm/reliability.hpp"

#include <algorithm>
#include <numeric>
#include <tuple>

namespace ctm {

std::string to_string(ReliabilityMethod method) {
  switch (method) {
    case ReliabilityMethod::TestRetest: return "test-retest";
    case ReliabilityMethod::SplitHalf: return "split-half";
    case ReliabilityMethod::KR20: return "kr20";
    case ReliabilityMethod::CronbachAlpha: return "alpha";
  }
  return "?";
}

std::string to_string(SplitScheme scheme) {
  return scheme == SplitScheme::OddEven ? "odd-even" : "first-second";
}

double test_retest(const Eigen::VectorXd& scores_1, const Eigen::VectorXd& scores_2) {
  return pearson(scores_1, scores_2);
}

double spearman_brown(double half_reliability) {
  if (half_reliability == -1.0) throw UndefinedStatistic("Spearman-Brown undefined at r = -1");
  return 2.0 * half_reliability / (1.0 + half_reliability);
}

std::pair<std::vector<Index>, std::vector<Index>> split_columns(const ScoredMatrix& matrix,
                                                                SplitScheme scheme) {
  const Index k = matrix.cols();
  std::vector<Index> a;
  std::vector<Index> b;
  if (scheme == SplitScheme::FirstSecond) {
    const Index first = (k + 1) / 2;
    for (Index j = 0; j < k; ++j) (j < first ? a : b).push_back(j);
  } else {
    const auto order = double_order(matrix).col_order;
    for (std::size_t r = 0; r < order.size(); ++r) (r % 2 == 0 ? a : b).push_back(order[r]);
  }
  return {a, b};
}

ReliabilityReport split_half(const ScoredMatrix& matrix, SplitScheme scheme) {
  if (matrix.cols() < 2) throw std::invalid_argument("split-half needs k >= 2");
  ReliabilityReport report;
  report.method = ReliabilityMethod::SplitHalf;
  SplitHalfDetail detail;
  detail.scheme = scheme;
  std::tie(detail.half_a, detail.half_b) = split_columns(matrix, scheme);

  Eigen::VectorXd score_a = Eigen::VectorXd::Zero(matrix.rows());
  Eigen::VectorXd score_b = Eigen::VectorXd::Zero(matrix.rows());
  for (Index j : detail.half_a) score_a += matrix.values.col(j);
  for (Index j : detail.half_b) score_b += matrix.values.col(j);

  try {
    detail.r_halves = pearson(score_a, score_b);
  } catch (const UndefinedStatistic& e) {
    report.undefined_reason = std::string("half correlation: ") + e.what();
  }

  const Eigen::VectorXd diff = score_a - score_b;
  const Eigen::VectorXd total = score_a + score_b;
  const double sy2 = variance_population(total);
  if (sy2 > 0.0) {
    detail.r_half_test = 1.0 - variance_population(diff) / sy2;
    try {
      detail.r_full = spearman_brown(*detail.r_half_test);
      report.value = detail.r_full;
    } catch (const UndefinedStatistic& e) {
      report.undefined_reason = e.what();
    }
  } else {
    report.undefined_reason = "split-half undefined: zero score variance";
  }
  report.halves = std::move(detail);
  return report;
}

namespace {

template <typename Fn>
ReliabilityReport coefficient_report(ReliabilityMethod method, const ScoredMatrix& matrix, Fn fn) {
  ReliabilityReport report;
  report.method = method;
  try {
    report.value = fn(matrix.values);
  } catch (const UndefinedStatistic& e) {
    report.undefined_reason = e.what();
  }
  return report;
}

}  // namespace

ReliabilityReport kr20(const ScoredMatrix& matrix) {
  return coefficient_report(ReliabilityMethod::KR20, matrix,
                            [](const Eigen::MatrixXd& v) { return kr20_coefficient(v); });
}

ReliabilityReport cronbach_alpha(const ScoredMatrix& matrix) {
  auto report = coefficient_report(ReliabilityMethod::CronbachAlpha, matrix,
                                   [](const Eigen::MatrixXd& v) { return alpha_coefficient(v); });
  if (matrix.kind == MatrixKind::Corrected) report.warning = kAlphaCorrectedWarning;
  return report;
}

}  // namespace ctm
