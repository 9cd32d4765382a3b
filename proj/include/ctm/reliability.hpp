#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ctm/classical_stats.hpp"
#include "ctm/matrix_core.hpp"

namespace ctm {

enum class ReliabilityMethod { TestRetest, SplitHalf, KR20, CronbachAlpha };
enum class SplitScheme { OddEven, FirstSecond };

std::string to_string(ReliabilityMethod method);
std::string to_string(SplitScheme scheme);

/// Printed verbatim wherever alpha is reported for a corrected matrix.
inline constexpr const char* kAlphaCorrectedWarning =
    "Cronbach's alpha is not applicable to matrices corrected for guessing: "
    "corrective elements make each item variance exceed p_j(1-p_j), so alpha "
    "underestimates reliability; use KR-20 instead";

struct SplitHalfDetail {
  SplitScheme scheme = SplitScheme::OddEven;
  std::vector<Index> half_a;  // column indices
  std::vector<Index> half_b;
  std::optional<double> r_halves;     // Pearson correlation of half scores
  std::optional<double> r_half_test;  // 1 - s_d^2 / s_y^2
  std::optional<double> r_full;       // Spearman–Brown projection of r_half_test
};

struct ReliabilityReport {
  ReliabilityMethod method = ReliabilityMethod::KR20;
  std::optional<double> value;
  std::optional<SplitHalfDetail> halves;
  std::optional<std::string> warning;
  std::string undefined_reason;
};

/// Pearson correlation of two administrations' score vectors.
double test_retest(const Eigen::VectorXd& scores_1, const Eigen::VectorXd& scores_2);

/// 2r / (1 + r).
double spearman_brown(double half_reliability);

/// KR-20 with p_j the column mean and the divide-by-n variance of totals.
template <typename D>
typename D::Scalar kr20_coefficient(const Eigen::MatrixBase<D>& values) {
  using Scalar = typename D::Scalar;
  const auto k = static_cast<Scalar>(values.cols());
  if (values.cols() < 2) throw std::invalid_argument("KR-20 needs k >= 2");
  const auto totals = values.rowwise().sum().eval();
  const Scalar sy2 = variance_population(totals);
  if (!(sy2 > Scalar(0))) throw UndefinedStatistic("KR-20 undefined: zero score variance");
  const auto p = values.colwise().mean().eval();
  const Scalar pq = (p.array() * (Scalar(1) - p.array())).sum();
  return k / (k - Scalar(1)) * (Scalar(1) - pq / sy2);
}

/// Cronbach's alpha with divide-by-n variances throughout.
template <typename D>
typename D::Scalar alpha_coefficient(const Eigen::MatrixBase<D>& values) {
  using Scalar = typename D::Scalar;
  const auto k = static_cast<Scalar>(values.cols());
  if (values.cols() < 2) throw std::invalid_argument("alpha needs k >= 2");
  const auto totals = values.rowwise().sum().eval();
  const Scalar sy2 = variance_population(totals);
  if (!(sy2 > Scalar(0))) throw UndefinedStatistic("alpha undefined: zero score variance");
  Scalar item_var = 0;
  for (Eigen::Index j = 0; j < values.cols(); ++j) item_var += variance_population(values.col(j));
  return k / (k - Scalar(1)) * (Scalar(1) - item_var / sy2);
}

/// Column halves. OddEven ranks items by descending item score (stable) and
/// alternates; FirstSecond takes the first ceil(k/2) columns as they stand.
std::pair<std::vector<Index>, std::vector<Index>> split_columns(const ScoredMatrix& matrix,
                                                                SplitScheme scheme);

ReliabilityReport split_half(const ScoredMatrix& matrix, SplitScheme scheme = SplitScheme::OddEven);
ReliabilityReport kr20(const ScoredMatrix& matrix);
ReliabilityReport cronbach_alpha(const ScoredMatrix& matrix);

}  // namespace ctm
