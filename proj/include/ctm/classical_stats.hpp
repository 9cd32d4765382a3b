#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ctm/matrix_core.hpp"

namespace ctm {

/// A statistic whose defining formula has no value for the given data
/// (constant vector, single-class column, p outside (0, 1), ...).
class UndefinedStatistic : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

namespace detail {

template <typename DX, typename DY>
void require_paired(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("vectors differ in length");
  if (x.size() < 2) throw std::invalid_argument("need at least two observations");
}

template <typename D>
bool is_constant(const Eigen::MatrixBase<D>& v) {
  return v.size() == 0 || (v.array() == v.coeff(0)).all();
}

}  // namespace detail

/// Product-moment correlation from centred cross products:
///   sum (x - x̄)(y - ȳ) / sqrt(sum (x - x̄)^2 * sum (y - ȳ)^2)
template <typename DX, typename DY>
typename DX::Scalar pearson_deviation_form(const Eigen::MatrixBase<DX>& x,
                                           const Eigen::MatrixBase<DY>& y) {
  using Scalar = typename DX::Scalar;
  detail::require_paired(x, y);
  if (detail::is_constant(x) || detail::is_constant(y)) {
    throw UndefinedStatistic("correlation undefined: constant vector");
  }
  const auto xc = (x.array() - x.mean()).matrix().eval();
  const auto yc = (y.array() - y.mean()).matrix().eval();
  Scalar sxx = xc.squaredNorm();
  Scalar syy = yc.squaredNorm();
  return xc.dot(yc) / std::sqrt(sxx * syy);
}

/// The same coefficient from raw moments:
///   (sum x y - n x̄ ȳ) / (sqrt(sum x^2 - n x̄^2) sqrt(sum y^2 - n ȳ^2))
template <typename DX, typename DY>
typename DX::Scalar pearson_moment_form(const Eigen::MatrixBase<DX>& x,
                                        const Eigen::MatrixBase<DY>& y) {
  using Scalar = typename DX::Scalar;
  detail::require_paired(x, y);
  if (detail::is_constant(x) || detail::is_constant(y)) {
    throw UndefinedStatistic("correlation undefined: constant vector");
  }
  const auto n = static_cast<Scalar>(x.size());
  const Scalar mx = x.mean();
  const Scalar my = y.mean();
  Scalar num = x.dot(y) - n * mx * my;
  Scalar den = std::sqrt(x.squaredNorm() - n * mx * mx) * std::sqrt(y.squaredNorm() - n * my * my);
  return num / den;
}

template <typename DX, typename DY>
typename DX::Scalar pearson(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y) {
  return pearson_deviation_form(x, y);
}

/// Point-biserial correlation of a 0/1 column with a score vector:
///   ((M1 - M0) / s_y) * sqrt(n0 n1 / (n (n - 1)))
/// s_y uses the n - 1 divisor, which makes this coincide with pearson().
template <typename DC, typename DY>
typename DC::Scalar point_biserial(const Eigen::MatrixBase<DC>& column,
                                   const Eigen::MatrixBase<DY>& totals) {
  using Scalar = typename DC::Scalar;
  detail::require_paired(column, totals);
  if (!((column.array() == Scalar(0)) || (column.array() == Scalar(1))).all()) {
    throw std::invalid_argument("point-biserial needs a 0/1 column");
  }
  const auto n = column.size();
  Scalar sum1 = 0, sum0 = 0;
  Eigen::Index n1 = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (column.coeff(i) == Scalar(1)) {
      sum1 += totals.coeff(i);
      ++n1;
    } else {
      sum0 += totals.coeff(i);
    }
  }
  const Eigen::Index n0 = n - n1;
  if (n1 == 0 || n0 == 0) throw UndefinedStatistic("point-biserial undefined: single-class column");
  if (detail::is_constant(totals)) throw UndefinedStatistic("point-biserial undefined: constant totals");

  const Scalar m1 = sum1 / Scalar(n1);
  const Scalar m0 = sum0 / Scalar(n0);
  const Scalar sy = std::sqrt((totals.array() - totals.mean()).square().sum() / Scalar(n - 1));
  return (m1 - m0) / sy * std::sqrt(Scalar(n0) * Scalar(n1) / (Scalar(n) * Scalar(n - 1)));
}

template <typename D>
typename D::Scalar variance_population(const Eigen::MatrixBase<D>& v) {
  return (v.array() - v.mean()).square().sum() / static_cast<typename D::Scalar>(v.size());
}

template <typename D>
typename D::Scalar variance_sample(const Eigen::MatrixBase<D>& v) {
  if (v.size() < 2) throw std::invalid_argument("sample variance needs two observations");
  return (v.array() - v.mean()).square().sum() / static_cast<typename D::Scalar>(v.size() - 1);
}

/// K_j = sqrt(var_pop / (p (1 - p))) with p the column mean. Equals 1 on a
/// 0/1 column and exceeds 1 once corrective elements are present.
template <typename D>
typename D::Scalar correction_coefficient(const Eigen::MatrixBase<D>& column) {
  using Scalar = typename D::Scalar;
  if (column.size() == 0) throw std::invalid_argument("empty column");
  const Scalar p = column.mean();
  if (!(p > Scalar(0) && p < Scalar(1))) {
    throw UndefinedStatistic("correction coefficient undefined: column mean outside the open unit interval");
  }
  if (((column.array() == Scalar(0)) || (column.array() == Scalar(1))).all()) return Scalar(1);
  return std::sqrt(variance_population(column) / (p * (Scalar(1) - p)));
}

/// Item–total correlation of a corrected column evaluated directly, with
/// sum x - n x̄^2 in place of sum x^2 - n x̄^2 in the item factor. Algebraically
/// equal to correction_coefficient(x) * pearson(x, y).
template <typename DX, typename DY>
typename DX::Scalar corrected_correlation_direct(const Eigen::MatrixBase<DX>& x,
                                                 const Eigen::MatrixBase<DY>& y) {
  using Scalar = typename DX::Scalar;
  detail::require_paired(x, y);
  if (detail::is_constant(y)) throw UndefinedStatistic("correlation undefined: constant vector");
  const auto n = static_cast<Scalar>(x.size());
  const Scalar mx = x.mean();
  const Scalar my = y.mean();
  if (!(mx > Scalar(0) && mx < Scalar(1))) {
    throw UndefinedStatistic("correction coefficient undefined: column mean outside the open unit interval");
  }
  Scalar num = ((x.array() - mx) * (y.array() - my)).sum();
  Scalar den = std::sqrt(x.sum() - n * mx * mx) * std::sqrt((y.array() - my).square().sum());
  return num / den;
}

/// Correlation of column j with the row totals excluding that column.
template <typename D>
typename D::Scalar item_rest_correlation(const Eigen::MatrixBase<D>& values, Eigen::Index j) {
  if (values.cols() < 2) throw std::invalid_argument("item-rest correlation needs k >= 2");
  auto column = values.col(j);
  return pearson(column, (values.rowwise().sum() - column).eval());
}

template <typename D>
typename D::Scalar item_total_correlation(const Eigen::MatrixBase<D>& values, Eigen::Index j) {
  return pearson(values.col(j), values.rowwise().sum().eval());
}

/// K_j times the raw item–total correlation of column j.
template <typename D>
typename D::Scalar corrected_item_total(const Eigen::MatrixBase<D>& values, Eigen::Index j) {
  return correction_coefficient(values.col(j)) * item_total_correlation(values, j);
}

// ---------------------------------------------------------------------------
// Matrix-level reports

enum class Validity { Valid, Invalid, Unassessable };
std::string to_string(Validity v);

struct ItemStats {
  std::string item_id;
  double p = 0.0;
  double var_pop = 0.0;
  double var_sample = 0.0;
  std::optional<double> K;
  std::optional<double> r_raw;
  std::optional<double> r_corrected;
  std::optional<double> r_rest;
  Validity validity = Validity::Unassessable;
  std::string reason;  // why something is undefined; empty otherwise
};

inline constexpr double kDefaultValidityThreshold = 0.2;

/// Per-item statistics. Rejects matrices produced by the punitive scheme,
/// which are meant for score comparison only.
std::vector<ItemStats> item_statistics(const ScoredMatrix& matrix,
                                       double threshold = kDefaultValidityThreshold);

/// valid <=> r_corrected >= threshold; unassessable when r_corrected is undefined.
std::vector<Validity> validity_flags(const std::vector<ItemStats>& stats,
                                     double threshold = kDefaultValidityThreshold);

struct Intercorrelation {
  Eigen::MatrixXd raw;     // NaN where undefined
  Eigen::MatrixXd scaled;  // K_s K_t raw; NaN where undefined
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> defined;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> out_of_range;  // |scaled| > 1
};

/// Pairwise column correlations and their K_s K_t rescaling. Diagonals are 1.
template <typename D>
Intercorrelation intercorrelation_matrix(const Eigen::MatrixBase<D>& values) {
  const Eigen::Index k = values.cols();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  Intercorrelation out;
  out.raw = Eigen::MatrixXd::Constant(k, k, nan);
  out.scaled = Eigen::MatrixXd::Constant(k, k, nan);
  out.defined = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(k, k, false);
  out.out_of_range = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(k, k, false);

  std::vector<std::optional<double>> K(static_cast<std::size_t>(k));
  for (Eigen::Index j = 0; j < k; ++j) {
    try {
      K[static_cast<std::size_t>(j)] = static_cast<double>(correction_coefficient(values.col(j)));
    } catch (const UndefinedStatistic&) {
    }
  }
  for (Eigen::Index s = 0; s < k; ++s) {
    if (K[static_cast<std::size_t>(s)]) {
      out.raw(s, s) = out.scaled(s, s) = 1.0;
      out.defined(s, s) = true;
    }
    for (Eigen::Index t = s + 1; t < k; ++t) {
      const auto& Ks = K[static_cast<std::size_t>(s)];
      const auto& Kt = K[static_cast<std::size_t>(t)];
      if (!Ks || !Kt) continue;
      double r = 0.0;
      try {
        r = static_cast<double>(pearson(values.col(s), values.col(t)));
      } catch (const UndefinedStatistic&) {
        continue;
      }
      const double scaled = *Ks * *Kt * r;
      out.raw(s, t) = out.raw(t, s) = r;
      out.scaled(s, t) = out.scaled(t, s) = scaled;
      out.defined(s, t) = out.defined(t, s) = true;
      out.out_of_range(s, t) = out.out_of_range(t, s) = std::abs(scaled) > 1.0;
    }
  }
  return out;
}

}  // namespace ctm
