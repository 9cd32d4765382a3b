#include <doctest.h>

#include <random>

#include "ctm/reliability.hpp"

using namespace ctm;
using doctest::Approx;

namespace {

ScoredMatrix make(const Eigen::MatrixXd& values, MatrixKind kind = MatrixKind::True) {
  ScoredMatrix m;
  m.values = values;
  m.kind = kind;
  m.scheme = kind == MatrixKind::Corrected ? ScoringScheme::CorrectedElements : ScoringScheme::Ignore;
  m.items = ItemBank::uniform(values.cols(), 4);
  for (Index i = 0; i < values.rows(); ++i) m.persons.push_back("P" + std::to_string(i + 1));
  return m;
}

Eigen::MatrixXd guttman() {
  Eigen::MatrixXd v(4, 3);
  v << 1, 1, 1,  //
      1, 1, 0,   //
      1, 0, 0,   //
      0, 0, 0;
  return v;
}

}  // namespace

TEST_CASE("KR-20 on a hand example") {
  // p = (3/4, 1/2, 1/4), sum pq = 5/8, total variance 5/4.
  CHECK(kr20_coefficient(guttman()) == Approx(0.75));
  const auto report = kr20(make(guttman()));
  REQUIRE(report.value);
  CHECK(*report.value == Approx(0.75));
  CHECK_FALSE(report.warning);
}

TEST_CASE("alpha equals KR-20 on 0/1 data and is flagged on corrected data") {
  CHECK(alpha_coefficient(guttman()) == Approx(kr20_coefficient(guttman())));
  CHECK_FALSE(cronbach_alpha(make(guttman())).warning);

  Eigen::MatrixXd v = guttman();
  v(3, 0) = -1.0 / 3.0;
  const auto report = cronbach_alpha(make(v, MatrixKind::Corrected));
  REQUIRE(report.warning);
  CHECK(*report.warning == std::string(kAlphaCorrectedWarning));
  // Corrective elements push column variance above p(1 - p).
  CHECK(alpha_coefficient(v) < kr20_coefficient(v));
}

TEST_CASE("undefined reliability") {
  const auto report = kr20(make(Eigen::MatrixXd::Ones(3, 3)));
  CHECK_FALSE(report.value);
  CHECK_FALSE(report.undefined_reason.empty());
}

TEST_CASE("Spearman-Brown") {
  CHECK(spearman_brown(0.5) == Approx(2.0 / 3.0));
  CHECK(spearman_brown(0.0) == 0.0);
  CHECK_THROWS_AS(spearman_brown(-1.0), UndefinedStatistic);
}

TEST_CASE("split schemes") {
  Eigen::MatrixXd v(4, 5);
  v << 1, 1, 1, 1, 0,  //
      1, 0, 1, 1, 0,   //
      0, 0, 1, 1, 0,   //
      0, 0, 1, 0, 1;
  const auto m = make(v);
  const auto [a, b] = split_columns(m, SplitScheme::FirstSecond);
  CHECK(a == std::vector<Index>{0, 1, 2});
  CHECK(b == std::vector<Index>{3, 4});
  // Column scores 2, 1, 4, 3, 1: order 2, 3, 0, 1, 4 (ties stable).
  const auto [odd, even] = split_columns(m, SplitScheme::OddEven);
  CHECK(odd == std::vector<Index>{2, 0, 4});
  CHECK(even == std::vector<Index>{3, 1});
}

TEST_CASE("split-half detail") {
  std::mt19937_64 gen(8);
  std::bernoulli_distribution coin(0.6);
  Eigen::MatrixXd v(40, 6);
  for (Index i = 0; i < v.rows(); ++i) {
    for (Index j = 0; j < v.cols(); ++j) v(i, j) = coin(gen) ? 1.0 : 0.0;
  }
  const auto report = split_half(make(v), SplitScheme::FirstSecond);
  REQUIRE(report.halves);
  const auto& h = *report.halves;
  Eigen::VectorXd sa = v.leftCols(3).rowwise().sum();
  Eigen::VectorXd sb = v.rightCols(3).rowwise().sum();

  // 1 - var(a - b) / var(a + b) = 4 cov(a, b) / var(a + b).
  const double cov = ((sa.array() - sa.mean()) * (sb.array() - sb.mean())).mean();
  const double var_total = variance_population(Eigen::VectorXd(sa + sb));
  CHECK(*h.r_half_test == Approx(4.0 * cov / var_total).epsilon(1e-12));
  CHECK(*h.r_halves == Approx(pearson(sa, sb)).epsilon(1e-12));
  CHECK(*report.value == Approx(spearman_brown(*h.r_half_test)));
}

TEST_CASE("half-test reliability under equal half variances") {
  // Halves with equal variance: r_half_test reduces to 2 r / (1 + r).
  Eigen::MatrixXd v(6, 2);
  v << 1, 1,  //
      1, 0,   //
      0, 1,   //
      1, 1,   //
      0, 0,   //
      0, 0;
  const auto report = split_half(make(v), SplitScheme::FirstSecond);
  const double r = *report.halves->r_halves;
  CHECK(*report.halves->r_half_test == Approx(2.0 * r / (1.0 + r)).epsilon(1e-12));
}

TEST_CASE("test-retest") {
  Eigen::VectorXd a(4), b(4);
  a << 1, 2, 3, 4;
  b << 2, 4, 6, 8.5;
  CHECK(test_retest(a, b) == Approx(pearson(a, b)));
  CHECK(test_retest(a, a) == Approx(1.0));
}
