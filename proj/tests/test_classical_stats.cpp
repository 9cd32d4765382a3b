#include <doctest.h>

#include <cmath>
#include <random>

#include "ctm/classical_stats.hpp"

using namespace ctm;
using doctest::Approx;

namespace {

ScoredMatrix make(const Eigen::MatrixXd& values, MatrixKind kind, ScoringScheme scheme, int options = 4) {
  ScoredMatrix m;
  m.values = values;
  m.kind = kind;
  m.scheme = scheme;
  m.items = ItemBank::uniform(values.cols(), options);
  for (Index i = 0; i < values.rows(); ++i) m.persons.push_back("P" + std::to_string(i + 1));
  return m;
}

}  // namespace

TEST_CASE("pearson forms on a hand example") {
  Eigen::VectorXd c(4), y(4);
  c << 1, 1, 0, 0;
  y << 4, 3, 2, 1;
  // cross products 2, sum of squares 1 and 5.
  const double expected = 2.0 / std::sqrt(5.0);
  CHECK(pearson_deviation_form(c, y) == Approx(expected).epsilon(1e-14));
  CHECK(pearson_moment_form(c, y) == Approx(expected).epsilon(1e-14));
  CHECK(point_biserial(c, y) == Approx(expected).epsilon(1e-14));
}

TEST_CASE("undefined correlations") {
  Eigen::VectorXd a(3), b(3);
  a << 1, 1, 1;
  b << 1, 2, 3;
  CHECK_THROWS_AS(pearson(a, b), UndefinedStatistic);
  CHECK_THROWS_AS(point_biserial(a, b), UndefinedStatistic);
  Eigen::VectorXd not_binary(3);
  not_binary << 1, 0.5, 0;
  CHECK_THROWS_AS(point_biserial(not_binary, b), std::invalid_argument);
  CHECK_THROWS_AS(pearson(Eigen::VectorXd(1), Eigen::VectorXd(1)), std::invalid_argument);
}

TEST_CASE("variances") {
  Eigen::VectorXd v(4);
  v << 1, 2, 3, 4;
  CHECK(variance_population(v) == Approx(1.25));
  CHECK(variance_sample(v) == Approx(5.0 / 3.0));
}

TEST_CASE("correction coefficient") {
  Eigen::VectorXd binary(4);
  binary << 1, 0, 1, 1;
  CHECK(correction_coefficient(binary) == 1.0);

  // Mean 5/12, population variance 51/144, p(1 - p) = 35/144.
  Eigen::VectorXd col(4);
  col << 1, -1.0 / 3.0, 0, 1;
  CHECK(correction_coefficient(col) == Approx(std::sqrt(51.0 / 35.0)).epsilon(1e-14));

  Eigen::VectorXd negative(2);
  negative << -1.0 / 3.0, 0;
  CHECK_THROWS_AS(correction_coefficient(negative), UndefinedStatistic);
}

TEST_CASE("direct corrected correlation equals K times raw") {
  std::mt19937_64 gen(2);
  std::uniform_int_distribution<int> cell(0, 3);
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::VectorXd x(30), y(30);
    for (Index i = 0; i < 30; ++i) {
      const int c = cell(gen);
      x(i) = c >= 2 ? 1.0 : (c == 1 ? -1.0 / 3.0 : 0.0);
      y(i) = x(i) + cell(gen);
    }
    if (!(x.mean() > 0 && x.mean() < 1) || detail::is_constant(x)) continue;
    CHECK(corrected_correlation_direct(x, y) ==
          Approx(correction_coefficient(x) * pearson(x, y)).epsilon(1e-12));
  }
}

TEST_CASE("item-rest and item-total") {
  Eigen::MatrixXd v(4, 3);
  v << 1, 1, 1,  //
      1, 1, 0,   //
      1, 0, 0,   //
      0, 0, 0;
  Eigen::VectorXd rest(4);
  rest << 2, 1, 0, 0;
  CHECK(item_rest_correlation(v, 0) == Approx(pearson(Eigen::VectorXd(v.col(0)), rest)));
  Eigen::VectorXd total(4);
  total << 3, 2, 1, 0;
  CHECK(item_total_correlation(v, 1) == Approx(pearson(Eigen::VectorXd(v.col(1)), total)));
  CHECK(corrected_item_total(v, 1) == Approx(item_total_correlation(v, 1)));
}

TEST_CASE("item statistics report") {
  const double w = -1.0 / 3.0;
  Eigen::MatrixXd v(5, 3);
  v << 1, 1, 0,  //
      1, w, 0,   //
      w, 1, 0,   //
      0, 0, 0,   //
      1, 1, 0;
  const auto stats = item_statistics(make(v, MatrixKind::Corrected, ScoringScheme::CorrectedElements));
  REQUIRE(stats.size() == 3);
  CHECK(stats[0].p == Approx((3.0 + w) / 5.0));
  CHECK(stats[0].K.has_value());
  CHECK(*stats[0].K > 1.0);
  CHECK(*stats[0].r_corrected == Approx(*stats[0].K * *stats[0].r_raw));

  // Constant column: no correlation, no validity judgement.
  CHECK_FALSE(stats[2].r_raw.has_value());
  CHECK(stats[2].validity == Validity::Unassessable);
  CHECK_FALSE(stats[2].reason.empty());

  CHECK_THROWS_AS(item_statistics(make(v, MatrixKind::Corrected, ScoringScheme::Punitive)), std::invalid_argument);
}

TEST_CASE("validity threshold") {
  ItemStats good;
  good.r_corrected = 0.35;
  ItemStats weak;
  weak.r_corrected = 0.1;
  ItemStats none;
  const auto flags = validity_flags({good, weak, none}, 0.2);
  CHECK(flags == std::vector<Validity>{Validity::Valid, Validity::Invalid, Validity::Unassessable});
  CHECK(validity_flags({weak}, 0.05)[0] == Validity::Valid);
}

TEST_CASE("intercorrelation matrix") {
  const double w = -1.0 / 3.0;
  Eigen::MatrixXd v(5, 3);
  v << 1, 1, 0,  //
      1, w, 1,   //
      w, 1, 1,   //
      0, 0, 0,   //
      1, 1, 1;
  const auto ic = intercorrelation_matrix(v);
  CHECK(ic.raw(0, 0) == 1.0);
  CHECK(ic.raw(0, 1) == Approx(pearson(Eigen::VectorXd(v.col(0)), Eigen::VectorXd(v.col(1)))));
  CHECK(ic.raw(1, 0) == ic.raw(0, 1));
  const double k0 = correction_coefficient(v.col(0));
  const double k1 = correction_coefficient(v.col(1));
  CHECK(ic.scaled(0, 1) == Approx(k0 * k1 * ic.raw(0, 1)));
  CHECK(ic.defined.all());

  Eigen::MatrixXd flat(3, 2);
  flat << 1, 0, 1, 1, 1, 0;
  const auto fc = intercorrelation_matrix(flat);
  CHECK_FALSE(fc.defined(0, 1));
  CHECK(std::isnan(fc.raw(0, 1)));
}
