#include <doctest.h>

#include <stdexcept>

#include "ctm/matrix_core.hpp"

using namespace ctm;

namespace {

ResponseMatrix small_responses() {
  using O = Outcome;
  ItemBank bank({{"A", 2}, {"B", 3}, {"C", 5}});
  return ResponseMatrix({"p1", "p2"}, bank,
                        {O::Correct, O::Wrong, O::Omitted,  //
                         O::Wrong, O::Correct, O::Wrong});
}

ScoredMatrix corrected(const Eigen::MatrixXd& values, int options) {
  ScoredMatrix m;
  m.values = values;
  m.kind = MatrixKind::Corrected;
  m.scheme = ScoringScheme::CorrectedElements;
  m.items = ItemBank::uniform(values.cols(), options);
  for (Index i = 0; i < values.rows(); ++i) m.persons.push_back("P" + std::to_string(i + 1));
  return m;
}

}  // namespace

TEST_CASE("item bank validation") {
  CHECK_THROWS_AS(ItemBank({{"A", 4}, {"A", 4}}), std::invalid_argument);
  CHECK_THROWS_AS(ItemBank({{"A", 1}}), std::invalid_argument);
  CHECK_THROWS_AS(ItemBank({{"", 3}}), std::invalid_argument);

  const auto bank = ItemBank::uniform(3, 4);
  CHECK(bank[2].id == "I3");
  CHECK(bank.find("I2") == Index{1});
  CHECK_FALSE(bank.find("I9").has_value());
  CHECK(bank.corrective_element(0) == doctest::Approx(-1.0 / 3.0));
}

TEST_CASE("scoring schemes") {
  const auto r = small_responses();

  const auto ignore = score_matrix(r, ScoringScheme::Ignore);
  CHECK(ignore.kind == MatrixKind::Distorted);
  CHECK(ignore.values(0, 1) == 0.0);
  CHECK(ignore.values(1, 2) == 0.0);

  const auto punitive = score_matrix(r, ScoringScheme::Punitive);
  CHECK(punitive.kind == MatrixKind::Corrected);
  CHECK(punitive.values(0, 1) == -1.0);
  CHECK(punitive.values(0, 2) == 0.0);

  const auto fixed = score_matrix(r, ScoringScheme::CorrectedElements);
  CHECK(fixed.values(0, 0) == 1.0);
  CHECK(fixed.values(0, 1) == doctest::Approx(-0.5));
  CHECK(fixed.values(0, 2) == 0.0);
  CHECK(fixed.values(1, 0) == doctest::Approx(-1.0));
  CHECK(fixed.values(1, 2) == doctest::Approx(-0.25));

  const auto scores = row_and_column_scores(fixed);
  CHECK(scores.person_scores(0) == doctest::Approx(0.5));
  CHECK(scores.item_scores(0) == doctest::Approx(0.0));
}

TEST_CASE("rational arithmetic") {
  Rational a(1, 3);
  a += Rational(1, 6);
  CHECK(a == Rational(1, 2));
  CHECK(Rational(2, -4) == Rational(-1, 2));
  CHECK(Rational(-1, 3) < Rational(0));
  CHECK(Rational(-2, 3).sign() == -1);
  CHECK(Rational(0, 7).sign() == 0);
  CHECK(Rational(5, 4).to_double() == 1.25);

  // Sum of three corrective elements of a four-option item is exactly -1.
  Rational s;
  for (int t = 0; t < 3; ++t) s += Rational(-1, 3);
  CHECK(s == Rational(-1));
}

TEST_CASE("cell snapping") {
  CHECK(snap_cell(1.0 - 4e-6, 4, MatrixKind::Corrected, ScoringScheme::CorrectedElements) == 1.0);
  CHECK(snap_cell(-0.333333, 4, MatrixKind::Corrected, ScoringScheme::CorrectedElements) == -1.0 / 3.0);
  CHECK_THROWS_AS(snap_cell(-0.33, 4, MatrixKind::Corrected, ScoringScheme::CorrectedElements),
                  std::invalid_argument);
  CHECK_THROWS_AS(snap_cell(-1.0 / 3.0, 4, MatrixKind::True, ScoringScheme::Ignore), std::invalid_argument);
  CHECK(snap_cell(-1.0, 4, MatrixKind::Corrected, ScoringScheme::Punitive) == -1.0);

  Eigen::MatrixXd v(1, 2);
  v << 0.5, 1.0;
  CHECK_THROWS_AS(corrected(v, 4).validate(), std::invalid_argument);
}

TEST_CASE("exact sums use rational cells") {
  const double w = -1.0 / 3.0;
  Eigen::MatrixXd v(2, 3);
  v << w, w, w, 1, w, 0;
  const auto m = corrected(v, 4);
  CHECK(exact_row_sums(m) == std::vector<Rational>{Rational(-1), Rational(2, 3)});
  CHECK(exact_column_sums(m) == std::vector<Rational>{Rational(2, 3), Rational(-2, 3), Rational(-1, 3)});
}

TEST_CASE("double ordering is stable and descending") {
  Eigen::MatrixXd v(4, 3);
  v << 0, 1, 0,  //
      1, 1, 1,   //
      0, 1, 0,   //
      1, 1, 0;
  ScoredMatrix m;
  m.values = v;
  m.items = ItemBank::uniform(3, 4);
  m.persons = {"a", "b", "c", "d"};
  const auto o = double_order(m);
  CHECK(o.row_order == std::vector<Index>{1, 3, 0, 2});
  CHECK(o.col_order == std::vector<Index>{1, 0, 2});
  CHECK(o.matrix.persons == std::vector<std::string>{"b", "d", "a", "c"});
  CHECK(o.matrix.items[0].id == "I2");
  CHECK(o.matrix.values(0, 0) == 1.0);
}

TEST_CASE("pruning keeps zero-sum lines") {
  Eigen::MatrixXd v(3, 4);
  v << 1, -1, 1, -1,  //
      -1, 1, -1, 1,   //
      1, 1, 1, 1;
  auto m = corrected(v, 2);
  const auto r = prune(m);
  // Row 3 is all ones; afterwards every line is mixed and sums to zero.
  REQUIRE(r.removals.size() == 1);
  CHECK(r.removals[0].id == "P3");
  CHECK(r.removals[0].trigger == PruneTrigger::AllConstant);
  CHECK(r.passes == 1);
  CHECK(r.matrix.rows() == 2);
  CHECK(r.matrix.cols() == 4);
}

TEST_CASE("pruning can empty a matrix") {
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(3, 2);
  const auto r = prune(corrected(v, 4));
  CHECK(r.emptied());
  CHECK(r.kept_rows.empty());
  CHECK(r.kept_cols.empty());
  CHECK(r.passes == 1);
}

TEST_CASE("pruning an already clean matrix changes nothing") {
  Eigen::MatrixXd v(2, 2);
  v << 1, 0, 0, 1;
  const auto m = corrected(v, 4);
  const auto r = prune(m);
  CHECK(r.removals.empty());
  CHECK(r.passes == 0);
  CHECK(r.matrix.values == m.values);
}
