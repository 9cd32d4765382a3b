#include "ctm/matrix_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace ctm {

namespace {

constexpr double kSnapTolerance = 1e-5;

bool near(double a, double b) { return std::abs(a - b) <= kSnapTolerance; }

std::string cell_name(Index i, Index j) {
  std::ostringstream out;
  out << "(" << i << ", " << j << ")";
  return out.str();
}

}  // namespace

std::string to_string(ScoringScheme scheme) {
  switch (scheme) {
    case ScoringScheme::Ignore: return "ignore";
    case ScoringScheme::Punitive: return "punitive";
    case ScoringScheme::CorrectedElements: return "corrected";
  }
  return "?";
}

std::string to_string(MatrixKind kind) {
  switch (kind) {
    case MatrixKind::True: return "true";
    case MatrixKind::Distorted: return "distorted";
    case MatrixKind::Corrected: return "corrected";
  }
  return "?";
}

std::optional<ScoringScheme> parse_scheme(const std::string& text) {
  if (text == "ignore") return ScoringScheme::Ignore;
  if (text == "punitive") return ScoringScheme::Punitive;
  if (text == "corrected") return ScoringScheme::CorrectedElements;
  return std::nullopt;
}

std::optional<MatrixKind> parse_kind(const std::string& text) {
  if (text == "true") return MatrixKind::True;
  if (text == "distorted") return MatrixKind::Distorted;
  if (text == "corrected") return MatrixKind::Corrected;
  return std::nullopt;
}

std::string to_string(Axis axis) { return axis == Axis::Row ? "row" : "column"; }

std::string to_string(PruneTrigger trigger) {
  return trigger == PruneTrigger::AllConstant ? "all-constant" : "negative-sum";
}

// ---------------------------------------------------------------------------
// ItemBank / ResponseMatrix

ItemBank::ItemBank(std::vector<Item> items) : items_(std::move(items)) {
  std::unordered_set<std::string> seen;
  for (const auto& item : items_) {
    if (item.id.empty()) throw std::invalid_argument("empty item id");
    if (item.options < 2) {
      throw std::invalid_argument("item '" + item.id + "' has fewer than 2 answer options");
    }
    if (!seen.insert(item.id).second) {
      throw std::invalid_argument("duplicate item id '" + item.id + "'");
    }
  }
}

ItemBank ItemBank::uniform(Index k, int options) {
  std::vector<Item> items;
  items.reserve(static_cast<std::size_t>(k));
  for (Index j = 0; j < k; ++j) items.push_back({"I" + std::to_string(j + 1), options});
  return ItemBank(std::move(items));
}

std::optional<Index> ItemBank::find(const std::string& id) const {
  for (std::size_t j = 0; j < items_.size(); ++j) {
    if (items_[j].id == id) return static_cast<Index>(j);
  }
  return std::nullopt;
}

ItemBank ItemBank::select(const std::vector<Index>& columns) const {
  std::vector<Item> out;
  out.reserve(columns.size());
  for (Index j : columns) out.push_back((*this)[j]);
  return ItemBank(std::move(out));
}

double ItemBank::corrective_element(Index j) const {
  return -1.0 / static_cast<double>((*this)[j].options - 1);
}

bool operator==(const ItemBank& a, const ItemBank& b) { return a.items_ == b.items_; }

ResponseMatrix::ResponseMatrix(std::vector<std::string> persons, ItemBank items)
    : persons_(std::move(persons)),
      items_(std::move(items)),
      cells_(persons_.size() * static_cast<std::size_t>(items_.size()), Outcome::Omitted) {}

ResponseMatrix::ResponseMatrix(std::vector<std::string> persons, ItemBank items,
                               std::vector<Outcome> row_major_cells)
    : persons_(std::move(persons)), items_(std::move(items)), cells_(std::move(row_major_cells)) {
  if (cells_.size() != persons_.size() * static_cast<std::size_t>(items_.size())) {
    throw std::invalid_argument("response grid size does not match persons x items");
  }
}

// ---------------------------------------------------------------------------
// ScoredMatrix

ScoredMatrix ScoredMatrix::select(const std::vector<Index>& row_idx,
                                  const std::vector<Index>& col_idx) const {
  ScoredMatrix out;
  out.kind = kind;
  out.scheme = scheme;
  out.items = items.select(col_idx);
  out.values.resize(static_cast<Index>(row_idx.size()), static_cast<Index>(col_idx.size()));
  out.persons.reserve(row_idx.size());
  for (std::size_t r = 0; r < row_idx.size(); ++r) {
    out.persons.push_back(persons[static_cast<std::size_t>(row_idx[r])]);
    for (std::size_t c = 0; c < col_idx.size(); ++c) {
      out.values(static_cast<Index>(r), static_cast<Index>(c)) = values(row_idx[r], col_idx[c]);
    }
  }
  return out;
}

void ScoredMatrix::validate() const {
  if (values.cols() != items.size()) {
    throw std::invalid_argument("matrix has " + std::to_string(values.cols()) +
                                " columns but the item bank lists " +
                                std::to_string(items.size()));
  }
  if (static_cast<Index>(persons.size()) != values.rows()) {
    throw std::invalid_argument("matrix has " + std::to_string(values.rows()) +
                                " rows but " + std::to_string(persons.size()) +
                                " person ids");
  }
  for (Index j = 0; j < cols(); ++j) {
    for (Index i = 0; i < rows(); ++i) {
      double v = values(i, j);
      if (v == snap_cell(v, items[j].options, kind, scheme)) continue;
      throw std::invalid_argument("cell " + cell_name(i, j) + " is not an exact admissible value");
    }
  }
}

// ---------------------------------------------------------------------------
// Rational

Rational::Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
  if (den == 0) throw std::domain_error("zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  std::int64_t g = std::gcd(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
}

Rational& Rational::operator+=(const Rational& other) {
  std::int64_t l = std::lcm(den, other.den);
  *this = Rational(num * (l / den) + other.num * (l / other.den), l);
  return *this;
}

bool operator<(const Rational& a, const Rational& b) {
  __extension__ using Wide = __int128;
  return static_cast<Wide>(a.num) * b.den < static_cast<Wide>(b.num) * a.den;
}

double snap_cell(double value, int options, MatrixKind kind, ScoringScheme scheme) {
  if (near(value, 0.0)) return 0.0;
  if (near(value, 1.0)) return 1.0;
  if (kind == MatrixKind::Corrected) {
    if (scheme == ScoringScheme::Punitive) {
      if (near(value, -1.0)) return -1.0;
    } else {
      double corrective = -1.0 / static_cast<double>(options - 1);
      if (near(value, corrective)) return corrective;
    }
  }
  std::ostringstream msg;
  msg << "value " << value << " is not admissible in a " << to_string(kind)
      << " matrix scored '" << to_string(scheme) << "' with m=" << options;
  throw std::invalid_argument(msg.str());
}

Rational exact_cell(const ScoredMatrix& matrix, Index i, Index j) {
  int m = matrix.items[j].options;
  double v = snap_cell(matrix.values(i, j), m, matrix.kind, matrix.scheme);
  if (v == 0.0) return Rational(0);
  if (v == 1.0) return Rational(1);
  if (v == -1.0) return Rational(-1);
  return Rational(-1, m - 1);
}

std::vector<Rational> exact_row_sums(const ScoredMatrix& matrix) {
  std::vector<Rational> sums(static_cast<std::size_t>(matrix.rows()));
  for (Index i = 0; i < matrix.rows(); ++i) {
    for (Index j = 0; j < matrix.cols(); ++j) sums[static_cast<std::size_t>(i)] += exact_cell(matrix, i, j);
  }
  return sums;
}

std::vector<Rational> exact_column_sums(const ScoredMatrix& matrix) {
  std::vector<Rational> sums(static_cast<std::size_t>(matrix.cols()));
  for (Index j = 0; j < matrix.cols(); ++j) {
    for (Index i = 0; i < matrix.rows(); ++i) sums[static_cast<std::size_t>(j)] += exact_cell(matrix, i, j);
  }
  return sums;
}

// ---------------------------------------------------------------------------
// Scoring

ScoredMatrix score_matrix(const ResponseMatrix& responses, ScoringScheme scheme) {
  ScoredMatrix out;
  out.scheme = scheme;
  out.kind = scheme == ScoringScheme::Ignore ? MatrixKind::Distorted : MatrixKind::Corrected;
  out.items = responses.items();
  out.persons = responses.persons();
  out.values = Eigen::MatrixXd::Zero(responses.rows(), responses.cols());

  for (Index j = 0; j < responses.cols(); ++j) {
    double wrong = 0.0;
    switch (scheme) {
      case ScoringScheme::Ignore: wrong = 0.0; break;
      case ScoringScheme::Punitive: wrong = -1.0; break;
      case ScoringScheme::CorrectedElements: wrong = out.items.corrective_element(j); break;
    }
    for (Index i = 0; i < responses.rows(); ++i) {
      switch (responses(i, j)) {
        case Outcome::Correct: out.values(i, j) = 1.0; break;
        case Outcome::Wrong: out.values(i, j) = wrong; break;
        case Outcome::Omitted: break;
      }
    }
  }
  return out;
}

ScoreVector row_and_column_scores(const ScoredMatrix& matrix) {
  return {matrix.values.rowwise().sum(), matrix.values.colwise().sum().transpose()};
}

// ---------------------------------------------------------------------------
// Ordering

namespace {

std::vector<Index> descending_order(const std::vector<Rational>& scores) {
  std::vector<Index> order(scores.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return scores[static_cast<std::size_t>(b)] < scores[static_cast<std::size_t>(a)];
  });
  return order;
}

}  // namespace

OrderedMatrix double_order(const ScoredMatrix& matrix) {
  OrderedMatrix out;
  out.row_order = descending_order(exact_row_sums(matrix));
  out.col_order = descending_order(exact_column_sums(matrix));
  out.matrix = matrix.select(out.row_order, out.col_order);
  return out;
}

// ---------------------------------------------------------------------------
// Pruning

namespace {

struct LineVerdict {
  bool remove = false;
  PruneTrigger trigger = PruneTrigger::AllConstant;
  Rational sum;
};

template <typename CellAt>
LineVerdict judge_line(Index length, CellAt cell_at) {
  LineVerdict verdict;
  bool all_zero = true;
  bool all_one = true;
  for (Index t = 0; t < length; ++t) {
    Rational v = cell_at(t);
    all_zero = all_zero && v == Rational(0);
    all_one = all_one && v == Rational(1);
    verdict.sum += v;
  }
  if (all_zero || all_one) {
    verdict.remove = true;
    verdict.trigger = PruneTrigger::AllConstant;
  } else if (verdict.sum.sign() < 0) {
    verdict.remove = true;
    verdict.trigger = PruneTrigger::NegativeSum;
  }
  return verdict;
}

}  // namespace

PruneResult prune(const ScoredMatrix& matrix) {
  PruneResult result;
  result.kept_rows.resize(static_cast<std::size_t>(matrix.rows()));
  result.kept_cols.resize(static_cast<std::size_t>(matrix.cols()));
  std::iota(result.kept_rows.begin(), result.kept_rows.end(), Index{0});
  std::iota(result.kept_cols.begin(), result.kept_cols.end(), Index{0});

  // Exact cells once; passes work on index sets into this grid.
  const Index n = matrix.rows();
  const Index k = matrix.cols();
  std::vector<Rational> exact(static_cast<std::size_t>(n * k));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < k; ++j) exact[static_cast<std::size_t>(i * k + j)] = exact_cell(matrix, i, j);
  }
  auto at = [&](Index i, Index j) { return exact[static_cast<std::size_t>(i * k + j)]; };

  auto& rows = result.kept_rows;
  auto& cols = result.kept_cols;
  while (!rows.empty() && !cols.empty()) {
    const int pass = result.passes + 1;
    std::vector<Removal> found;
    std::vector<bool> drop_row(rows.size(), false);
    std::vector<bool> drop_col(cols.size(), false);

    for (std::size_t r = 0; r < rows.size(); ++r) {
      auto verdict = judge_line(static_cast<Index>(cols.size()),
                                [&](Index t) { return at(rows[r], cols[static_cast<std::size_t>(t)]); });
      if (!verdict.remove) continue;
      drop_row[r] = true;
      found.push_back({pass, Axis::Row, rows[r], matrix.persons[static_cast<std::size_t>(rows[r])],
                       verdict.trigger, verdict.sum});
    }
    for (std::size_t c = 0; c < cols.size(); ++c) {
      auto verdict = judge_line(static_cast<Index>(rows.size()),
                                [&](Index t) { return at(rows[static_cast<std::size_t>(t)], cols[c]); });
      if (!verdict.remove) continue;
      drop_col[c] = true;
      found.push_back({pass, Axis::Column, cols[c], matrix.items[cols[c]].id, verdict.trigger,
                       verdict.sum});
    }
    if (found.empty()) break;

    result.passes = pass;
    result.removals.insert(result.removals.end(), found.begin(), found.end());
    std::vector<Index> next_rows;
    std::vector<Index> next_cols;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (!drop_row[r]) next_rows.push_back(rows[r]);
    }
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (!drop_col[c]) next_cols.push_back(cols[c]);
    }
    rows = std::move(next_rows);
    cols = std::move(next_cols);
  }

  if (rows.empty() || cols.empty()) {
    rows.clear();
    cols.clear();
  }
  result.matrix = matrix.select(rows, cols);
  return result;
}

}  // namespace ctm
