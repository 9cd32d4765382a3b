#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace ctm {

using Index = Eigen::Index;

/// Answer outcome of one person on one item, already judged against the key.
enum class Outcome : std::uint8_t { Omitted, Correct, Wrong };

/// How wrong answers enter the numeric matrix.
enum class ScoringScheme {
  Ignore,             // wrong = 0; guessed ones are rewarded, failures ignored
  Punitive,           // wrong = -1
  CorrectedElements,  // wrong = -1/(m_j - 1)
};

/// Which matrix a numeric grid represents with respect to guessing.
enum class MatrixKind { True, Distorted, Corrected };

std::string to_string(ScoringScheme scheme);
std::string to_string(MatrixKind kind);
std::optional<ScoringScheme> parse_scheme(const std::string& text);
std::optional<MatrixKind> parse_kind(const std::string& text);

struct Item {
  std::string id;
  int options = 0;  // m_j
};

/// Items with their answer-option counts. Ids are unique and every m_j >= 2.
class ItemBank {
 public:
  ItemBank() = default;
  explicit ItemBank(std::vector<Item> items);

  /// All items share the same option count; ids are "I1".."Ik".
  static ItemBank uniform(Index k, int options);

  Index size() const { return static_cast<Index>(items_.size()); }
  const Item& operator[](Index j) const { return items_[static_cast<std::size_t>(j)]; }
  const std::vector<Item>& items() const { return items_; }
  std::optional<Index> find(const std::string& id) const;

  /// Keeps the listed columns, in the given order.
  ItemBank select(const std::vector<Index>& columns) const;

  /// -1/(m_j - 1): the value a wrong answer carries under corrected scoring.
  double corrective_element(Index j) const;

  friend bool operator==(const ItemBank&, const ItemBank&);

 private:
  std::vector<Item> items_;
};

inline bool operator==(const Item& a, const Item& b) {
  return a.id == b.id && a.options == b.options;
}

/// Raw judged responses, persons by items.
class ResponseMatrix {
 public:
  ResponseMatrix() = default;
  ResponseMatrix(std::vector<std::string> persons, ItemBank items);
  ResponseMatrix(std::vector<std::string> persons, ItemBank items,
                 std::vector<Outcome> row_major_cells);

  Index rows() const { return static_cast<Index>(persons_.size()); }
  Index cols() const { return items_.size(); }

  Outcome operator()(Index i, Index j) const { return cells_[offset(i, j)]; }
  Outcome& operator()(Index i, Index j) { return cells_[offset(i, j)]; }

  const std::vector<std::string>& persons() const { return persons_; }
  const ItemBank& items() const { return items_; }

 private:
  std::size_t offset(Index i, Index j) const {
    return static_cast<std::size_t>(i * cols() + j);
  }

  std::vector<std::string> persons_;
  ItemBank items_;
  std::vector<Outcome> cells_;
};

/// Numeric test matrix. Rows are persons, columns are items.
///
/// True and Distorted matrices hold only 0 and 1. Corrected matrices hold
/// 0, 1 and the column's corrective element -1/(m_j - 1) (or -1 when the
/// punitive scheme produced them).
struct ScoredMatrix {
  Eigen::MatrixXd values;
  MatrixKind kind = MatrixKind::True;
  ScoringScheme scheme = ScoringScheme::Ignore;
  ItemBank items;
  std::vector<std::string> persons;

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }
  bool empty() const { return values.size() == 0; }

  /// Keeps the listed rows and columns, in the given order.
  ScoredMatrix select(const std::vector<Index>& rows, const std::vector<Index>& cols) const;

  /// Throws std::invalid_argument if a cell is outside the set its kind allows.
  void validate() const;
};

/// Signed row and column sums.
struct ScoreVector {
  Eigen::VectorXd person_scores;
  Eigen::VectorXd item_scores;
};

/// Exact rational number used where sign or equality of a sum matters.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n, std::int64_t d = 1);

  Rational& operator+=(const Rational& other);
  friend Rational operator+(Rational a, const Rational& b) { return a += b; }
  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num == b.num && a.den == b.den;
  }
  friend bool operator<(const Rational& a, const Rational& b);
  int sign() const { return num > 0 ? 1 : (num < 0 ? -1 : 0); }
  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
};

/// Recovers the exact value of cell (i, j) from its floating representation.
/// Accepts 0, 1, -1 and -1/(m_j - 1) within 1e-5; anything else throws.
Rational exact_cell(const ScoredMatrix& matrix, Index i, Index j);

/// Maps a floating cell value to the closest admissible value for column j,
/// throwing std::invalid_argument when none is within 1e-5.
double snap_cell(double value, int options, MatrixKind kind, ScoringScheme scheme);

ScoredMatrix score_matrix(const ResponseMatrix& responses, ScoringScheme scheme);

ScoreVector row_and_column_scores(const ScoredMatrix& matrix);

/// Exact signed row / column sums.
std::vector<Rational> exact_row_sums(const ScoredMatrix& matrix);
std::vector<Rational> exact_column_sums(const ScoredMatrix& matrix);

struct OrderedMatrix {
  ScoredMatrix matrix;
  std::vector<Index> row_order;  // row_order[new] = old
  std::vector<Index> col_order;  // col_order[new] = old
};

/// Rows by descending person score, columns by descending item score.
/// Ties keep their original relative order.
OrderedMatrix double_order(const ScoredMatrix& matrix);

enum class Axis { Row, Column };
enum class PruneTrigger { AllConstant, NegativeSum };

std::string to_string(Axis axis);
std::string to_string(PruneTrigger trigger);

struct Removal {
  int pass = 0;
  Axis axis = Axis::Row;
  Index original_index = 0;
  std::string id;
  PruneTrigger trigger = PruneTrigger::AllConstant;
  Rational sum;

  friend bool operator==(const Removal&, const Removal&) = default;
};

struct PruneResult {
  ScoredMatrix matrix;
  std::vector<Removal> removals;
  std::vector<Index> kept_rows;  // original indices of surviving rows
  std::vector<Index> kept_cols;
  int passes = 0;

  /// Every row or every column was removed.
  bool emptied() const { return matrix.rows() == 0 || matrix.cols() == 0; }
};

/// Removes rows and columns that are all 0, all 1, or have a negative signed
/// sum, repeating until nothing changes. Each pass judges rows and columns on
/// the same snapshot and removes them together.
PruneResult prune(const ScoredMatrix& matrix);

}  // namespace ctm
