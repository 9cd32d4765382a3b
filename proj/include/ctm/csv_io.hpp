#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctm/matrix_core.hpp"

namespace ctm::io {

/// Malformed input. Line and column are 1-based; 0 means "not applicable".
class InputError : public std::runtime_error {
 public:
  InputError(const std::string& what, std::size_t line = 0, std::size_t column = 0);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Fixed six-decimal rendering used by every numeric output; "NA" for nullopt.
std::string format_number(std::optional<double> value);
std::string format_rational(const Rational& value);

std::vector<std::string> split_csv_line(const std::string& line);

// Item bank: header "item_id,options", one item per line.
ItemBank read_item_bank(std::istream& in);
void write_item_bank(std::ostream& out, const ItemBank& items);

// Responses: header "person_id,<item ids...>", cells "1", "W" or ".".
ResponseMatrix read_responses(std::istream& in, const ItemBank& items);
void write_responses(std::ostream& out, const ResponseMatrix& responses);

// Scored matrix: three metadata lines "#kind,...", "#scheme,...",
// "#options,m_1,...,m_k", then "person_id,<item ids...>" and numeric rows.
// Reading snaps every cell to its exact admissible value.
ScoredMatrix read_scored(std::istream& in);
void write_scored(std::ostream& out, const ScoredMatrix& matrix);

// Scores: "kind,id,score" with one row per person then one per item.
void write_scores(std::ostream& out, const ScoredMatrix& matrix, const ScoreVector& scores);

// Removal report: "pass,axis,id,original_index,trigger,sum".
void write_removals(std::ostream& out, const std::vector<Removal>& removals);

/// Writes through a temporary sibling file and renames it into place.
void write_file_atomic(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

}  // namespace ctm::io
