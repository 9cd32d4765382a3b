#include "ctm/csv_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace ctm::io {

namespace {

std::string trim(const std::string& s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::string location(std::size_t line, std::size_t column) {
  std::ostringstream out;
  if (line > 0) out << "line " << line;
  if (column > 0) out << ", column " << column;
  return out.str();
}

// Reads the next non-blank line; returns false at end of input.
bool next_line(std::istream& in, std::string& line, std::size_t& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) return true;
  }
  return false;
}

double parse_double(const std::string& text, std::size_t line, std::size_t column) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(v)) {
    throw InputError("not a number: '" + text + "'", line, column);
  }
  return v;
}

int parse_int(const std::string& text, std::size_t line, std::size_t column) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw InputError("not an integer: '" + text + "'", line, column);
  }
  return v;
}

}  // namespace

InputError::InputError(const std::string& what, std::size_t line, std::size_t column)
    : std::runtime_error(line > 0 ? location(line, column) + ": " + what : what),
      line_(line),
      column_(column) {}

std::string format_number(std::optional<double> value) {
  if (!value || !std::isfinite(*value)) {
    if (value && std::isinf(*value)) return *value > 0 ? "inf" : "-inf";
    return "NA";
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", *value);
  std::string s(buf);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

std::string format_rational(const Rational& value) {
  if (value.den == 1) return std::to_string(value.num);
  return std::to_string(value.num) + "/" + std::to_string(value.den);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

// ---------------------------------------------------------------------------

ItemBank read_item_bank(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!next_line(in, line, line_no)) throw InputError("item bank is empty");
  auto header = split_csv_line(line);
  if (header.size() != 2 || header[0] != "item_id" || header[1] != "options") {
    throw InputError("item bank header must be 'item_id,options'", line_no);
  }
  std::vector<Item> items;
  while (next_line(in, line, line_no)) {
    auto fields = split_csv_line(line);
    if (fields.size() != 2) throw InputError("expected 2 fields", line_no);
    items.push_back({fields[0], parse_int(fields[1], line_no, 2)});
  }
  try {
    return ItemBank(std::move(items));
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
}

void write_item_bank(std::ostream& out, const ItemBank& items) {
  out << "item_id,options\n";
  for (const auto& item : items.items()) out << item.id << ',' << item.options << '\n';
}

ResponseMatrix read_responses(std::istream& in, const ItemBank& bank) {
  std::string line;
  std::size_t line_no = 0;
  if (!next_line(in, line, line_no)) throw InputError("response file is empty");
  auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "person_id") {
    throw InputError("response header must start with 'person_id' followed by item ids", line_no);
  }
  std::vector<Item> columns;
  for (std::size_t c = 1; c < header.size(); ++c) {
    auto j = bank.find(header[c]);
    if (!j) throw InputError("unknown item id '" + header[c] + "'", line_no, c + 1);
    columns.push_back(bank[*j]);
  }
  ItemBank items;
  try {
    items = ItemBank(std::move(columns));
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what(), line_no);
  }

  std::vector<std::string> persons;
  std::vector<Outcome> cells;
  while (next_line(in, line, line_no)) {
    auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw InputError("expected " + std::to_string(header.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       line_no);
    }
    persons.push_back(fields[0]);
    for (std::size_t c = 1; c < fields.size(); ++c) {
      const auto& f = fields[c];
      if (f == "1") {
        cells.push_back(Outcome::Correct);
      } else if (f == "W") {
        cells.push_back(Outcome::Wrong);
      } else if (f == ".") {
        cells.push_back(Outcome::Omitted);
      } else {
        throw InputError("invalid response '" + f + "' for person '" + fields[0] + "', item '" +
                             header[c] + "' (expected 1, W or .)",
                         line_no, c + 1);
      }
    }
  }
  return ResponseMatrix(std::move(persons), std::move(items), std::move(cells));
}

void write_responses(std::ostream& out, const ResponseMatrix& responses) {
  out << "person_id";
  for (const auto& item : responses.items().items()) out << ',' << item.id;
  out << '\n';
  for (Index i = 0; i < responses.rows(); ++i) {
    out << responses.persons()[static_cast<std::size_t>(i)];
    for (Index j = 0; j < responses.cols(); ++j) {
      switch (responses(i, j)) {
        case Outcome::Correct: out << ",1"; break;
        case Outcome::Wrong: out << ",W"; break;
        case Outcome::Omitted: out << ",."; break;
      }
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------

ScoredMatrix read_scored(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  ScoredMatrix matrix;
  std::optional<MatrixKind> kind;
  std::optional<ScoringScheme> scheme;
  std::vector<int> options;

  while (next_line(in, line, line_no)) {
    if (line.front() != '#') break;
    auto fields = split_csv_line(line.substr(1));
    if (fields.empty()) continue;
    if (fields[0] == "kind" && fields.size() == 2) {
      kind = parse_kind(fields[1]);
      if (!kind) throw InputError("unknown matrix kind '" + fields[1] + "'", line_no, 2);
    } else if (fields[0] == "scheme" && fields.size() == 2) {
      scheme = parse_scheme(fields[1]);
      if (!scheme) throw InputError("unknown scoring scheme '" + fields[1] + "'", line_no, 2);
    } else if (fields[0] == "options") {
      for (std::size_t c = 1; c < fields.size(); ++c) options.push_back(parse_int(fields[c], line_no, c + 1));
    }
  }
  if (!kind || !scheme || options.empty()) {
    throw InputError("scored matrix needs '#kind', '#scheme' and '#options' metadata lines");
  }

  auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "person_id") {
    throw InputError("scored header must start with 'person_id' followed by item ids", line_no);
  }
  if (header.size() - 1 != options.size()) {
    throw InputError("'#options' lists " + std::to_string(options.size()) + " items but header has " +
                         std::to_string(header.size() - 1),
                     line_no);
  }
  std::vector<Item> items;
  for (std::size_t c = 1; c < header.size(); ++c) items.push_back({header[c], options[c - 1]});
  try {
    matrix.items = ItemBank(std::move(items));
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what(), line_no);
  }
  matrix.kind = *kind;
  matrix.scheme = *scheme;

  std::vector<double> cells;
  while (next_line(in, line, line_no)) {
    auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw InputError("expected " + std::to_string(header.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       line_no);
    }
    matrix.persons.push_back(fields[0]);
    for (std::size_t c = 1; c < fields.size(); ++c) {
      double v = parse_double(fields[c], line_no, c + 1);
      try {
        cells.push_back(snap_cell(v, options[c - 1], *kind, *scheme));
      } catch (const std::invalid_argument& e) {
        throw InputError(e.what(), line_no, c + 1);
      }
    }
  }
  const auto n = static_cast<Index>(matrix.persons.size());
  const auto k = matrix.items.size();
  matrix.values = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      cells.data(), n, k);
  return matrix;
}

void write_scored(std::ostream& out, const ScoredMatrix& matrix) {
  out << "#kind," << to_string(matrix.kind) << '\n';
  out << "#scheme," << to_string(matrix.scheme) << '\n';
  out << "#options";
  for (const auto& item : matrix.items.items()) out << ',' << item.options;
  out << "\nperson_id";
  for (const auto& item : matrix.items.items()) out << ',' << item.id;
  out << '\n';
  for (Index i = 0; i < matrix.rows(); ++i) {
    out << matrix.persons[static_cast<std::size_t>(i)];
    for (Index j = 0; j < matrix.cols(); ++j) out << ',' << format_number(matrix.values(i, j));
    out << '\n';
  }
}

void write_scores(std::ostream& out, const ScoredMatrix& matrix, const ScoreVector& scores) {
  out << "kind,id,score\n";
  for (Index i = 0; i < scores.person_scores.size(); ++i) {
    out << "person," << matrix.persons[static_cast<std::size_t>(i)] << ','
        << format_number(scores.person_scores(i)) << '\n';
  }
  for (Index j = 0; j < scores.item_scores.size(); ++j) {
    out << "item," << matrix.items[j].id << ',' << format_number(scores.item_scores(j)) << '\n';
  }
}

void write_removals(std::ostream& out, const std::vector<Removal>& removals) {
  out << "pass,axis,id,original_index,trigger,sum\n";
  for (const auto& r : removals) {
    out << r.pass << ',' << to_string(r.axis) << ',' << r.id << ',' << r.original_index << ','
        << to_string(r.trigger) << ',' << format_rational(r.sum) << '\n';
  }
}

// ---------------------------------------------------------------------------

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out << contents;
    if (!out) throw std::runtime_error("write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace ctm::io
