#include "ctm/classical_stats.hpp"

namespace ctm {

std::string to_string(Validity v) {
  switch (v) {
    case Validity::Valid: return "valid";
    case Validity::Invalid: return "invalid";
    case Validity::Unassessable: return "unassessable";
  }
  return "?";
}

std::vector<ItemStats> item_statistics(const ScoredMatrix& matrix, double threshold) {
  if (matrix.scheme == ScoringScheme::Punitive) {
    throw std::invalid_argument(
        "item statistics are not defined for punitive scoring; rescore with 'corrected'");
  }
  if (matrix.rows() < 2) throw std::invalid_argument("item statistics need at least two persons");

  const Eigen::VectorXd totals = matrix.values.rowwise().sum();
  std::vector<ItemStats> stats;
  stats.reserve(static_cast<std::size_t>(matrix.cols()));

  for (Index j = 0; j < matrix.cols(); ++j) {
    auto column = matrix.values.col(j);
    ItemStats s;
    s.item_id = matrix.items[j].id;
    s.p = column.mean();
    s.var_pop = variance_population(column);
    s.var_sample = variance_sample(column);

    auto note = [&s](const std::string& what) {
      if (!s.reason.empty()) s.reason += "; ";
      s.reason += what;
    };
    try {
      s.K = correction_coefficient(column);
    } catch (const UndefinedStatistic& e) {
      note(e.what());
    }
    try {
      s.r_raw = pearson(column, totals);
    } catch (const UndefinedStatistic& e) {
      note(std::string("item-total ") + e.what());
    }
    if (s.K && s.r_raw) s.r_corrected = *s.K * *s.r_raw;
    if (matrix.cols() >= 2) {
      try {
        s.r_rest = item_rest_correlation(matrix.values, j);
      } catch (const UndefinedStatistic& e) {
        note(std::string("item-rest ") + e.what());
      }
    }
    stats.push_back(std::move(s));
  }

  auto flags = validity_flags(stats, threshold);
  for (std::size_t j = 0; j < stats.size(); ++j) stats[j].validity = flags[j];
  return stats;
}

std::vector<Validity> validity_flags(const std::vector<ItemStats>& stats, double threshold) {
  std::vector<Validity> flags;
  flags.reserve(stats.size());
  for (const auto& s : stats) {
    if (!s.r_corrected) {
      flags.push_back(Validity::Unassessable);
    } else {
      flags.push_back(*s.r_corrected >= threshold ? Validity::Valid : Validity::Invalid);
    }
  }
  return flags;
}

}  // namespace ctm
