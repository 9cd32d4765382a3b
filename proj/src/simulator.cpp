#include "ctm/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "ctm/classical_stats.hpp"
#include "ctm/csv_io.hpp"

namespace ctm::sim {

double Rng::uniform() {
  return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
}

double Rng::normal(double mean, double sd) {
  const double u1 = uniform();
  const double u2 = uniform();
  return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::stream_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + (stream + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void SimConfig::validate() const {
  if (n < 1 || k < 1) throw std::invalid_argument("simulation needs n >= 1 and k >= 1");
  if (!(guess_rate >= 0.0 && guess_rate <= 1.0)) throw std::invalid_argument("guess rate must lie in [0, 1]");
  if (!item_options.empty() && static_cast<Index>(item_options.size()) != k) {
    throw std::invalid_argument("item_options must list one option count per item");
  }
  if (options < 2) throw std::invalid_argument("items need at least 2 options");
  for (int m : item_options) {
    if (m < 2) throw std::invalid_argument("items need at least 2 options");
  }
  if (theta.sd < 0 || delta.sd < 0) throw std::invalid_argument("standard deviations must be >= 0");
  if (fixed_theta && fixed_theta->size() != n) throw std::invalid_argument("fixed_theta must have n entries");
  if (fixed_delta && fixed_delta->size() != k) throw std::invalid_argument("fixed_delta must have k entries");
  if (!(logit_bound > 0)) throw std::invalid_argument("logit bound must be positive");
}

ItemBank SimConfig::item_bank() const {
  std::vector<Item> items;
  for (Index j = 0; j < k; ++j) {
    int m = item_options.empty() ? options : item_options[static_cast<std::size_t>(j)];
    items.push_back({"I" + std::to_string(j + 1), m});
  }
  return ItemBank(std::move(items));
}

SimBundle generate_true_matrix(const SimConfig& config, Rng& rng) {
  config.validate();
  const Index n = config.n;
  const Index k = config.k;
  const double bound = config.logit_bound;

  SimBundle b;
  b.true_params = irt::IrtParams::pinned(config.model, n, k);
  auto& p = b.true_params;
  for (Index i = 0; i < n; ++i) {
    double t = config.fixed_theta ? (*config.fixed_theta)(i) : rng.normal(config.theta.mean, config.theta.sd);
    p.theta(i) = std::clamp(t, -bound, bound);
  }
  for (Index j = 0; j < k; ++j) {
    double d = config.fixed_delta ? (*config.fixed_delta)(j) : rng.normal(config.delta.mean, config.delta.sd);
    p.delta(j) = std::clamp(d, -bound, bound);
  }

  std::vector<std::string> persons;
  persons.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) persons.push_back("P" + std::to_string(i + 1));

  b.responses = ResponseMatrix(persons, config.item_bank());
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < k; ++j) {
      const double P = irt::success_probability(p, i, j);
      b.responses(i, j) = rng.uniform() <= P ? Outcome::Correct : Outcome::Omitted;
    }
  }
  b.true_matrix = score_matrix(b.responses, ScoringScheme::Ignore);
  b.true_matrix.kind = MatrixKind::True;
  b.distorted_matrix = score_matrix(b.responses, ScoringScheme::Ignore);
  b.corrected_matrix = score_matrix(b.responses, ScoringScheme::CorrectedElements);
  return b;
}

void inject_guessing(SimBundle& b, double guess_rate, Rng& rng) {
  if (!(guess_rate >= 0.0 && guess_rate <= 1.0)) throw std::invalid_argument("guess rate must lie in [0, 1]");
  const auto& values = b.true_matrix.values;
  const auto& items = b.responses.items();
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) {
      if (values(i, j) != 0.0) continue;
      // Both draws happen for every true 0 so the stream does not depend on g.
      const double attempt = rng.uniform();
      const double pick = rng.uniform();
      if (attempt > guess_rate) continue;
      const bool success = pick <= 1.0 / static_cast<double>(items[j].options);
      b.responses(i, j) = success ? Outcome::Correct : Outcome::Wrong;
      b.guess_log.push_back({i, j, success});
    }
  }
  b.distorted_matrix = score_matrix(b.responses, ScoringScheme::Ignore);
  b.corrected_matrix = score_matrix(b.responses, ScoringScheme::CorrectedElements);
}

SimBundle simulate(const SimConfig& config, Rng& rng) {
  auto bundle = generate_true_matrix(config, rng);
  inject_guessing(bundle, config.guess_rate, rng);
  return bundle;
}

double expected_distorted_score(double true_score, double k, double c) {
  return (1.0 - c) * true_score + c * k;
}

// ---------------------------------------------------------------------------

const ErrorSummary* ReplicationResult::estimator(const std::string& name) const {
  for (const auto& [key, summary] : estimators) {
    if (key == name) return &summary;
  }
  return nullptr;
}

double sign_test_p_value(int successes, int trials) {
  if (trials < 0 || successes < 0) throw std::invalid_argument("negative count");
  double p = 0.0;
  for (int x = std::max(successes, 0); x <= trials; ++x) {
    p += std::exp(std::lgamma(trials + 1.0) - std::lgamma(x + 1.0) - std::lgamma(trials - x + 1.0) -
                  trials * std::numbers::ln2);
  }
  return std::min(p, 1.0);
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ErrorSummary summarize(const Eigen::VectorXd& estimate, const Eigen::VectorXd& reference) {
  ErrorSummary s;
  double sum = 0.0, sum_abs = 0.0, sum_sq = 0.0;
  for (Index t = 0; t < estimate.size(); ++t) {
    const double e = estimate(t) - reference(t);
    if (!std::isfinite(e)) continue;
    ++s.units;
    sum += e;
    sum_abs += std::abs(e);
    sum_sq += e * e;
  }
  if (s.units > 0) {
    const auto u = static_cast<double>(s.units);
    s.bias = sum / u;
    s.mean_abs = sum_abs / u;
    s.rmse = std::sqrt(sum_sq / u);
  }
  return s;
}

ErrorSummary summarize(double estimate, double reference) {
  return summarize(Eigen::VectorXd::Constant(1, estimate), Eigen::VectorXd::Constant(1, reference));
}

double standard_error(const Eigen::VectorXd& v) {
  if (v.size() < 2) return 0.0;
  return std::sqrt(variance_sample(v) / static_cast<double>(v.size()));
}

template <typename Fn>
double or_nan(Fn fn) {
  try {
    return fn();
  } catch (const UndefinedStatistic&) {
    return kNaN;
  }
}

// Upper-triangle entries of an intercorrelation matrix, NaN where undefined.
Eigen::VectorXd upper_triangle(const Eigen::MatrixXd& m) {
  const Index k = m.cols();
  Eigen::VectorXd out(k * (k - 1) / 2);
  Index t = 0;
  for (Index s = 0; s < k; ++s) {
    for (Index u = s + 1; u < k; ++u) out(t++) = m(s, u);
  }
  return out;
}

void fit_replication(const SimBundle& b, const ExperimentOptions& options, ReplicationResult& r) {
  auto pruned_true = prune(b.true_matrix);
  auto pruned_corr = prune(b.corrected_matrix);
  if (pruned_true.emptied() || pruned_corr.emptied()) {
    r.degenerate = true;
    r.degenerate_reason = "matrix empty after pruning";
    return;
  }
  auto fit_true = irt::fit(pruned_true.matrix, irt::Model::Rasch, options.fit_config);
  auto fit_corr = irt::fit(pruned_corr.matrix, irt::Model::Rasch, options.fit_config);
  r.irt_fitted = true;
  r.irt_converged = fit_true.diagnostics.converged && fit_corr.diagnostics.converged;

  // Fitted persons are centred, so compare against generating deltas shifted
  // by the mean generating theta of the persons that survived pruning.
  double theta_shift = 0.0;
  for (Index i : pruned_true.kept_rows) theta_shift += b.true_params.theta(i);
  theta_shift /= static_cast<double>(pruned_true.kept_rows.size());

  const Index kt = static_cast<Index>(pruned_true.kept_cols.size());
  Eigen::VectorXd est(kt), ref(kt);
  for (Index c = 0; c < kt; ++c) {
    est(c) = fit_true.params.delta(c);
    ref(c) = b.true_params.delta(pruned_true.kept_cols[static_cast<std::size_t>(c)]) - theta_shift;
  }
  r.delta_rmse_true_fit = summarize(est, ref).rmse;
  r.estimators.emplace_back("delta_hat_true_fit", summarize(est, ref));

  std::vector<double> corr, tru;
  for (std::size_t a = 0; a < pruned_corr.kept_cols.size(); ++a) {
    for (std::size_t c = 0; c < pruned_true.kept_cols.size(); ++c) {
      if (pruned_corr.kept_cols[a] != pruned_true.kept_cols[c]) continue;
      corr.push_back(fit_corr.params.delta(static_cast<Index>(a)));
      tru.push_back(fit_true.params.delta(static_cast<Index>(c)));
    }
  }
  r.irt_common_items = static_cast<Index>(corr.size());
  auto diff = summarize(Eigen::Map<Eigen::VectorXd>(corr.data(), static_cast<Index>(corr.size())),
                        Eigen::Map<Eigen::VectorXd>(tru.data(), static_cast<Index>(tru.size())));
  r.delta_mean_abs_diff = diff.mean_abs;
  r.estimators.emplace_back("delta_hat_corrected_fit", diff);
}

ReplicationResult run_replication(const SimConfig& config, const ExperimentOptions& options, int index) {
  ReplicationResult r;
  r.replication = index;
  r.seed = Rng::stream_seed(config.seed, static_cast<std::uint64_t>(index));
  Rng rng(r.seed);
  const SimBundle b = simulate(config, rng);

  const auto& T = b.true_matrix.values;
  const auto& D = b.distorted_matrix.values;
  const auto& C = b.corrected_matrix.values;
  const Index n = T.rows();
  const Index k = T.cols();

  const Eigen::VectorXd tt = T.rowwise().sum();
  const Eigen::VectorXd td = D.rowwise().sum();
  const Eigen::VectorXd tc = C.rowwise().sum();
  r.mean_true_score = tt.mean();
  r.mean_distorted_score = td.mean();
  r.mean_corrected_score = tc.mean();
  r.corrected_score_se = standard_error(tc - tt);
  r.distorted_dominates = (D.array() >= T.array()).all();

  const auto& items = b.true_matrix.items;
  const bool uniform_m = std::all_of(items.items().begin(), items.items().end(),
                                     [&](const Item& it) { return it.options == items[0].options; });
  Eigen::VectorXd expected(n);
  for (Index i = 0; i < n; ++i) {
    if (uniform_m) {
      expected(i) = expected_distorted_score(tt(i), static_cast<double>(k),
                                             config.guess_rate / items[0].options);
    } else {
      expected(i) = tt(i);
      for (Index j = 0; j < k; ++j) {
        if (T(i, j) == 0.0) expected(i) += config.guess_rate / items[j].options;
      }
    }
  }
  r.analytic_distorted_mean = expected.mean();
  r.distorted_residual_se = standard_error(td - expected);
  const double zeros = static_cast<double>((T.array() == 0.0).count());
  const double successes = static_cast<double>(
      std::count_if(b.guess_log.begin(), b.guess_log.end(), [](const GuessEvent& e) { return e.success; }));
  r.realized_success_rate = zeros > 0 ? successes / zeros : 0.0;

  r.estimators.emplace_back("person_score_distorted", summarize(td, tt));
  r.estimators.emplace_back("person_score_corrected", summarize(tc, tt));

  r.p_true = T.colwise().mean().transpose();
  r.r_true.resize(k);
  r.r_distorted.resize(k);
  r.r_corrected_raw.resize(k);
  r.r_corrected_k.resize(k);
  r.k_coefficient.resize(k);
  for (Index j = 0; j < k; ++j) {
    r.r_true(j) = or_nan([&] { return pearson(T.col(j), tt); });
    r.r_distorted(j) = or_nan([&] { return pearson(D.col(j), td); });
    r.r_corrected_raw(j) = or_nan([&] { return pearson(C.col(j), tc); });
    r.k_coefficient(j) = or_nan([&] { return correction_coefficient(C.col(j)); });
    r.r_corrected_k(j) = r.k_coefficient(j) * r.r_corrected_raw(j);
  }
  r.estimators.emplace_back("item_total_r_distorted", summarize(r.r_distorted, r.r_true));
  r.estimators.emplace_back("item_total_r_corrected_raw", summarize(r.r_corrected_raw, r.r_true));
  r.estimators.emplace_back("item_total_r_corrected_k", summarize(r.r_corrected_k, r.r_true));

  double shift = 0.0;
  for (Index j = 0; j < k; ++j) {
    const double d = r.r_distorted(j) - r.r_true(j);
    if (r.p_true(j) > 0.5 && std::isfinite(d)) {
      shift += d;
      ++r.easy_items;
    }
  }
  r.easy_item_rpb_shift = r.easy_items > 0 ? shift / static_cast<double>(r.easy_items) : kNaN;

  if (k >= 2) {
    const auto ic_true = intercorrelation_matrix(T);
    const auto ic_corr = intercorrelation_matrix(C);
    const Eigen::VectorXd ref = upper_triangle(ic_true.raw);
    r.estimators.emplace_back("intercorr_corrected_raw", summarize(upper_triangle(ic_corr.raw), ref));
    r.estimators.emplace_back("intercorr_corrected_k", summarize(upper_triangle(ic_corr.scaled), ref));

    try {
      r.kr20_true = kr20_coefficient(T);
      r.kr20_distorted = kr20_coefficient(D);
      r.kr20_corrected = kr20_coefficient(C);
      r.alpha_true = alpha_coefficient(T);
      r.alpha_corrected = alpha_coefficient(C);
    } catch (const UndefinedStatistic& e) {
      r.degenerate = true;
      r.degenerate_reason = e.what();
      return r;
    }
    auto sh_true = split_half(b.true_matrix, options.split);
    auto sh_corr = split_half(b.corrected_matrix, options.split);
    r.split_half_true = sh_true.value.value_or(kNaN);
    r.split_half_corrected = sh_corr.value.value_or(kNaN);
    r.estimators.emplace_back("kr20_distorted", summarize(r.kr20_distorted, r.kr20_true));
    r.estimators.emplace_back("kr20_corrected", summarize(r.kr20_corrected, r.kr20_true));
    r.estimators.emplace_back("alpha_corrected", summarize(r.alpha_corrected, r.alpha_true));
    r.estimators.emplace_back("split_half_corrected", summarize(r.split_half_corrected, r.split_half_true));
  }

  if (options.fit_irt) fit_replication(b, options, r);
  return r;
}

}  // namespace

ExperimentReport run_recovery_experiment(const SimConfig& config, int replications,
                                         const ExperimentOptions& options) {
  config.validate();
  if (replications < 1) throw std::invalid_argument("replications must be >= 1");

  ExperimentReport report;
  report.config = config;
  report.options = options;
  for (int r = 0; r < replications; ++r) {
    report.replications.push_back(run_replication(config, options, r));
  }

  std::vector<std::string> names;
  for (const auto& rep : report.replications) {
    if (rep.degenerate) {
      ++report.degenerate;
      continue;
    }
    for (const auto& [name, _] : rep.estimators) {
      if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
    }
    if (std::abs(rep.mean_corrected_score - rep.mean_true_score) <= 3.0 * rep.corrected_score_se) {
      ++report.corrected_within_3se;
    }
    if (rep.mean_distorted_score > rep.mean_true_score) ++report.distorted_above_true;
    if (std::isfinite(rep.easy_item_rpb_shift)) {
      ++report.easy_rpb_assessed;
      if (rep.easy_item_rpb_shift < 0.0) ++report.easy_rpb_decreased;
    }
  }
  report.easy_rpb_sign_test_p = sign_test_p_value(report.easy_rpb_decreased, report.easy_rpb_assessed);

  for (const auto& name : names) {
    std::vector<double> bias;
    EstimatorAggregate agg;
    agg.name = name;
    for (const auto& rep : report.replications) {
      if (rep.degenerate) continue;
      const auto* s = rep.estimator(name);
      if (s == nullptr || s->units == 0) continue;
      bias.push_back(s->bias);
      agg.mean_abs += s->mean_abs;
      agg.mean_rmse += s->rmse;
    }
    agg.replications = static_cast<int>(bias.size());
    if (!bias.empty()) {
      Eigen::Map<const Eigen::VectorXd> b(bias.data(), static_cast<Index>(bias.size()));
      const double count = static_cast<double>(bias.size());
      agg.mean_bias = b.mean();
      agg.bias_se = standard_error(b);
      agg.mean_abs /= count;
      agg.mean_rmse /= count;
    }
    report.aggregates.push_back(agg);
  }
  return report;
}

void write_experiment_csv(std::ostream& out, const ExperimentReport& report) {
  using io::format_number;
  out << "replication,seed,estimator,units,bias,mean_abs,rmse\n";
  for (const auto& rep : report.replications) {
    if (rep.degenerate) {
      out << rep.replication << ',' << rep.seed << ",degenerate,0,NA,NA,NA\n";
      continue;
    }
    for (const auto& [name, s] : rep.estimators) {
      out << rep.replication << ',' << rep.seed << ',' << name << ',' << s.units << ','
          << format_number(s.bias) << ',' << format_number(s.mean_abs) << ','
          << format_number(s.rmse) << '\n';
    }
  }
}

void write_summary_csv(std::ostream& out, const ExperimentReport& report) {
  using io::format_number;
  out << "estimator,replications,mean_bias,bias_se,mean_abs,mean_rmse\n";
  for (const auto& a : report.aggregates) {
    out << a.name << ',' << a.replications << ',' << format_number(a.mean_bias) << ','
        << format_number(a.bias_se) << ',' << format_number(a.mean_abs) << ','
        << format_number(a.mean_rmse) << '\n';
  }
}

void write_checks_csv(std::ostream& out, const ExperimentReport& report) {
  using io::format_number;
  const int usable = static_cast<int>(report.replications.size()) - report.degenerate;
  out << "check,count,total,value\n";
  out << "corrected_mean_within_3se," << report.corrected_within_3se << ',' << usable << ",NA\n";
  out << "distorted_mean_above_true," << report.distorted_above_true << ',' << usable << ",NA\n";
  out << "easy_item_rpb_decreased," << report.easy_rpb_decreased << ',' << report.easy_rpb_assessed
      << ',' << format_number(report.easy_rpb_sign_test_p) << '\n';
  out << "degenerate_replications," << report.degenerate << ',' << report.replications.size()
      << ",NA\n";
}

}  // namespace ctm::sim
