#include "ctm/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include "ctm/classical_stats.hpp"
#include "ctm/csv_io.hpp"
#include "ctm/irt.hpp"
#include "ctm/matrix_core.hpp"
#include "ctm/reliability.hpp"
#include "ctm/simulator.hpp"

namespace ctm::cli {

namespace fs = std::filesystem;
using io::format_number;
using io::InputError;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string trim(const std::string& s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::string timestamp() {
  std::time_t t = std::time(nullptr);
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) t = static_cast<std::time_t>(std::atoll(epoch));
  std::tm utc{};
  gmtime_r(&t, &utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

struct Manifest {
  std::string command;
  std::vector<std::string> args;
  std::vector<std::pair<std::string, std::string>> fields;
  std::vector<std::string> outputs;

  void set(const std::string& key, const std::string& value) { fields.emplace_back(key, value); }
};

class OutputDir {
 public:
  explicit OutputDir(const std::string& dir) : dir_(dir.empty() ? "." : dir) {}

  void write(const std::string& name, const std::string& contents) {
    io::write_file_atomic((dir_ / name).string(), contents);
    written_.push_back(name);
  }

  void write_manifest(Manifest manifest) {
    manifest.outputs = written_;
    std::ostringstream out;
    out << "command = " << manifest.command << '\n';
    out << "version = " << kVersion << '\n';
    out << "timestamp = " << timestamp() << '\n';
    for (const auto& [k, v] : manifest.fields) out << k << " = " << v << '\n';
    for (const auto& o : manifest.outputs) out << "output = " << o << '\n';
    for (const auto& a : manifest.args) out << "arg = " << a << '\n';
    io::write_file_atomic((dir_ / (manifest.command + ".manifest")).string(), out.str());
  }

 private:
  fs::path dir_;
  std::vector<std::string> written_;
};

ScoredMatrix load_scored(const std::string& path) {
  std::istringstream in(io::read_file(path));
  try {
    return io::read_scored(in);
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

std::string removals_csv(const std::vector<Removal>& removals) {
  std::ostringstream out;
  io::write_removals(out, removals);
  return out.str();
}

// Prunes when asked; an emptied matrix is a numeric outcome, not a crash.
ScoredMatrix maybe_prune(const ScoredMatrix& matrix, bool do_prune, OutputDir& dir, std::ostream& err) {
  if (!do_prune) return matrix;
  auto pruned = prune(matrix);
  dir.write("removals.csv", removals_csv(pruned.removals));
  err << "pruned " << pruned.removals.size() << " rows/columns in " << pruned.passes << " passes\n";
  if (pruned.emptied()) throw NumericFailure("matrix is empty after pruning");
  return pruned.matrix;
}

double parse_number(const std::map<std::string, std::string>& kv, const std::string& key, double fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    std::size_t used = 0;
    double v = std::stod(it->second, &used);
    if (used == it->second.size()) return v;
  } catch (const std::exception&) {
  }
  throw InputError("config key '" + key + "' is not a number: '" + it->second + "'");
}

void reject_unknown_keys(const std::map<std::string, std::string>& kv, const std::vector<std::string>& known) {
  for (const auto& [key, _] : kv) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw InputError("unknown config key '" + key + "'");
    }
  }
}

bool parse_bool(const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw InputError("not a boolean: '" + text + "'");
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t t = 0; t < parts.size(); ++t) out += (t ? sep : "") + parts[t];
  return out;
}

// Shortest decimal that reads back as the same double.
std::string plain(double v) {
  std::string text;
  for (int digits = 1; digits <= 17; ++digits) {
    std::ostringstream s;
    s << std::setprecision(digits) << v;
    text = s.str();
    if (std::stod(text) == v) break;
  }
  return text;
}

std::string csv_safe(std::string text) {
  for (char& c : text) {
    if (c == ',' || c == '\n') c = ';';
  }
  return text;
}

// ---------------------------------------------------------------------------
// score

struct ScoreOptions {
  std::string input;
  std::string items;
  int options = 0;
  std::string scheme = "corrected";
  bool prune = false;
  std::string out_dir = ".";
};

int do_score(const ScoreOptions& o, const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  auto scheme = parse_scheme(o.scheme);
  if (!scheme) throw UsageError("unknown scheme '" + o.scheme + "' (ignore, punitive, corrected)");
  const std::string text = io::read_file(o.input);

  ItemBank bank;
  if (!o.items.empty()) {
    std::istringstream in(io::read_file(o.items));
    bank = io::read_item_bank(in);
  } else if (o.options >= 2) {
    std::istringstream in(text);
    std::string header;
    while (std::getline(in, header) && trim(header).empty()) {
    }
    auto fields = io::split_csv_line(header);
    std::vector<Item> items;
    for (std::size_t c = 1; c < fields.size(); ++c) items.push_back({fields[c], o.options});
    bank = ItemBank(std::move(items));
  } else {
    throw UsageError("score needs --items <itembank.csv> or --options <m>=2..");
  }

  std::istringstream in(text);
  ResponseMatrix responses;
  try {
    responses = io::read_responses(in, bank);
  } catch (const InputError& e) {
    throw InputError(o.input + ": " + e.what());
  }

  OutputDir dir(o.out_dir);
  ScoredMatrix scored = maybe_prune(score_matrix(responses, *scheme), o.prune, dir, err);
  std::ostringstream scored_csv, scores_csv;
  io::write_scored(scored_csv, scored);
  io::write_scores(scores_csv, scored, row_and_column_scores(scored));
  dir.write("scored.csv", scored_csv.str());
  dir.write("scores.csv", scores_csv.str());

  Manifest m{"score", args, {}, {}};
  m.set("input", o.input);
  if (!o.items.empty()) m.set("items", o.items);
  m.set("scheme", o.scheme);
  m.set("prune", o.prune ? "true" : "false");
  dir.write_manifest(m);
  out << "scored " << scored.rows() << " persons x " << scored.cols() << " items (" << o.scheme << ")\n";
  return kSuccess;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeOptions {
  std::string input;
  bool prune = false;
  double threshold = kDefaultValidityThreshold;
  std::string out_dir = ".";
};

std::string matrix_csv(const ScoredMatrix& m, const Eigen::MatrixXd& values) {
  std::ostringstream out;
  out << "item_id";
  for (const auto& it : m.items.items()) out << ',' << it.id;
  out << '\n';
  for (Index s = 0; s < values.rows(); ++s) {
    out << m.items[s].id;
    for (Index t = 0; t < values.cols(); ++t) {
      double v = values(s, t);
      out << ',' << format_number(std::isnan(v) ? std::nullopt : std::optional<double>(v));
    }
    out << '\n';
  }
  return out.str();
}

int do_analyze(const AnalyzeOptions& o, const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  OutputDir dir(o.out_dir);
  const ScoredMatrix matrix = maybe_prune(load_scored(o.input), o.prune, dir, err);
  const auto stats = item_statistics(matrix, o.threshold);

  std::ostringstream items;
  items << "item_id,p_j,var_pop,K_j,r_raw,r_corrected,r_rest,valid,reason\n";
  int valid = 0;
  for (const auto& s : stats) {
    std::string flag = s.validity == Validity::Unassessable ? "NA" : (s.validity == Validity::Valid ? "1" : "0");
    valid += s.validity == Validity::Valid;
    items << s.item_id << ',' << format_number(s.p) << ',' << format_number(s.var_pop) << ','
          << format_number(s.K) << ',' << format_number(s.r_raw) << ',' << format_number(s.r_corrected)
          << ',' << format_number(s.r_rest) << ',' << flag << ',' << csv_safe(s.reason) << '\n';
  }
  dir.write("itemstats.csv", items.str());

  const auto ic = intercorrelation_matrix(matrix.values);
  dir.write("intercorr_raw.csv", matrix_csv(matrix, ic.raw));
  dir.write("intercorr_scaled.csv", matrix_csv(matrix, ic.scaled));
  std::ostringstream flags;
  flags << "item_s,item_t,raw,scaled,out_of_range\n";
  int out_of_range = 0;
  for (Index s = 0; s < matrix.cols(); ++s) {
    for (Index t = s + 1; t < matrix.cols(); ++t) {
      if (!ic.defined(s, t)) {
        flags << matrix.items[s].id << ',' << matrix.items[t].id << ",NA,NA,NA\n";
        continue;
      }
      out_of_range += ic.out_of_range(s, t);
      flags << matrix.items[s].id << ',' << matrix.items[t].id << ',' << format_number(ic.raw(s, t))
            << ',' << format_number(ic.scaled(s, t)) << ',' << (ic.out_of_range(s, t) ? 1 : 0) << '\n';
    }
  }
  dir.write("intercorr_flags.csv", flags.str());

  std::ostringstream summary;
  summary << "persons = " << matrix.rows() << '\n'
          << "items = " << matrix.cols() << '\n'
          << "kind = " << to_string(matrix.kind) << '\n'
          << "scheme = " << to_string(matrix.scheme) << '\n'
          << "validity_threshold = " << format_number(o.threshold) << '\n'
          << "valid_items = " << valid << '\n'
          << "scaled_intercorrelations_out_of_range = " << out_of_range << '\n';
  dir.write("analysis.txt", summary.str());

  Manifest m{"analyze", args, {}, {}};
  m.set("input", o.input);
  m.set("prune", o.prune ? "true" : "false");
  m.set("threshold", format_number(o.threshold));
  dir.write_manifest(m);
  out << "analyzed " << matrix.cols() << " items on " << matrix.rows() << " persons; " << valid << " valid\n";
  return kSuccess;
}

// ---------------------------------------------------------------------------
// reliability

struct ReliabilityOptions {
  std::string input;
  std::vector<std::string> methods{"kr20", "alpha", "split-half"};
  std::string split = "odd-even";
  std::string retest;
  bool prune = false;
  std::string out_dir = ".";
};

void render(std::ostream& out, const ReliabilityReport& r) {
  out << '[' << to_string(r.method) << "]\n";
  if (r.halves) {
    out << "scheme = " << to_string(r.halves->scheme) << '\n';
    out << "r_halves = " << format_number(r.halves->r_halves) << '\n';
    out << "r_half_test = " << format_number(r.halves->r_half_test) << '\n';
    out << "r_full_spearman_brown = " << format_number(r.halves->r_full) << '\n';
  }
  out << "value = " << format_number(r.value) << '\n';
  if (!r.value) out << "reason = " << r.undefined_reason << '\n';
  if (r.warning) out << "warning = " << *r.warning << '\n';
}

ReliabilityReport retest_report(const ScoredMatrix& first, const std::string& retest_path) {
  const ScoredMatrix second = load_scored(retest_path);
  const Eigen::VectorXd s1 = first.values.rowwise().sum();
  const Eigen::VectorXd s2 = second.values.rowwise().sum();
  std::vector<double> a, b;
  for (std::size_t i = 0; i < first.persons.size(); ++i) {
    for (std::size_t t = 0; t < second.persons.size(); ++t) {
      if (first.persons[i] != second.persons[t]) continue;
      a.push_back(s1(static_cast<Index>(i)));
      b.push_back(s2(static_cast<Index>(t)));
      break;
    }
  }
  if (a.size() < 2) throw InputError("test-retest needs at least two persons present in both files");
  ReliabilityReport r;
  r.method = ReliabilityMethod::TestRetest;
  try {
    r.value = test_retest(Eigen::Map<Eigen::VectorXd>(a.data(), static_cast<Index>(a.size())),
                          Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<Index>(b.size())));
  } catch (const UndefinedStatistic& e) {
    r.undefined_reason = e.what();
  }
  return r;
}

int do_reliability(const ReliabilityOptions& o, const std::vector<std::string>& args, std::ostream& out,
                   std::ostream& err) {
  SplitScheme split = SplitScheme::OddEven;
  if (o.split == "first-second") {
    split = SplitScheme::FirstSecond;
  } else if (o.split != "odd-even") {
    throw UsageError("unknown split '" + o.split + "' (odd-even, first-second)");
  }
  OutputDir dir(o.out_dir);
  const ScoredMatrix matrix = maybe_prune(load_scored(o.input), o.prune, dir, err);

  std::vector<ReliabilityReport> reports;
  for (const auto& method : o.methods) {
    if (method == "kr20") {
      reports.push_back(kr20(matrix));
    } else if (method == "alpha") {
      reports.push_back(cronbach_alpha(matrix));
    } else if (method == "split-half") {
      reports.push_back(split_half(matrix, split));
    } else if (method == "test-retest") {
      if (o.retest.empty()) throw UsageError("test-retest needs --retest <second scored.csv>");
      reports.push_back(retest_report(matrix, o.retest));
    } else {
      throw UsageError("unknown method '" + method + "' (kr20, alpha, split-half, test-retest)");
    }
  }

  std::ostringstream text;
  text << "persons = " << matrix.rows() << "\nitems = " << matrix.cols() << "\nkind = " << to_string(matrix.kind)
       << "\n\n";
  bool all_defined = true;
  for (std::size_t t = 0; t < reports.size(); ++t) {
    if (t) text << '\n';
    render(text, reports[t]);
    all_defined = all_defined && reports[t].value.has_value();
  }
  dir.write("reliability.txt", text.str());

  Manifest m{"reliability", args, {}, {}};
  m.set("input", o.input);
  m.set("methods", join(o.methods, ","));
  m.set("split", o.split);
  if (!o.retest.empty()) m.set("retest", o.retest);
  dir.write_manifest(m);
  out << text.str();
  if (!all_defined) {
    err << "some reliability coefficients are undefined (see reliability.txt)\n";
    return kNumericError;
  }
  return kSuccess;
}

// ---------------------------------------------------------------------------
// fit

struct FitOptions {
  std::string input;
  std::string model = "rasch";
  std::string config;
  bool prune = false;
  std::string out_dir = ".";
  int max_iterations = 0;
  double ll_tolerance = 0, param_tolerance = 0, logit_bound = 0, d_min = 0, d_max = 0;
};

irt::FitConfig load_fit_config(const std::string& path) {
  irt::FitConfig c;
  if (path.empty()) return c;
  const auto kv = parse_key_values(io::read_file(path));
  reject_unknown_keys(kv, {"max_outer_iterations", "ll_tolerance", "param_tolerance", "logit_bound", "d_min",
                           "d_max", "max_halvings", "discrimination"});
  c.max_outer_iterations = static_cast<int>(parse_number(kv, "max_outer_iterations", c.max_outer_iterations));
  c.ll_tolerance = parse_number(kv, "ll_tolerance", c.ll_tolerance);
  c.param_tolerance = parse_number(kv, "param_tolerance", c.param_tolerance);
  c.logit_bound = parse_number(kv, "logit_bound", c.logit_bound);
  c.d_min = parse_number(kv, "d_min", c.d_min);
  c.d_max = parse_number(kv, "d_max", c.d_max);
  c.max_halvings = static_cast<int>(parse_number(kv, "max_halvings", c.max_halvings));
  if (auto it = kv.find("discrimination"); it != kv.end()) {
    if (it->second == "root-sum-of-squares") {
      c.form = irt::DiscriminationForm::RootSumOfSquares;
    } else if (it->second == "as-printed") {
      c.form = irt::DiscriminationForm::AsPrinted;
    } else {
      throw InputError("discrimination must be 'root-sum-of-squares' or 'as-printed'");
    }
  }
  return c;
}

int do_fit(const FitOptions& o, const CLI::App& sub, const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  auto model = irt::parse_model(o.model);
  if (!model) throw UsageError("unknown model '" + o.model + "' (rasch, 2pl-item, 2pl-person, 3param)");
  if (!irt::is_fittable(*model)) {
    // fit() carries the explanation.
    irt::fit(Eigen::MatrixXd::Zero(1, 1), *model);
  }

  irt::FitConfig config = load_fit_config(o.config);
  if (sub.count("--max-iterations")) config.max_outer_iterations = o.max_iterations;
  if (sub.count("--ll-tolerance")) config.ll_tolerance = o.ll_tolerance;
  if (sub.count("--param-tolerance")) config.param_tolerance = o.param_tolerance;
  if (sub.count("--logit-bound")) config.logit_bound = o.logit_bound;
  if (sub.count("--d-min")) config.d_min = o.d_min;
  if (sub.count("--d-max")) config.d_max = o.d_max;
  config.validate();

  OutputDir dir(o.out_dir);
  const ScoredMatrix matrix = maybe_prune(load_scored(o.input), o.prune, dir, err);
  const auto result = irt::fit(matrix, *model, config);
  const auto& p = result.params;
  const auto& d = result.diagnostics;

  std::ostringstream params;
  params << "kind,id,potential,selectivity\n";
  for (Index i = 0; i < p.persons(); ++i) {
    params << "person," << matrix.persons[static_cast<std::size_t>(i)] << ',' << format_number(p.theta(i)) << ','
           << format_number(p.d_person(i)) << '\n';
  }
  for (Index j = 0; j < p.items(); ++j) {
    params << "item," << matrix.items[j].id << ',' << format_number(p.delta(j)) << ','
           << format_number(p.d_item(j)) << '\n';
  }
  dir.write("params.csv", params.str());

  std::vector<std::string> clamped_p, clamped_i;
  for (Index i : d.clamped_persons) clamped_p.push_back(matrix.persons[static_cast<std::size_t>(i)]);
  for (Index j : d.clamped_items) clamped_i.push_back(matrix.items[j].id);
  std::ostringstream diag;
  diag << "model = " << irt::to_string(*model) << '\n'
       << "persons = " << matrix.rows() << '\n'
       << "items = " << matrix.cols() << '\n'
       << "converged = " << (d.converged ? "true" : "false") << '\n'
       << "iterations = " << d.iterations << '\n'
       << "log_likelihood = " << format_number(d.log_likelihood) << '\n'
       << "gradient_norm = " << format_number(d.gradient_norm) << '\n'
       << "clamped_persons = " << join(clamped_p, " ") << '\n'
       << "clamped_items = " << join(clamped_i, " ") << '\n';
  dir.write("diagnostics.txt", diag.str());

  Manifest m{"fit", args, {}, {}};
  m.set("input", o.input);
  m.set("model", o.model);
  if (!o.config.empty()) m.set("config", o.config);
  m.set("max_outer_iterations", std::to_string(config.max_outer_iterations));
  m.set("ll_tolerance", plain(config.ll_tolerance));
  m.set("param_tolerance", plain(config.param_tolerance));
  m.set("logit_bound", plain(config.logit_bound));
  dir.write_manifest(m);

  out << diag.str();
  if (!d.converged) {
    err << "fit did not converge within " << config.max_outer_iterations << " iterations\n";
    return kNotConverged;
  }
  return kSuccess;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
  std::string config;
  int replications = 1;
  std::uint64_t seed = 0;
  bool fit_irt = false;
  std::string out_dir = ".";
};

sim::SimConfig load_sim_config(const std::string& path, bool& fit_irt, bool& seed_from_file) {
  sim::SimConfig c;
  seed_from_file = false;
  if (path.empty()) return c;
  const auto kv = parse_key_values(io::read_file(path));
  reject_unknown_keys(kv, {"n", "k", "options", "item_options", "theta_mean", "theta_sd", "delta_mean",
                           "delta_sd", "model", "guess_rate", "seed", "fit_irt", "logit_bound"});
  c.n = static_cast<Index>(parse_number(kv, "n", static_cast<double>(c.n)));
  c.k = static_cast<Index>(parse_number(kv, "k", static_cast<double>(c.k)));
  c.options = static_cast<int>(parse_number(kv, "options", c.options));
  c.theta.mean = parse_number(kv, "theta_mean", c.theta.mean);
  c.theta.sd = parse_number(kv, "theta_sd", c.theta.sd);
  c.delta.mean = parse_number(kv, "delta_mean", c.delta.mean);
  c.delta.sd = parse_number(kv, "delta_sd", c.delta.sd);
  c.guess_rate = parse_number(kv, "guess_rate", c.guess_rate);
  c.logit_bound = parse_number(kv, "logit_bound", c.logit_bound);
  if (auto it = kv.find("item_options"); it != kv.end()) {
    for (const auto& f : io::split_csv_line(it->second)) {
      std::map<std::string, std::string> one{{"item_options", f}};
      c.item_options.push_back(static_cast<int>(parse_number(one, "item_options", 0)));
    }
  }
  if (auto it = kv.find("model"); it != kv.end()) {
    auto model = irt::parse_model(it->second);
    if (!model) throw InputError("unknown model '" + it->second + "'");
    c.model = *model;
  }
  if (auto it = kv.find("seed"); it != kv.end()) {
    try {
      c.seed = std::stoull(it->second);
    } catch (const std::exception&) {
      throw InputError("seed is not an unsigned integer: '" + it->second + "'");
    }
    seed_from_file = true;
  }
  if (auto it = kv.find("fit_irt"); it != kv.end()) fit_irt = parse_bool(it->second);
  return c;
}

std::string params_csv(const sim::SimBundle& b) {
  std::ostringstream out;
  const auto& p = b.true_params;
  out << "kind,id,potential,selectivity\n";
  for (Index i = 0; i < p.persons(); ++i) {
    out << "person," << b.true_matrix.persons[static_cast<std::size_t>(i)] << ',' << format_number(p.theta(i))
        << ',' << format_number(p.d_person(i)) << '\n';
  }
  for (Index j = 0; j < p.items(); ++j) {
    out << "item," << b.true_matrix.items[j].id << ',' << format_number(p.delta(j)) << ','
        << format_number(p.d_item(j)) << '\n';
  }
  return out.str();
}

int do_simulate(const SimulateOptions& o, const CLI::App& sub, const std::vector<std::string>& args,
                std::ostream& out, std::ostream&) {
  if (o.replications < 1) throw UsageError("--replications must be at least 1");
  bool fit_irt = false;
  bool seed_from_file = false;
  sim::SimConfig config = load_sim_config(o.config, fit_irt, seed_from_file);
  if (sub.count("--seed")) {
    config.seed = o.seed;
  } else if (!seed_from_file) {
    if (const char* env = std::getenv(kSeedEnvVar)) {
      try {
        config.seed = std::stoull(env);
      } catch (const std::exception&) {
        throw InputError(std::string(kSeedEnvVar) + " is not an unsigned integer");
      }
    }
  }
  if (sub.count("--fit-irt")) fit_irt = o.fit_irt;
  config.validate();

  OutputDir dir(o.out_dir);
  sim::Rng rng(sim::Rng::stream_seed(config.seed, 0));
  const auto bundle = sim::simulate(config, rng);
  auto emit = [&](const std::string& name, auto writer) {
    std::ostringstream s;
    writer(s);
    dir.write(name, s.str());
  };
  emit("items.csv", [&](std::ostream& s) { io::write_item_bank(s, bundle.responses.items()); });
  emit("responses.csv", [&](std::ostream& s) { io::write_responses(s, bundle.responses); });
  emit("true.csv", [&](std::ostream& s) { io::write_scored(s, bundle.true_matrix); });
  emit("distorted.csv", [&](std::ostream& s) { io::write_scored(s, bundle.distorted_matrix); });
  emit("corrected.csv", [&](std::ostream& s) { io::write_scored(s, bundle.corrected_matrix); });
  dir.write("true_params.csv", params_csv(bundle));
  emit("guess_log.csv", [&](std::ostream& s) {
    s << "person_id,item_id,outcome\n";
    for (const auto& g : bundle.guess_log) {
      s << bundle.true_matrix.persons[static_cast<std::size_t>(g.person)] << ','
        << bundle.true_matrix.items[g.item].id << ',' << (g.success ? "success" : "failure") << '\n';
    }
  });

  sim::ExperimentOptions options;
  options.fit_irt = fit_irt;
  const auto report = sim::run_recovery_experiment(config, o.replications, options);
  emit("experiment.csv", [&](std::ostream& s) { sim::write_experiment_csv(s, report); });
  emit("summary.csv", [&](std::ostream& s) { sim::write_summary_csv(s, report); });
  emit("checks.csv", [&](std::ostream& s) { sim::write_checks_csv(s, report); });

  Manifest m{"simulate", args, {}, {}};
  if (!o.config.empty()) m.set("config", o.config);
  m.set("seed", std::to_string(config.seed));
  m.set("n", std::to_string(config.n));
  m.set("k", std::to_string(config.k));
  m.set("guess_rate", format_number(config.guess_rate));
  m.set("model", irt::to_string(config.model));
  m.set("replications", std::to_string(o.replications));
  m.set("fit_irt", fit_irt ? "true" : "false");
  dir.write_manifest(m);
  out << "simulated " << o.replications << " replications (seed " << config.seed << ")\n";
  return kSuccess;
}

// ---------------------------------------------------------------------------
// report

int do_report(const std::string& in_dir, const std::string& out_path, const std::vector<std::string>& args,
              std::ostream& out) {
  const std::vector<std::pair<std::string, std::string>> sections{
      {"analysis.txt", "Item analysis"},      {"itemstats.csv", "Item statistics"},
      {"reliability.txt", "Reliability"},     {"diagnostics.txt", "IRT fit"},
      {"removals.csv", "Pruning removals"},   {"summary.csv", "Simulation summary"},
      {"checks.csv", "Simulation checks"},
  };
  std::ostringstream text;
  int found = 0;
  for (const auto& [file, title] : sections) {
    fs::path p = fs::path(in_dir) / file;
    if (!fs::exists(p)) continue;
    ++found;
    text << "== " << title << " (" << file << ") ==\n" << io::read_file(p.string()) << '\n';
  }
  if (found == 0) throw InputError("no analysis outputs found in '" + in_dir + "'");
  const fs::path target = out_path.empty() ? fs::path(in_dir) / "report.txt" : fs::path(out_path);
  OutputDir dir(target.has_parent_path() ? target.parent_path().string() : ".");
  dir.write(target.filename().string(), text.str());
  Manifest m{"report", args, {}, {}};
  m.set("dir", in_dir);
  dir.write_manifest(m);
  out << text.str();
  return kSuccess;
}

}  // namespace

// ---------------------------------------------------------------------------

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError("expected 'key = value'", line_no);
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.empty()) throw InputError("empty key", line_no);
    if (!kv.emplace(key, value).second) throw InputError("repeated key '" + key + "'", line_no);
  }
  return kv;
}

std::vector<std::string> manifest_args(const std::string& manifest_text) {
  std::vector<std::string> args;
  std::istringstream in(manifest_text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("arg = ", 0) == 0) args.push_back(line.substr(6));
  }
  return args;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Analysis of multiple-choice test matrices corrected for guessing", "ctm"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  ScoreOptions score_o;
  auto* score = app.add_subcommand("score", "Score a response matrix");
  score->add_option("input", score_o.input, "Response CSV (cells 1, W, .)")->required();
  score->add_option("--items", score_o.items, "Item bank CSV (item_id,options)");
  score->add_option("--options", score_o.options, "Answer options for every item (instead of --items)");
  score->add_option("--scheme", score_o.scheme, "ignore | punitive | corrected")->capture_default_str();
  score->add_flag("--prune", score_o.prune, "Remove constant and negative-sum rows/columns");
  score->add_option("--out-dir", score_o.out_dir, "Output directory")->capture_default_str();

  AnalyzeOptions analyze_o;
  auto* analyze = app.add_subcommand("analyze", "Item statistics and intercorrelations");
  analyze->add_option("input", analyze_o.input, "Scored matrix CSV")->required();
  analyze->add_flag("--prune", analyze_o.prune, "Prune before analysis");
  analyze->add_option("--threshold", analyze_o.threshold, "Validity threshold on r_corrected")->capture_default_str();
  analyze->add_option("--out-dir", analyze_o.out_dir, "Output directory")->capture_default_str();

  ReliabilityOptions rel_o;
  auto* reliability = app.add_subcommand("reliability", "Reliability coefficients");
  reliability->add_option("input", rel_o.input, "Scored matrix CSV")->required();
  reliability->add_option("--methods", rel_o.methods, "kr20, alpha, split-half, test-retest")
      ->delimiter(',')
      ->capture_default_str();
  reliability->add_option("--split", rel_o.split, "odd-even | first-second")->capture_default_str();
  reliability->add_option("--retest", rel_o.retest, "Second administration (scored CSV) for test-retest");
  reliability->add_flag("--prune", rel_o.prune, "Prune before computing");
  reliability->add_option("--out-dir", rel_o.out_dir, "Output directory")->capture_default_str();

  FitOptions fit_o;
  auto* fit = app.add_subcommand("fit", "Joint maximum-likelihood IRT fit");
  fit->add_option("input", fit_o.input, "Scored matrix CSV")->required();
  fit->add_option("--model", fit_o.model, "rasch | 2pl-item | 2pl-person | 3param")->capture_default_str();
  fit->add_option("--config", fit_o.config, "Fit configuration (key = value)");
  fit->add_flag("--prune", fit_o.prune, "Prune before fitting");
  fit->add_option("--max-iterations", fit_o.max_iterations, "Outer iteration limit");
  fit->add_option("--ll-tolerance", fit_o.ll_tolerance, "Relative log-likelihood change tolerance");
  fit->add_option("--param-tolerance", fit_o.param_tolerance, "Max parameter change tolerance");
  fit->add_option("--logit-bound", fit_o.logit_bound, "Bound on |theta| and |delta|");
  fit->add_option("--d-min", fit_o.d_min, "Lower selectivity bound");
  fit->add_option("--d-max", fit_o.d_max, "Upper selectivity bound");
  fit->add_option("--out-dir", fit_o.out_dir, "Output directory")->capture_default_str();

  SimulateOptions sim_o;
  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo recovery experiment");
  simulate->add_option("--config", sim_o.config, "Simulation configuration (key = value)");
  simulate->add_option("--replications", sim_o.replications, "Number of replications")->capture_default_str();
  simulate->add_option("--seed", sim_o.seed, std::string("Seed (default from ") + kSeedEnvVar + ")");
  simulate->add_flag("--fit-irt", sim_o.fit_irt, "Fit Rasch models in every replication");
  simulate->add_option("--out-dir", sim_o.out_dir, "Output directory")->capture_default_str();

  std::string report_dir = ".";
  std::string report_out;
  auto* report = app.add_subcommand("report", "Merge prior outputs into one summary");
  report->add_option("--dir", report_dir, "Directory holding prior outputs")->capture_default_str();
  report->add_option("--out", report_out, "Summary path (default <dir>/report.txt)");

  std::vector<std::string> argv_storage{"ctm"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kInputError;
  }

  try {
    if (*score) return do_score(score_o, args, out, err);
    if (*analyze) return do_analyze(analyze_o, args, out, err);
    if (*reliability) return do_reliability(rel_o, args, out, err);
    if (*fit) return do_fit(fit_o, *fit, args, out, err);
    if (*simulate) return do_simulate(sim_o, *simulate, args, out, err);
    if (*report) return do_report(report_dir, report_out, args, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kInputError;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const irt::UnprunedMatrix& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const NumericFailure& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumericError;
  } catch (const UndefinedStatistic& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumericError;
  } catch (const std::invalid_argument& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumericError;
  }
  return kInputError;
}

}  // namespace ctm::cli
