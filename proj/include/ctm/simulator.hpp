#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ctm/irt.hpp"
#include "ctm/matrix_core.hpp"
#include "ctm/reliability.hpp"

namespace ctm::sim {

/// Seedable generator with platform-independent output.
///
/// The engine is std::mt19937_64, whose sequence the standard fixes. The
/// standard distributions are implementation-defined, so uniforms are taken
/// from the top 53 bits and normals by Box–Muller. Replication r of an
/// experiment seeded with s draws from Rng(stream_seed(s, r)).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on (0, 1].
  double uniform();
  double normal(double mean, double sd);

  /// SplitMix64 of (seed, stream): decorrelated seeds for parallel streams.
  static std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream);

 private:
  std::mt19937_64 engine_;
};

struct NormalDistribution {
  double mean = 0.0;
  double sd = 1.0;
};

struct SimConfig {
  Index n = 1000;
  Index k = 40;
  int options = 4;                // m_j for every item unless item_options is set
  std::vector<int> item_options;  // per-item m_j; size k when present
  NormalDistribution theta;
  NormalDistribution delta;
  std::optional<Eigen::VectorXd> fixed_theta;  // overrides theta draws
  std::optional<Eigen::VectorXd> fixed_delta;  // overrides delta draws
  irt::Model model = irt::Model::Rasch;
  double guess_rate = 0.5;  // g: chance an unknowing person guesses
  double logit_bound = 6.0;
  std::uint64_t seed = 20240101;

  void validate() const;
  ItemBank item_bank() const;
};

struct GuessEvent {
  Index person = 0;
  Index item = 0;
  bool success = false;
};

struct SimBundle {
  irt::IrtParams true_params;
  ResponseMatrix responses;  // Correct / Wrong (failed guess) / Omitted (no attempt)
  ScoredMatrix true_matrix;
  ScoredMatrix distorted_matrix;
  ScoredMatrix corrected_matrix;
  std::vector<GuessEvent> guess_log;
};

/// Draws potentials and a guess-free 0/1 matrix. Distorted and corrected
/// matrices start as copies of the true one.
SimBundle generate_true_matrix(const SimConfig& config, Rng& rng);

/// Every true 0 is attempted with probability g; an attempt picks one of
/// m_j options uniformly. Success gives 1 in both derived matrices, failure
/// gives 0 (distorted) and -1/(m_j - 1) (corrected).
void inject_guessing(SimBundle& bundle, double guess_rate, Rng& rng);

/// generate_true_matrix followed by inject_guessing with config.guess_rate.
SimBundle simulate(const SimConfig& config, Rng& rng);

/// Expected observed score when a share c of the k - T gaps is guessed right:
/// (1 - c) T + c k.
double expected_distorted_score(double true_score, double k, double c);

// ---------------------------------------------------------------------------
// Recovery experiment

struct ExperimentOptions {
  bool fit_irt = false;
  irt::FitConfig fit_config;
  SplitScheme split = SplitScheme::OddEven;
};

/// Error summary of one estimator against its true-matrix reference.
struct ErrorSummary {
  Index units = 0;
  double bias = 0.0;  // mean(estimate - reference)
  double mean_abs = 0.0;
  double rmse = 0.0;
};

struct ReplicationResult {
  int replication = 0;
  std::uint64_t seed = 0;
  bool degenerate = false;
  std::string degenerate_reason;

  double mean_true_score = 0.0;
  double mean_distorted_score = 0.0;
  double mean_corrected_score = 0.0;
  double corrected_score_se = 0.0;          // SE of mean(corrected - true)
  double analytic_distorted_mean = 0.0;     // mean of expected_distorted_score
  double distorted_residual_se = 0.0;       // SE of mean(distorted - expected)
  bool distorted_dominates = true;          // distorted >= true for every person
  double realized_success_rate = 0.0;       // share of true 0s that became 1

  // Per item, NaN where undefined.
  Eigen::VectorXd p_true;
  Eigen::VectorXd r_true;
  Eigen::VectorXd r_distorted;
  Eigen::VectorXd r_corrected_raw;
  Eigen::VectorXd r_corrected_k;
  Eigen::VectorXd k_coefficient;

  double easy_item_rpb_shift = 0.0;  // mean over items with true p > 0.5 of r_distorted - r_true
  Index easy_items = 0;

  std::vector<std::pair<std::string, ErrorSummary>> estimators;

  double kr20_true = 0.0, kr20_distorted = 0.0, kr20_corrected = 0.0;
  double alpha_true = 0.0, alpha_corrected = 0.0;
  double split_half_true = 0.0, split_half_corrected = 0.0;

  bool irt_fitted = false;
  bool irt_converged = false;
  double delta_rmse_true_fit = 0.0;       // fit on true matrix vs generating delta
  double delta_mean_abs_diff = 0.0;       // fit on corrected vs fit on true
  Index irt_common_items = 0;

  const ErrorSummary* estimator(const std::string& name) const;
};

struct EstimatorAggregate {
  std::string name;
  int replications = 0;
  double mean_bias = 0.0;
  double bias_se = 0.0;
  double mean_abs = 0.0;
  double mean_rmse = 0.0;
};

struct ExperimentReport {
  SimConfig config;
  ExperimentOptions options;
  std::vector<ReplicationResult> replications;
  std::vector<EstimatorAggregate> aggregates;
  int degenerate = 0;

  // Directional checks.
  int corrected_within_3se = 0;
  int distorted_above_true = 0;
  int easy_rpb_decreased = 0;
  int easy_rpb_assessed = 0;
  double easy_rpb_sign_test_p = 1.0;  // one-sided binomial P(X >= decreased)
};

ExperimentReport run_recovery_experiment(const SimConfig& config, int replications,
                                         const ExperimentOptions& options = {});

/// P(X >= successes) for X ~ Binomial(trials, 1/2).
double sign_test_p_value(int successes, int trials);

/// One row per replication x estimator.
void write_experiment_csv(std::ostream& out, const ExperimentReport& report);
/// One row per estimator, aggregated over replications.
void write_summary_csv(std::ostream& out, const ExperimentReport& report);
/// Directional checks: "check,count,total,value".
void write_checks_csv(std::ostream& out, const ExperimentReport& report);

}  // namespace ctm::sim
