#pragma once

#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ctm/matrix_core.hpp"

namespace ctm::irt {

enum class Model {
  Rasch,               // d_i = d_j = sqrt(2), c = 0
  TwoPL_Item,          // d_i = +inf, c = 0: slope d_j
  TwoPL_Person,        // d_j = +inf, c = 0: slope d_i
  ThreePL,             // c_i = 1, d_i = +inf: lower asymptote c_j (evaluation only)
  ThreeParamCombined,  // finite d_i and d_j, c = 0
  FiveParam,           // everything free (evaluation only)
};

std::string to_string(Model model);
std::optional<Model> parse_model(const std::string& text);
bool is_fittable(Model model);

/// How selectivities combine into the logistic slope.
enum class DiscriminationForm {
  RootSumOfSquares,  // d_i d_j / sqrt(d_i^2 + d_j^2)
  AsPrinted,         // d_i d_j / sqrt(d_i^2 d_j^2), i.e. 1 for positive selectivities
};

/// Marks a selectivity that takes its +infinity limit analytically.
inline constexpr double kInfiniteSelectivity = std::numeric_limits<double>::infinity();
inline constexpr double kRaschSelectivity = std::numbers::sqrt2;

inline bool is_infinite(double d) { return d == kInfiniteSelectivity; }

struct IrtParams {
  Eigen::VectorXd theta;     // person potentials (logits)
  Eigen::VectorXd delta;     // item potentials (logits)
  Eigen::VectorXd d_person;  // person selectivity, > 0 or infinite
  Eigen::VectorXd d_item;    // item selectivity, > 0 or infinite
  Eigen::VectorXd c_person;  // readiness to guess, [0, 1]
  Eigen::VectorXd c_item;    // guess-provoking property, [0, 1]
  Model model = Model::Rasch;

  /// Potentials at 0, selectivities and guessing pinned as the model requires;
  /// free selectivities start at 1 (sqrt(2) for ThreeParamCombined).
  static IrtParams pinned(Model model, Index persons, Index items);

  Index persons() const { return theta.size(); }
  Index items() const { return delta.size(); }
};

double combined_discrimination(double d_person, double d_item,
                               DiscriminationForm form = DiscriminationForm::RootSumOfSquares);

/// c_i c_j + (1 - c_i c_j) / (1 + exp(D (delta - theta))).
double success_probability(double theta, double delta, double d_person, double d_item,
                           double c_person, double c_item,
                           DiscriminationForm form = DiscriminationForm::RootSumOfSquares);

double success_probability(const IrtParams& params, Index i, Index j,
                           DiscriminationForm form = DiscriminationForm::RootSumOfSquares);

// Closed forms of the classical models, used to check the general formula.
double rasch_probability(double theta, double delta);
double two_pl_probability(double theta, double delta, double slope);
double three_pl_probability(double theta, double delta, double slope, double guessing);

/// x ln P + (1 - x) ln(1 - P). Valid for x in {0, 1} and for corrective
/// elements x = -1/(m - 1), whose probability is P^x (1 - P)^(1 - x).
double cell_log_likelihood(double x, double P);

/// Thrown when a likelihood or fit is requested on a matrix that still has
/// rows or columns prune() would remove.
class UnprunedMatrix : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Sum of cell log-likelihoods over all cells.
double matrix_log_likelihood(const Eigen::MatrixXd& values, const IrtParams& params,
                             DiscriminationForm form = DiscriminationForm::RootSumOfSquares);

/// Same, after checking the matrix is already pruned.
double matrix_log_likelihood(const ScoredMatrix& matrix, const IrtParams& params,
                             DiscriminationForm form = DiscriminationForm::RootSumOfSquares);

/// Partial derivatives of the log-likelihood. Entries for pinned
/// parameters are zero. Only models without guessing are supported.
struct Gradient {
  Eigen::VectorXd theta;
  Eigen::VectorXd delta;
  Eigen::VectorXd d_person;
  Eigen::VectorXd d_item;

  double norm() const;
};

Gradient log_likelihood_gradient(const Eigen::MatrixXd& values, const IrtParams& params,
                                 DiscriminationForm form = DiscriminationForm::RootSumOfSquares);

struct FitConfig {
  int max_outer_iterations = 200;
  double ll_tolerance = 1e-6;     // relative change of the log-likelihood
  double param_tolerance = 1e-4;  // max absolute parameter change
  double logit_bound = 6.0;       // |theta|, |delta| <= bound
  double d_min = 0.2;
  double d_max = 5.0;
  int max_halvings = 20;
  DiscriminationForm form = DiscriminationForm::RootSumOfSquares;

  void validate() const;
};

struct FitDiagnostics {
  int iterations = 0;
  bool converged = false;
  double log_likelihood = 0.0;
  double gradient_norm = 0.0;
  std::vector<double> ll_history;  // after each outer iteration
  std::vector<Index> clamped_persons;
  std::vector<Index> clamped_items;
};

struct FitResult {
  IrtParams params;
  FitDiagnostics diagnostics;
};

/// Joint maximum likelihood by alternating person and item blocks. Each
/// person (item) takes one damped Fisher-scoring step on its own
/// potential and, when free, its selectivity, against the frozen other side.
/// Person potentials are centred to mean 0 after every outer iteration.
FitResult fit(const Eigen::MatrixXd& values, Model model, const FitConfig& config = {});

/// Checks the matrix is pruned, then fits.
FitResult fit(const ScoredMatrix& matrix, Model model, const FitConfig& config = {});

}  // namespace ctm::irt
