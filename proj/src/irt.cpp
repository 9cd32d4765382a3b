#include "ctm/irt.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>

namespace ctm::irt {

std::string to_string(Model model) {
  switch (model) {
    case Model::Rasch: return "rasch";
    case Model::TwoPL_Item: return "2pl-item";
    case Model::TwoPL_Person: return "2pl-person";
    case Model::ThreePL: return "3pl";
    case Model::ThreeParamCombined: return "3param";
    case Model::FiveParam: return "5param";
  }
  return "?";
}

std::optional<Model> parse_model(const std::string& text) {
  for (Model m : {Model::Rasch, Model::TwoPL_Item, Model::TwoPL_Person, Model::ThreePL,
                  Model::ThreeParamCombined, Model::FiveParam}) {
    if (to_string(m) == text) return m;
  }
  return std::nullopt;
}

bool is_fittable(Model model) {
  return model == Model::Rasch || model == Model::TwoPL_Item || model == Model::TwoPL_Person ||
         model == Model::ThreeParamCombined;
}

namespace {

bool person_selectivity_free(Model model) {
  return model == Model::TwoPL_Person || model == Model::ThreeParamCombined;
}

bool item_selectivity_free(Model model) {
  return model == Model::TwoPL_Item || model == Model::ThreeParamCombined;
}

double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

// dD/d(own selectivity) with the other selectivity held fixed.
double discrimination_partial(double d_own, double d_other, DiscriminationForm form) {
  if (form == DiscriminationForm::AsPrinted) return 0.0;
  if (is_infinite(d_other)) return 1.0;
  const double s = d_own * d_own + d_other * d_other;
  return d_other * d_other * d_other / (s * std::sqrt(s));
}

}  // namespace

// ---------------------------------------------------------------------------

IrtParams IrtParams::pinned(Model model, Index persons, Index items) {
  IrtParams p;
  p.model = model;
  p.theta = Eigen::VectorXd::Zero(persons);
  p.delta = Eigen::VectorXd::Zero(items);
  p.c_person = Eigen::VectorXd::Zero(persons);
  p.c_item = Eigen::VectorXd::Zero(items);
  auto fill = [&](double dp, double di) {
    p.d_person = Eigen::VectorXd::Constant(persons, dp);
    p.d_item = Eigen::VectorXd::Constant(items, di);
  };
  switch (model) {
    case Model::Rasch:
    case Model::ThreeParamCombined:
    case Model::FiveParam: fill(kRaschSelectivity, kRaschSelectivity); break;
    case Model::TwoPL_Item: fill(kInfiniteSelectivity, 1.0); break;
    case Model::TwoPL_Person: fill(1.0, kInfiniteSelectivity); break;
    case Model::ThreePL:
      fill(kInfiniteSelectivity, 1.0);
      p.c_person.setOnes();
      break;
  }
  return p;
}

double combined_discrimination(double d_person, double d_item, DiscriminationForm form) {
  if (form == DiscriminationForm::AsPrinted) {
    if (is_infinite(d_person) || is_infinite(d_item)) return 1.0;
    return d_person * d_item / std::sqrt(d_person * d_person * d_item * d_item);
  }
  if (is_infinite(d_person)) return d_item;
  if (is_infinite(d_item)) return d_person;
  return d_person * d_item / std::hypot(d_person, d_item);
}

double success_probability(double theta, double delta, double d_person, double d_item,
                           double c_person, double c_item, DiscriminationForm form) {
  const double D = combined_discrimination(d_person, d_item, form);
  const double floor = c_person * c_item;
  double curve = 0.0;
  if (std::isinf(D)) {
    curve = theta > delta ? 1.0 : (theta < delta ? 0.0 : 0.5);
  } else {
    curve = 1.0 / (1.0 + std::exp(D * (delta - theta)));
  }
  return floor + (1.0 - floor) * curve;
}

double success_probability(const IrtParams& p, Index i, Index j, DiscriminationForm form) {
  return success_probability(p.theta(i), p.delta(j), p.d_person(i), p.d_item(j), p.c_person(i),
                             p.c_item(j), form);
}

double rasch_probability(double theta, double delta) {
  return 1.0 / (1.0 + std::exp(delta - theta));
}

double two_pl_probability(double theta, double delta, double slope) {
  return 1.0 / (1.0 + std::exp(slope * (delta - theta)));
}

double three_pl_probability(double theta, double delta, double slope, double guessing) {
  return guessing + (1.0 - guessing) * two_pl_probability(theta, delta, slope);
}

double cell_log_likelihood(double x, double P) {
  if (!(P > 0.0 && P < 1.0)) throw std::domain_error("success probability must lie in (0, 1)");
  return x * std::log(P) + (1.0 - x) * std::log1p(-P);
}

// ---------------------------------------------------------------------------

namespace {

void check_shape(const Eigen::MatrixXd& values, const IrtParams& params) {
  if (values.rows() != params.persons() || values.cols() != params.items()) {
    throw std::invalid_argument("parameter dimensions do not match the matrix");
  }
}

void require_pruned(const ScoredMatrix& matrix) {
  auto pruned = prune(matrix);
  if (pruned.removals.empty()) return;
  const auto& r = pruned.removals.front();
  throw UnprunedMatrix("matrix is not pruned: " + to_string(r.axis) + " '" + r.id + "' is " +
                       to_string(r.trigger) + "; prune it first (--prune)");
}

}  // namespace

double matrix_log_likelihood(const Eigen::MatrixXd& values, const IrtParams& params,
                             DiscriminationForm form) {
  check_shape(values, params);
  double ll = 0.0;
  for (Index j = 0; j < values.cols(); ++j) {
    for (Index i = 0; i < values.rows(); ++i) {
      ll += cell_log_likelihood(values(i, j), success_probability(params, i, j, form));
    }
  }
  return ll;
}

double matrix_log_likelihood(const ScoredMatrix& matrix, const IrtParams& params,
                             DiscriminationForm form) {
  require_pruned(matrix);
  return matrix_log_likelihood(matrix.values, params, form);
}

double Gradient::norm() const {
  return std::sqrt(theta.squaredNorm() + delta.squaredNorm() + d_person.squaredNorm() +
                   d_item.squaredNorm());
}

Gradient log_likelihood_gradient(const Eigen::MatrixXd& values, const IrtParams& params,
                                 DiscriminationForm form) {
  check_shape(values, params);
  if (!params.c_person.isZero(0.0) && !params.c_item.isZero(0.0)) {
    throw std::invalid_argument("gradient is only available for models without guessing");
  }
  const bool dp_free = person_selectivity_free(params.model);
  const bool di_free = item_selectivity_free(params.model);
  Gradient g{Eigen::VectorXd::Zero(params.persons()), Eigen::VectorXd::Zero(params.items()),
             Eigen::VectorXd::Zero(params.persons()), Eigen::VectorXd::Zero(params.items())};

  for (Index j = 0; j < values.cols(); ++j) {
    for (Index i = 0; i < values.rows(); ++i) {
      const double dp = params.d_person(i);
      const double di = params.d_item(j);
      const double D = combined_discrimination(dp, di, form);
      const double gap = params.theta(i) - params.delta(j);
      const double residual = values(i, j) - logistic(D * gap);
      g.theta(i) += residual * D;
      g.delta(j) -= residual * D;
      if (dp_free) g.d_person(i) += residual * gap * discrimination_partial(dp, di, form);
      if (di_free) g.d_item(j) += residual * gap * discrimination_partial(di, dp, form);
    }
  }
  return g;
}

// ---------------------------------------------------------------------------

void FitConfig::validate() const {
  if (max_outer_iterations < 1) throw std::invalid_argument("max_outer_iterations must be >= 1");
  if (!(ll_tolerance > 0) || !(param_tolerance > 0)) {
    throw std::invalid_argument("tolerances must be positive");
  }
  if (!(logit_bound > 0)) throw std::invalid_argument("logit bound must be positive");
  if (!(d_min > 0 && d_min < d_max)) throw std::invalid_argument("need 0 < d_min < d_max");
  if (max_halvings < 0) throw std::invalid_argument("max_halvings must be >= 0");
}

namespace {

struct LineSums {
  double ll = 0.0;
  double g_loc = 0.0;
  double g_sel = 0.0;
  double info_loc = 0.0;  // Fisher information entries
  double info_cross = 0.0;
  double info_sel = 0.0;
};

// One person row (sign +1) or item column (sign -1) against the frozen other
// side. eta = D * sign * (own - other) equals D * (theta - delta) either way.
template <typename Line>
LineSums line_sums(const Line& x, const Eigen::VectorXd& other_loc, const Eigen::VectorXd& other_sel,
                   double own_loc, double own_sel, double sign, bool with_derivatives,
                   DiscriminationForm form) {
  LineSums s;
  for (Index t = 0; t < x.size(); ++t) {
    const double D = combined_discrimination(own_sel, other_sel(t), form);
    const double gap = sign * (own_loc - other_loc(t));
    const double eta = D * gap;
    s.ll += x(t) * eta - softplus(eta);
    if (!with_derivatives) continue;
    const double P = logistic(eta);
    const double residual = x(t) - P;
    const double weight = P * (1.0 - P);
    const double eta_loc = D * sign;
    const double eta_sel = discrimination_partial(own_sel, other_sel(t), form) * gap;
    s.g_loc += residual * eta_loc;
    s.g_sel += residual * eta_sel;
    s.info_loc += weight * eta_loc * eta_loc;
    s.info_cross += weight * eta_loc * eta_sel;
    s.info_sel += weight * eta_sel * eta_sel;
  }
  return s;
}

// Damped Fisher-scoring step on one line; updates own_loc / own_sel in place.
template <typename Line>
void update_line(const Line& x, const Eigen::VectorXd& other_loc, const Eigen::VectorXd& other_sel,
                 double& own_loc, double& own_sel, bool sel_free, double sign,
                 const FitConfig& config) {
  const auto s = line_sums(x, other_loc, other_sel, own_loc, own_sel, sign, true, config.form);
  double step_loc = 0.0;
  double step_sel = 0.0;
  if (sel_free) {
    Eigen::Matrix2d info;
    info << s.info_loc, s.info_cross, s.info_cross, s.info_sel;
    info.diagonal().array() += 1e-9 * (info.trace() + 1.0);
    const Eigen::Vector2d step = info.inverse() * Eigen::Vector2d(s.g_loc, s.g_sel);
    step_loc = step(0);
    step_sel = step(1);
  } else if (s.info_loc > 0.0) {
    step_loc = s.g_loc / s.info_loc;
  }
  if (!std::isfinite(step_loc) || !std::isfinite(step_sel)) return;

  const double bound = config.logit_bound;
  double scale = 1.0;
  for (int h = 0; h <= config.max_halvings; ++h, scale *= 0.5) {
    const double loc = std::clamp(own_loc + scale * step_loc, -bound, bound);
    const double sel = sel_free ? std::clamp(own_sel + scale * step_sel, config.d_min, config.d_max)
                                : own_sel;
    const double ll = line_sums(x, other_loc, other_sel, loc, sel, sign, false, config.form).ll;
    if (ll >= s.ll) {
      own_loc = loc;
      own_sel = sel;
      return;
    }
  }
}

double total_log_likelihood(const Eigen::MatrixXd& values, const IrtParams& p,
                            DiscriminationForm form) {
  double ll = 0.0;
  for (Index i = 0; i < values.rows(); ++i) {
    ll += line_sums(values.row(i), p.delta, p.d_item, p.theta(i), p.d_person(i), 1.0, false, form).ll;
  }
  return ll;
}

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

FitResult fit(const Eigen::MatrixXd& values, Model model, const FitConfig& config) {
  config.validate();
  if (model == Model::FiveParam) {
    throw std::invalid_argument(
        "the five-parameter model is evaluation-only: its likelihood is multimodal and joint "
        "estimation can settle on spurious solutions; fit rasch, 2pl-item, 2pl-person or 3param");
  }
  if (model == Model::ThreePL) {
    throw std::invalid_argument(
        "the 3PL model with a guessing asymptote is evaluation-only; a guessing-corrected "
        "matrix needs no guessing parameters, so fit rasch, 2pl-item, 2pl-person or 3param");
  }
  if (values.rows() < 1 || values.cols() < 1) throw std::invalid_argument("empty matrix");

  const Index n = values.rows();
  const Index k = values.cols();
  const double bound = config.logit_bound;
  const bool dp_free = person_selectivity_free(model);
  const bool di_free = item_selectivity_free(model);

  FitResult result;
  IrtParams& p = result.params;
  p = IrtParams::pinned(model, n, k);
  if (dp_free && !di_free) p.d_person.setOnes();
  if (di_free && !dp_free) p.d_item.setOnes();
  for (Index i = 0; i < n; ++i) {
    p.theta(i) = std::clamp(logit(std::clamp(values.row(i).mean(), 0.02, 0.98)), -bound, bound);
  }
  for (Index j = 0; j < k; ++j) {
    p.delta(j) = std::clamp(-logit(std::clamp(values.col(j).mean(), 0.02, 0.98)), -bound, bound);
  }

  auto centre = [&] {
    const double shift = p.theta.mean();
    p.theta = (p.theta.array() - shift).cwiseMax(-bound).cwiseMin(bound).matrix();
    p.delta = (p.delta.array() - shift).cwiseMax(-bound).cwiseMin(bound).matrix();
  };
  centre();

  auto& diag = result.diagnostics;
  double ll_prev = total_log_likelihood(values, p, config.form);
  for (int it = 1; it <= config.max_outer_iterations; ++it) {
    const IrtParams before = p;

    for (Index i = 0; i < n; ++i) {
      double sel = p.d_person(i);
      update_line(values.row(i), p.delta, p.d_item, p.theta(i), sel, dp_free, 1.0, config);
      p.d_person(i) = sel;
    }
    for (Index j = 0; j < k; ++j) {
      double sel = p.d_item(j);
      update_line(values.col(j), p.theta, p.d_person, p.delta(j), sel, di_free, -1.0, config);
      p.d_item(j) = sel;
    }
    centre();

    const double ll = total_log_likelihood(values, p, config.form);
    diag.ll_history.push_back(ll);
    diag.iterations = it;

    double max_change = std::max((p.theta - before.theta).cwiseAbs().maxCoeff(),
                                 (p.delta - before.delta).cwiseAbs().maxCoeff());
    if (dp_free) max_change = std::max(max_change, (p.d_person - before.d_person).cwiseAbs().maxCoeff());
    if (di_free) max_change = std::max(max_change, (p.d_item - before.d_item).cwiseAbs().maxCoeff());

    const bool ll_settled = std::abs(ll - ll_prev) <= config.ll_tolerance * std::max(1.0, std::abs(ll));
    ll_prev = ll;
    if (ll_settled && max_change <= config.param_tolerance) {
      diag.converged = true;
      break;
    }
  }

  diag.log_likelihood = ll_prev;
  diag.gradient_norm = log_likelihood_gradient(values, p, config.form).norm();
  for (Index i = 0; i < n; ++i) {
    if (std::abs(p.theta(i)) >= bound) diag.clamped_persons.push_back(i);
  }
  for (Index j = 0; j < k; ++j) {
    if (std::abs(p.delta(j)) >= bound) diag.clamped_items.push_back(j);
  }
  return result;
}

FitResult fit(const ScoredMatrix& matrix, Model model, const FitConfig& config) {
  require_pruned(matrix);
  return fit(matrix.values, model, config);
}

}  // namespace ctm::irt
