#include <doctest.h>

#include <cmath>
#include <random>

#include "ctm/irt.hpp"

using namespace ctm;
using namespace ctm::irt;
using doctest::Approx;

namespace {

// Rasch responses drawn with a local generator, independent of the simulator.
Eigen::MatrixXd rasch_sample(const Eigen::VectorXd& theta, const Eigen::VectorXd& delta, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd x(theta.size(), delta.size());
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) {
      x(i, j) = u(gen) < 1.0 / (1.0 + std::exp(delta(j) - theta(i))) ? 1.0 : 0.0;
    }
  }
  return x;
}

}  // namespace

TEST_CASE("model names") {
  for (auto m : {Model::Rasch, Model::TwoPL_Item, Model::TwoPL_Person, Model::ThreePL,
                 Model::ThreeParamCombined, Model::FiveParam}) {
    CHECK(parse_model(to_string(m)) == m);
  }
  CHECK_FALSE(parse_model("4pl"));
  CHECK(is_fittable(Model::ThreeParamCombined));
  CHECK_FALSE(is_fittable(Model::FiveParam));
  CHECK_FALSE(is_fittable(Model::ThreePL));
}

TEST_CASE("combined discrimination") {
  CHECK(combined_discrimination(std::sqrt(2.0), std::sqrt(2.0)) == Approx(1.0));
  CHECK(combined_discrimination(3.0, 4.0) == Approx(12.0 / 5.0));
  CHECK(combined_discrimination(kInfiniteSelectivity, 1.7) == 1.7);
  CHECK(combined_discrimination(0.8, kInfiniteSelectivity) == 0.8);
  CHECK(combined_discrimination(3.0, 4.0, DiscriminationForm::AsPrinted) == Approx(1.0));
}

TEST_CASE("success probability") {
  CHECK(success_probability(0.0, 0.0, 1.0, 1.0, 0.0, 0.0) == Approx(0.5));
  // Lower asymptote c_i c_j.
  CHECK(success_probability(-50.0, 0.0, 1.0, 1.0, 0.5, 0.4) == Approx(0.2));
  CHECK(success_probability(50.0, 0.0, 1.0, 1.0, 0.5, 0.4) == Approx(1.0));
  CHECK(rasch_probability(1.0, 0.0) == Approx(1.0 / (1.0 + std::exp(-1.0))));
  CHECK(two_pl_probability(1.0, 0.5, 2.0) == Approx(1.0 / (1.0 + std::exp(-1.0))));
  CHECK(three_pl_probability(0.0, 0.0, 1.0, 0.25) == Approx(0.625));

  auto p = IrtParams::pinned(Model::Rasch, 2, 3);
  CHECK(p.d_person(0) == kRaschSelectivity);
  CHECK(p.c_item(2) == 0.0);
  p.theta(1) = 0.7;
  p.delta(2) = -0.3;
  CHECK(success_probability(p, 1, 2) == Approx(rasch_probability(0.7, -0.3)));
}

TEST_CASE("cell log-likelihood") {
  CHECK(cell_log_likelihood(1.0, 0.8) == Approx(std::log(0.8)));
  CHECK(cell_log_likelihood(0.0, 0.8) == Approx(std::log(0.2)));
  // Corrective element of a two-option item weighs the failure twice.
  CHECK(cell_log_likelihood(-1.0, 0.8) == Approx(-std::log(0.8) + 2.0 * std::log(0.2)));
  CHECK_THROWS_AS(cell_log_likelihood(1.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(cell_log_likelihood(0.0, 0.0), std::domain_error);
}

TEST_CASE("matrix likelihood requires a pruned matrix") {
  ScoredMatrix m;
  m.values = Eigen::MatrixXd::Ones(2, 2);
  m.values(1, 1) = 0.0;
  m.kind = MatrixKind::True;
  m.items = ItemBank::uniform(2, 4);
  m.persons = {"a", "b"};
  const auto p = IrtParams::pinned(Model::Rasch, 2, 2);
  CHECK_THROWS_AS(matrix_log_likelihood(m, p), UnprunedMatrix);
  try {
    fit(m, Model::Rasch);
  } catch (const UnprunedMatrix& e) {
    CHECK(std::string(e.what()).find("--prune") != std::string::npos);
  }
  CHECK(matrix_log_likelihood(m.values, p) == Approx(3.0 * std::log(0.5) + std::log(0.5)));
}

TEST_CASE("fit configuration and model checks") {
  FitConfig c;
  c.d_min = 6.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  FitConfig ok;
  CHECK_NOTHROW(ok.validate());

  const Eigen::MatrixXd x = rasch_sample(Eigen::VectorXd::LinSpaced(10, -1, 1), Eigen::VectorXd::Zero(4), 1);
  try {
    fit(x, Model::FiveParam);
    FAIL("five-parameter fit accepted");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("multimodal") != std::string::npos);
  }
  CHECK_THROWS_AS(fit(x, Model::ThreePL), std::invalid_argument);
}

TEST_CASE("Rasch fit recovers item potentials") {
  std::mt19937_64 gen(21);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd theta(1500);
  for (Index i = 0; i < theta.size(); ++i) theta(i) = normal(gen);
  theta.array() -= theta.mean();
  const Eigen::VectorXd delta = Eigen::VectorXd::LinSpaced(15, -1.5, 1.5);
  const Eigen::MatrixXd x = rasch_sample(theta, delta, 4);

  const auto result = fit(x, Model::Rasch);
  const auto& d = result.diagnostics;
  CHECK(d.converged);
  CHECK(d.iterations <= FitConfig{}.max_outer_iterations);
  // Perfect rows sit at the bound after centring, so the mean is only near zero.
  CHECK(std::abs(result.params.theta.mean()) < 1e-3);
  const double rmse = std::sqrt((result.params.delta - delta).squaredNorm() / 15.0);
  CHECK(rmse < 0.15);
  CHECK(d.log_likelihood == Approx(matrix_log_likelihood(x, result.params)));
  for (std::size_t t = 1; t < d.ll_history.size(); ++t) CHECK(d.ll_history[t] >= d.ll_history[t - 1] - 1e-6);
  CHECK(result.params.d_item(0) == kRaschSelectivity);
}

TEST_CASE("two-parameter fit stays within selectivity bounds") {
  const Eigen::VectorXd theta = Eigen::VectorXd::LinSpaced(400, -2, 2);
  const Eigen::VectorXd delta = Eigen::VectorXd::LinSpaced(8, -1, 1);
  const Eigen::MatrixXd x = rasch_sample(theta, delta, 9);
  FitConfig config;
  const auto result = fit(x, Model::TwoPL_Item, config);
  CHECK(result.diagnostics.converged);
  CHECK((result.params.d_item.array() >= config.d_min).all());
  CHECK((result.params.d_item.array() <= config.d_max).all());
  CHECK(std::isinf(result.params.d_person(0)));
}

TEST_CASE("iteration limit reports non-convergence") {
  const Eigen::MatrixXd x = rasch_sample(Eigen::VectorXd::LinSpaced(200, -2, 2), Eigen::VectorXd::LinSpaced(6, -1, 1), 3);
  FitConfig config;
  config.max_outer_iterations = 1;
  const auto result = fit(x, Model::Rasch, config);
  CHECK_FALSE(result.diagnostics.converged);
  CHECK(result.diagnostics.iterations == 1);
}

TEST_CASE("free item selectivity can make the corrected likelihood unbounded") {
  // Corrective elements held by the weakest persons: sum_i x_i (theta_i - delta)
  // is positive, so steeper slopes keep raising the likelihood.
  const double w = -1.0 / 3.0;
  Eigen::MatrixXd x(4, 1);
  x << w, w, 1, 0;
  auto p = IrtParams::pinned(Model::TwoPL_Item, 4, 1);
  p.theta << -2, -1, 1, 2;
  p.delta << 3;
  double previous = -INFINITY;
  for (double d : {1.0, 2.0, 4.0, 8.0, 16.0}) {
    p.d_item(0) = d;
    const double ll = matrix_log_likelihood(x, p);
    CHECK(ll > previous);
    previous = ll;
  }
  CHECK(previous > 0.0);
}
