#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ctm/simulator.hpp"

using namespace ctm;
using namespace ctm::sim;
using doctest::Approx;

TEST_CASE("generator output is fixed by the seed") {
  Rng a(42), b(42), c(43);
  for (int t = 0; t < 100; ++t) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u > 0.0);
    CHECK(u <= 1.0);
  }
  CHECK(a.uniform() != c.uniform());
  CHECK(Rng::stream_seed(1, 0) != Rng::stream_seed(1, 1));
  CHECK(Rng::stream_seed(1, 0) == Rng::stream_seed(1, 0));

  // First output of std::mt19937_64 seeded with 5489 is fixed by the standard.
  Rng standard(5489);
  CHECK(standard.uniform() == Approx(static_cast<double>(14514284786278117030ULL >> 11) / 9007199254740992.0 +
                                     1.0 / 9007199254740992.0));
}

TEST_CASE("normal draws have the requested moments") {
  Rng rng(3);
  const int n = 20000;
  double sum = 0.0, sq = 0.0;
  for (int t = 0; t < n; ++t) {
    const double z = rng.normal(1.0, 2.0);
    sum += z;
    sq += z * z;
  }
  const double mean = sum / n;
  CHECK(mean == Approx(1.0).epsilon(0.05));
  CHECK(sq / n - mean * mean == Approx(4.0).epsilon(0.05));
}

TEST_CASE("config validation") {
  SimConfig c;
  c.guess_rate = 1.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  SimConfig d;
  d.item_options = {4, 4};
  CHECK_THROWS_AS(d.validate(), std::invalid_argument);
  SimConfig e;
  e.model = irt::Model::FiveParam;
  CHECK_NOTHROW(e.validate());
}

TEST_CASE("matrices derived from one response pattern") {
  SimConfig config;
  config.n = 300;
  config.k = 12;
  config.item_options = {2, 3, 4, 5, 2, 3, 4, 5, 2, 3, 4, 5};
  Rng rng(77);
  const auto b = simulate(config, rng);

  const auto& T = b.true_matrix.values;
  const auto& D = b.distorted_matrix.values;
  const auto& C = b.corrected_matrix.values;
  CHECK(b.corrected_matrix.kind == MatrixKind::Corrected);
  CHECK(b.distorted_matrix.kind == MatrixKind::Distorted);
  for (Index i = 0; i < T.rows(); ++i) {
    for (Index j = 0; j < T.cols(); ++j) {
      const auto r = b.responses(i, j);
      CHECK((T(i, j) == 0.0 || T(i, j) == 1.0));
      CHECK(D(i, j) >= T(i, j));
      if (T(i, j) == 1.0) CHECK(r == Outcome::Correct);
      if (r == Outcome::Omitted) CHECK(C(i, j) == 0.0);
      if (r == Outcome::Wrong) CHECK(C(i, j) == Approx(-1.0 / (config.item_options[static_cast<std::size_t>(j)] - 1)));
      if (r == Outcome::Correct) CHECK((D(i, j) == 1.0 && C(i, j) == 1.0));
    }
  }
  std::size_t attempts = 0, successes = 0;
  for (const auto& g : b.guess_log) {
    ++attempts;
    successes += g.success;
    CHECK(T(g.person, g.item) == 0.0);
  }
  CHECK(attempts > 0);
  CHECK(successes < attempts);
}

TEST_CASE("guessing frequencies") {
  SimConfig config;
  config.n = 4000;
  config.k = 10;
  config.options = 4;
  config.guess_rate = 0.5;
  config.fixed_theta = Eigen::VectorXd::Constant(4000, -6.0);
  config.fixed_delta = Eigen::VectorXd::Constant(10, 6.0);
  Rng rng(10);
  const auto b = simulate(config, rng);
  // Nobody knows anything: attempts ~ g, successes ~ g / m.
  double zeros = 0.0;
  for (Index i = 0; i < 4000; ++i) {
    for (Index j = 0; j < 10; ++j) zeros += b.true_matrix.values(i, j) == 0.0;
  }
  const double attempts = static_cast<double>(b.guess_log.size()) / zeros;
  const double success = b.distorted_matrix.values.sum() / zeros;
  CHECK(attempts == Approx(0.5).epsilon(0.03));
  CHECK(success == Approx(0.125).epsilon(0.05));
}

TEST_CASE("expected distorted score") {
  CHECK(expected_distorted_score(20.0, 40.0, 0.0) == 20.0);
  CHECK(expected_distorted_score(20.0, 40.0, 0.125) == Approx(22.5));
  CHECK(expected_distorted_score(40.0, 40.0, 0.3) == Approx(40.0));
}

TEST_CASE("sign test") {
  CHECK(sign_test_p_value(5, 5) == Approx(1.0 / 32.0));
  CHECK(sign_test_p_value(0, 5) == Approx(1.0));
  CHECK(sign_test_p_value(4, 5) == Approx(6.0 / 32.0));
}

TEST_CASE("recovery experiment is reproducible and reports every estimator") {
  SimConfig config;
  config.n = 300;
  config.k = 15;
  config.seed = 5;
  const auto a = run_recovery_experiment(config, 3);
  const auto b = run_recovery_experiment(config, 3);
  std::ostringstream sa, sb;
  write_experiment_csv(sa, a);
  write_experiment_csv(sb, b);
  CHECK(sa.str() == sb.str());

  for (const char* name : {"person_score_distorted", "person_score_corrected", "item_total_r_corrected_k",
                           "intercorr_corrected_k", "kr20_corrected", "alpha_corrected"}) {
    CHECK_MESSAGE(a.replications[0].estimator(name) != nullptr, name);
  }
  CHECK(a.replications[0].estimator("delta_hat_true_fit") == nullptr);
  CHECK(a.replications[1].seed == Rng::stream_seed(5, 1));
  CHECK_THROWS_AS(run_recovery_experiment(config, 0), std::invalid_argument);
}
