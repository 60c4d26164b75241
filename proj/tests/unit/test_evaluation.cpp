#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "oracles.hpp"
#include "pairhmm/error.hpp"
#include "pairhmm/evaluation.hpp"

using namespace pairhmm;

namespace {

Matrix permute_columns(const Matrix& m, const std::vector<int>& perm) {
  Matrix out(m.rows(), m.cols());
  for (Index j = 0; j < m.cols(); ++j) out.col(perm[static_cast<std::size_t>(j)]) = m.col(j);
  return out;
}

}  // namespace

TEST_CASE("assignment") {
  SUBCASE("matches brute force") {
    Rng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
      const Index k = 1 + trial % 6;
      const Matrix cost = oracle::random_positive(k, k, rng);
      const std::vector<int> a = solve_assignment(cost);
      double total = 0.0;
      for (Index i = 0; i < k; ++i) total += cost(i, a[static_cast<std::size_t>(i)]);
      CHECK(total == doctest::Approx(oracle::brute_force_assignment(cost)).epsilon(1e-12));
      std::vector<int> sorted = a;
      std::sort(sorted.begin(), sorted.end());
      for (Index i = 0; i < k; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
    }
  }
  SUBCASE("non-square cost is rejected") {
    CHECK_THROWS_AS(solve_assignment(Matrix::Zero(2, 3)), Error);
  }
}

TEST_CASE("match permutation") {
  Rng rng(2);
  SUBCASE("identity") {
    const Matrix m = oracle::random_column_stochastic(6, 3, rng);
    const MatchResult r = match_permutation(m, m);
    CHECK(r.emission_tv == 0.0);
    CHECK(r.permutation == std::vector<int>{0, 1, 2});
  }
  SUBCASE("swapped columns are undone, including transitions") {
    Matrix m(3, 2);
    m << 0.5, 0.1, 0.5, 0.1, 0.0, 0.8;
    Matrix swapped(3, 2);
    swapped << 0.1, 0.5, 0.1, 0.5, 0.8, 0.0;
    Matrix p(2, 2), q(2, 2);
    p << 0.9, 0.1, 0.3, 0.7;
    q << 0.7, 0.3, 0.1, 0.9;
    const MatchResult r = match_permutation(m, swapped, p, q);
    CHECK(r.permutation == std::vector<int>{1, 0});
    CHECK(r.emission_tv == doctest::Approx(0.0));
    CHECK(r.transition_tv == doctest::Approx(0.0));
  }
  SUBCASE("K = 3 agrees with enumerating all six relabelings") {
    for (int trial = 0; trial < 20; ++trial) {
      const Matrix a = oracle::random_column_stochastic(5, 3, rng);
      const Matrix b = oracle::random_column_stochastic(5, 3, rng);
      std::vector<int> perm{0, 1, 2};
      double best = 1e300;
      do {
        double c = 0.0;
        for (int j = 0; j < 3; ++j) c += 0.5 * (a.col(j) - b.col(perm[static_cast<std::size_t>(j)])).cwiseAbs().sum();
        best = std::min(best, c / 3.0);
      } while (std::next_permutation(perm.begin(), perm.end()));
      CHECK(match_permutation(a, b).emission_tv == doctest::Approx(best).epsilon(1e-12));
    }
  }
  SUBCASE("invariant to relabeling the estimate") {
    for (int trial = 0; trial < 20; ++trial) {
      const Matrix a = oracle::random_column_stochastic(6, 4, rng);
      const Matrix b = oracle::random_column_stochastic(6, 4, rng);
      std::vector<int> perm{0, 1, 2, 3};
      for (int s = 0; s < trial % 7; ++s) std::next_permutation(perm.begin(), perm.end());
      CHECK(match_permutation(a, permute_columns(b, perm)).emission_tv ==
            doctest::Approx(match_permutation(a, b).emission_tv).epsilon(1e-12));
    }
  }
  SUBCASE("metric is zero only for equal matrices") {
    const Matrix a = oracle::random_column_stochastic(4, 2, rng);
    Matrix b = a;
    b(0, 0) += 1e-3;
    b(1, 0) -= 1e-3;
    CHECK(match_permutation(a, b).emission_tv > 0.0);
  }
  SUBCASE("errors") {
    const Matrix a = oracle::random_column_stochastic(4, 2, rng);
    CHECK_THROWS_AS(match_permutation(a, oracle::random_column_stochastic(4, 3, rng)), Error);
    CHECK_THROWS_AS(match_permutation(a, a, Matrix::Identity(2, 2), std::nullopt), Error);
  }
}

TEST_CASE("methods round trip through their names") {
  for (Method m : {Method::Proposed, Method::Nmf, Method::BaumWelch}) CHECK(method_from_string(to_string(m)) == m);
  CHECK(to_string(Method::BaumWelch) == "baum_welch");
  CHECK_THROWS_AS(method_from_string("em"), Error);
}

TEST_CASE("experiment on exact moments") {
  ExperimentConfig cfg;
  cfg.sequence_lengths = {0};
  cfg.seeds = {0, 1, 2};
  cfg.methods = {Method::Proposed};
  cfg.record_time = false;
  const std::vector<ExperimentRow> rows = run_experiment(cfg);
  REQUIRE(rows.size() == 3);
  for (const ExperimentRow& r : rows) {
    CHECK(r.emission_tv <= 1e-2);
    CHECK(r.seconds == 0.0);
  }
  const std::string csv = experiment_csv(rows);
  CHECK(csv.rfind("method,seed,T,emission_tv,transition_tv,seconds\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("experiment results do not depend on the thread count") {
  ExperimentConfig cfg;
  cfg.n = 8;
  cfg.k = 3;
  cfg.sequence_lengths = {2000, 4000};
  cfg.seeds = {0, 1};
  cfg.nmf_iters = 200;
  cfg.record_time = false;
  const std::string serial = experiment_csv(run_experiment(cfg));
  cfg.threads = 4;
  CHECK(experiment_csv(run_experiment(cfg)) == serial);
}

TEST_CASE("experiment config") {
  const ExperimentConfig cfg = parse_experiment_config(
      "# small run\nN=10\nK=3\nlengths=100,1000\nseeds=4,5\nmode=sparse50\nmethods=proposed,baum_welch\n"
      "lambda=0.1\nnmf_iters=10\nbaum_welch_iters=20\ntiming=off\nthreads=2\n");
  CHECK(cfg.n == 10);
  CHECK(cfg.k == 3);
  CHECK(cfg.sequence_lengths == std::vector<std::uint64_t>{100, 1000});
  CHECK(cfg.seeds == std::vector<std::uint64_t>{4, 5});
  CHECK(cfg.mode == EmissionMode::Sparse50);
  CHECK(cfg.methods == std::vector<Method>{Method::Proposed, Method::BaumWelch});
  CHECK(cfg.lambda == 0.1);
  CHECK(cfg.nmf_iters == 10);
  CHECK(cfg.baum_welch_iters == 20);
  CHECK_FALSE(cfg.record_time);
  CHECK(cfg.threads == 2);

  CHECK_THROWS_AS(parse_experiment_config("colour=blue\n"), Error);
  CHECK_THROWS_AS(parse_experiment_config("K=three\n"), Error);
  CHECK_THROWS_AS(parse_experiment_config("lengths=1\n"), Error);
  CHECK_THROWS_AS(parse_experiment_config("lengths=0\nmethods=baum_welch\n"), Error);
  CHECK_THROWS_AS(parse_experiment_config("N=3\nK=4\n"), Error);
}
