#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "oracles.hpp"
#include "pairhmm/error.hpp"
#include "pairhmm/evaluation.hpp"
#include "pairhmm/geometry.hpp"
#include "pairhmm/hmm_core.hpp"
#include "pairhmm/solver.hpp"
#include "pairhmm/stats.hpp"

using namespace pairhmm;

namespace {

struct Instance {
  Matrix m;
  Matrix theta;
  Matrix p;
  CooccurrenceMatrix omega;
};

Instance exact_instance(std::uint64_t seed, int n, int k) {
  const EmissionMatrix m = generate_scattered_emission(n, k, EmissionMode::IdentityTop, derive_seed(seed, 1));
  const TransitionMatrix p = generate_random_transition(k, derive_seed(seed, 2));
  const Hmm hmm(p, m, stationary_distribution(p));
  return {m.matrix(), theta_from_transition(p).matrix(), p.matrix(), exact_pairwise(hmm)};
}

double entropy(const Matrix& omega) {
  double h = 0.0;
  for (Index i = 0; i < omega.size(); ++i) {
    const double v = omega.data()[i];
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

}  // namespace

TEST_CASE("loss") {
  SUBCASE("exact fit with lambda = 0 equals the entropy of omega") {
    const Instance in = exact_instance(1, 8, 3);
    CHECK(loss(in.omega.matrix(), in.m, in.theta, 0.0) == doctest::Approx(entropy(in.omega.matrix())).epsilon(1e-12));
  }
  SUBCASE("one state") {
    Vector m(3);
    m << 0.2, 0.3, 0.5;
    const Matrix omega = m * m.transpose();
    CHECK(loss(omega, m, Matrix::Ones(1, 1), 0.3) == doctest::Approx(entropy(omega) + 0.3).epsilon(1e-12));
  }
  SUBCASE("agrees with an independent implementation") {
    Rng rng(2);
    for (int trial = 0; trial < 10; ++trial) {
      const Matrix omega = oracle::random_positive(5, 5, rng);
      const Matrix om = omega / omega.sum();
      const Matrix m = oracle::random_column_stochastic(5, 2, rng);
      const Matrix theta = oracle::random_feasible_theta(2, rng);
      CHECK(std::abs(loss(om, m, theta, 0.05) - oracle::independent_loss(om, m, theta, 0.05)) < 1e-12);
    }
  }
  SUBCASE("shape errors") {
    CHECK_THROWS_AS(loss(Matrix::Constant(3, 3, 1.0 / 9), Matrix::Constant(4, 2, 0.25), Matrix::Constant(2, 2, 0.25), 0.0), Error);
  }
}

TEST_CASE("initialization") {
  SUBCASE("theta start for K = 2") {
    const Matrix t = initial_theta(2).matrix();
    CHECK(t(0, 0) == doctest::Approx(1.0 / 3));
    CHECK(t(0, 1) == doctest::Approx(1.0 / 6));
  }
  SUBCASE("theta start is feasible for K up to 64") {
    for (int k = 1; k <= 64; ++k) CHECK_NOTHROW(initial_theta(k));
  }
  SUBCASE("SPA picks the planted anchors on a separable instance") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Instance in = exact_instance(seed, 20, 5);
      const Initialization init = initialize(in.omega.matrix(), 5, SolverOptions{});
      std::set<int> anchors(init.anchors.begin(), init.anchors.end());
      CHECK(anchors == std::set<int>{0, 1, 2, 3, 4});
      CHECK(match_permutation(in.m, init.M.matrix()).emission_tv < 1e-4);
      CHECK(init.M.matrix().minCoeff() > 0.0);
    }
  }
  SUBCASE("K larger than N") {
    try {
      initialize(Matrix::Constant(3, 3, 1.0 / 9), 4, SolverOptions{});
      FAIL("expected KTooLarge");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::KTooLarge);
    }
  }
  SUBCASE("random and provided initializations") {
    SolverOptions opts;
    opts.init_method = InitMethod::Random;
    opts.seed = 3;
    const Matrix omega = Matrix::Constant(4, 4, 1.0 / 16);
    CHECK(initialize(omega, 2, opts).M.matrix() == initialize(omega, 2, opts).M.matrix());
    opts.init_method = InitMethod::Provided;
    CHECK_THROWS_AS(opts.validate(), Error);
    opts.initial_emission = Matrix::Constant(4, 2, 0.25);
    CHECK(initialize(omega, 2, opts).M.matrix().isApprox(Matrix::Constant(4, 2, 0.25)));
  }
}

TEST_CASE("ratio matrix") {
  Matrix omega(3, 3);
  omega << 0.1, 0.0, 0.1, 0.1, 0.2, 0.0, 0.1, 0.2, 0.2;
  Matrix m(3, 1);
  m << 0.2, 0.3, 0.5;
  const Matrix ot = ratio_matrix(omega, m, Matrix::Ones(1, 1));
  CHECK(ot(0, 0) == doctest::Approx(0.1 / 0.04));
  CHECK(ot(0, 1) == 0.0);
  CHECK(ot(2, 2) == doctest::Approx(0.2 / 0.25));
  Matrix zero_row = m;
  zero_row(0, 0) = 0.0;
  CHECK_THROWS_AS(ratio_matrix(omega, zero_row, Matrix::Ones(1, 1)), Error);
}

TEST_CASE("loss gradient matches finite differences") {
  Rng rng(3);
  const Matrix raw = oracle::random_positive(4, 4, rng);
  const Matrix omega = raw / raw.sum();
  const Matrix m = oracle::random_column_stochastic(4, 3, rng);
  const Matrix theta = oracle::random_feasible_theta(3, rng);
  const LossGradient g = loss_gradient(omega, m, theta, 0.1);
  const Matrix fd_m = oracle::finite_difference_gradient([&](const Matrix& x) { return loss(omega, x, theta, 0.1); }, m, 1e-7);
  const Matrix fd_t = oracle::finite_difference_gradient([&](const Matrix& x) { return loss(omega, m, x, 0.1); }, theta, 1e-7);
  CHECK((g.dM - fd_m).norm() / g.dM.norm() < 1e-6);
  CHECK((g.dTheta - fd_t).norm() / g.dTheta.norm() < 1e-6);
}

TEST_CASE("sca step") {
  SUBCASE("ground truth is a fixed point when lambda = 0") {
    const Instance in = exact_instance(4, 10, 3);
    const ScaStep st = sca_step(in.omega.matrix(), in.m, ThetaMatrix(in.theta), 0.0);
    CHECK((st.M - in.m).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((st.Theta - in.theta).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("surrogate is tight and decreases, with Pi materialized") {
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
      const Index n = 3 + trial % 2, k = 2 + trial % 3 % 2;
      const Matrix raw = oracle::random_positive(n, n, rng);
      const Matrix omega = raw / raw.sum();
      const Matrix m = oracle::random_column_stochastic(n, k, rng);
      const Matrix theta = oracle::random_feasible_theta(k, rng);
      const double at_r = oracle::materialized_surrogate(omega, m, theta, m, theta);
      CHECK(at_r == doctest::Approx(loss(omega, m, theta, 0.0)).epsilon(1e-12));
      const ScaStep st = sca_step(omega, m, ThetaMatrix(theta), 0.0);
      CHECK(oracle::materialized_surrogate(omega, m, theta, st.M, st.Theta) <= at_r + 1e-12);
      // M̃ minimizes the surrogate in M: random feasible perturbations do no better.
      const double best = oracle::materialized_surrogate(omega, m, theta, st.M, st.Theta);
      for (int j = 0; j < 5; ++j) {
        const Matrix other = normalize_columns(st.M + 0.05 * oracle::random_column_stochastic(n, k, rng));
        CHECK(oracle::materialized_surrogate(omega, m, theta, other, st.Theta) >= best - 1e-12);
      }
    }
  }
  SUBCASE("omega tilde is omega over the reconstruction") {
    Rng rng(6);
    const Matrix raw = oracle::random_positive(3, 3, rng);
    const Matrix omega = raw / raw.sum();
    const Matrix m = oracle::random_column_stochastic(3, 2, rng);
    const Matrix theta = oracle::random_feasible_theta(2, rng);
    const ScaStep st = sca_step(omega, m, ThetaMatrix(theta), 0.05);
    CHECK((st.omega_tilde - omega.cwiseQuotient(m * theta * m.transpose())).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("projections") {
  SUBCASE("simplex projection") {
    Vector v(3);
    v << 0.5, 0.8, -0.2;
    const Vector p = project_to_simplex(v);
    CHECK(p.sum() == doctest::Approx(1.0));
    CHECK(p.minCoeff() >= 0.0);
    CHECK(p(0) == doctest::Approx(0.35));
    CHECK(p(1) == doctest::Approx(0.65));
    CHECK(p(2) == 0.0);
  }
  SUBCASE("feasible theta projects to itself") {
    Rng rng(7);
    const Matrix t = oracle::random_feasible_theta(4, rng);
    CHECK((project_to_theta_set(t) - t).cwiseAbs().maxCoeff() < 1e-10);
    const Matrix q = project_to_theta_set(oracle::random_positive(4, 4, rng));
    CHECK(q.minCoeff() >= 0.0);
    CHECK(std::abs(q.sum() - 1.0) < 1e-9);
    CHECK((q.rowwise().sum() - q.colwise().sum().transpose()).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("nonnegative least squares") {
  Matrix a(3, 2);
  a << 1, 0, 0, 1, 1, 1;
  Vector b(3);
  b << 1, -1, 0;
  const Vector x = nonnegative_least_squares(a, b);
  CHECK(x.minCoeff() >= 0.0);
  CHECK(x(0) == doctest::Approx(0.5));
  CHECK(x(1) == 0.0);
}

TEST_CASE("sca solve") {
  SUBCASE("recovers ground truth from exact moments") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Instance in = exact_instance(seed, 20, 5);
      const FitResult fit = sca_solve(in.omega, 5);
      const MatchResult r = match_permutation(in.m, fit.M.matrix(), in.p, transition_from_theta(fit.Theta).matrix());
      CAPTURE(seed);
      CHECK(r.emission_tv <= 1e-2);
      CHECK(r.transition_tv <= 2e-2);
      CHECK(stationarity_residual(in.omega.matrix(), fit.M.matrix(), fit.Theta.matrix(), 0.05) <= 1e-4);
    }
  }
  SUBCASE("one state gives the marginal and [1]") {
    Rng rng(8);
    const Instance in = exact_instance(8, 6, 2);
    const FitResult fit = sca_solve(in.omega, 1);
    const Vector marg = 0.5 * (in.omega.matrix().rowwise().sum() + in.omega.matrix().colwise().sum().transpose());
    CHECK((fit.M.matrix().col(0) - marg).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(fit.Theta.matrix()(0, 0) == 1.0);
  }
  SUBCASE("loss trace is monotone on noisy instances") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const int n = 8 + static_cast<int>(seed % 3) * 4, k = 3 + static_cast<int>(seed % 2);
      const TransitionMatrix p = generate_random_transition(k, derive_seed(seed, 30));
      const Hmm hmm(p, generate_scattered_emission(n, k, EmissionMode::Sparse50, derive_seed(seed, 31)), stationary_distribution(p));
      SolverOptions opts;
      opts.max_outer_iters = 2000;
      const FitResult fit = sca_solve(estimate_pairwise(sample_sequence(hmm, 5000, seed), n), k, opts);
      for (std::size_t i = 1; i < fit.loss_trace.size(); ++i) REQUIRE(fit.loss_trace[i] <= fit.loss_trace[i - 1] + 1e-9);
      CHECK(fit.log.size() == static_cast<std::size_t>(fit.outer_iters) + 1);
    }
  }
  SUBCASE("options are validated") {
    SolverOptions opts;
    opts.armijo_c = 1.5;
    CHECK_THROWS_AS(sca_solve(exact_instance(0, 6, 2).omega, 2, opts), Error);
  }
}

TEST_CASE("nmf baseline") {
  const Instance in = exact_instance(2, 20, 5);
  SUBCASE("kl trace is monotone") {
    const NmfResult fit = nmf_baseline(in.omega, 5, 3, 5000);
    for (std::size_t i = 1; i < fit.kl_trace.size(); ++i) CHECK(fit.kl_trace[i] <= fit.kl_trace[i - 1] + 1e-8);
    CHECK(std::abs(fit.joint.sum() - 1.0) < 1e-12);
  }
  SUBCASE("fits exact moments closely") {
    // Multiplicative updates can stall at local solutions, so allow a few restarts.
    for (std::uint64_t inst = 0; inst < 3; ++inst) {
      const Instance x = exact_instance(inst, 20, 5);
      double best = std::numeric_limits<double>::infinity();
      for (std::uint64_t seed = 0; seed < 5 && best > 1e-6; ++seed)
        best = std::min(best, nmf_baseline(x.omega, 5, seed, 50000).kl_trace.back());
      CAPTURE(inst);
      CHECK(best <= 1e-6);
    }
  }
}

TEST_CASE("nmf is worse than the proposed method at identification") {
  std::vector<double> ours, theirs;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Instance in = exact_instance(seed, 20, 5);
    ours.push_back(match_permutation(in.m, sca_solve(in.omega, 5).M.matrix()).emission_tv);
    theirs.push_back(match_permutation(in.m, nmf_baseline(in.omega, 5, seed, 5000).M.matrix()).emission_tv);
  }
  std::sort(ours.begin(), ours.end());
  std::sort(theirs.begin(), theirs.end());
  CHECK(ours[5] + ours[4] < theirs[5] + theirs[4]);
}
