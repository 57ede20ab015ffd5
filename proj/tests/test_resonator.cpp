#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "resonator/experiments.hpp"
#include "resonator/resonator.hpp"
#include "resonator/stability.hpp"

using namespace resonator;

namespace {

BipolarVector random_vector(Rng& rng, std::size_t n) {
  std::vector<int> v(n);
  for (auto& e : v) e = (rng() & 1u) ? 1 : -1;
  return BipolarVector::from_ints(v);
}

// Columns of a 2^k x 2^k Sylvester-Hadamard matrix.
Codebook sylvester(std::size_t k, std::size_t d) {
  const std::size_t n = std::size_t{1} << k;
  std::vector<std::int8_t> entries;
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < n; ++i) entries.push_back(std::popcount(i & j) % 2 ? -1 : 1);
  }
  return Codebook::from_column_major(n, d, entries);
}

std::vector<BipolarVector> truth_estimates(const FactorizationProblem& p) {
  std::vector<BipolarVector> est;
  for (std::size_t f = 0; f < p.factors(); ++f) est.push_back(p.codebook(f).column((*p.truth())[f]));
  return est;
}

}  // namespace

TEST_CASE("config validation") {
  ResonatorConfig c;
  CHECK_NOTHROW(c.validate());
  c.max_iterations = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.max_iterations = 1;
  c.cycle_buffer_length = 1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("OP update matches the dense weight matrix") {
  Rng rng(1);
  for (int t = 0; t < 30; ++t) {
    const auto cb = sample_codebook(rng, 8, 3);
    const auto v = random_vector(rng, 8);
    CHECK(op_update(cb, v).to_ints() == oracle::op_update(cb, v.to_ints()));
  }
  const auto cb = sample_codebook(rng, 150, 12);
  for (int t = 0; t < 10; ++t) {
    const auto v = random_vector(rng, 150);
    CHECK(op_update(cb, v).to_ints() == oracle::op_update(cb, v.to_ints()));
  }
}

TEST_CASE("OLS update matches the dense projection") {
  Rng rng(2);
  for (int t = 0; t < 30; ++t) {
    const auto cb = sample_codebook(rng, 8, 2);
    const auto v = random_vector(rng, 8);
    Eigen::MatrixXd x = oracle::dense(cb);
    if ((x.transpose() * x).determinant() == 0.0) continue;
    // entries whose projection is exactly 0 take their sign from rounding
    const auto got = ols_update(cb, v).to_ints();
    const auto expect = oracle::ols_update(cb, v.to_ints());
    const Eigen::VectorXd proj = x * (oracle::pinv(x) * v.to_real());
    for (Eigen::Index i = 0; i < proj.size(); ++i) {
      if (std::abs(proj[i]) > 1e-9) CHECK(got[static_cast<std::size_t>(i)] == expect[static_cast<std::size_t>(i)]);
    }
  }
}

TEST_CASE("OLS fixes every codevector") {
  Rng rng(3);
  const auto cb = sample_codebook(rng, 200, 30);
  for (std::size_t j = 0; j < 30; ++j) CHECK(ols_update(cb, cb.column(j)) == cb.column(j));
}

TEST_CASE("orthogonal codebooks: OP fixes codevectors and agrees with OLS") {
  const auto cb = sylvester(5, 12);
  for (std::size_t j = 0; j < 12; ++j) CHECK(op_update(cb, cb.column(j)) == cb.column(j));
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    const auto v = random_vector(rng, 32);
    const auto op = op_update(cb, v).to_ints();
    const auto ols = ols_update(cb, v).to_ints();
    const Eigen::VectorXd field = cb.matrix() * (cb.matrix().transpose() * v.to_real());
    for (std::size_t i = 0; i < 32; ++i) {
      if (field[static_cast<Eigen::Index>(i)] != 0.0) CHECK(op[i] == ols[i]);
    }
  }
}

TEST_CASE("OLS output on a far-from-range input is a fair coin per entry") {
  Rng rng(5);
  const auto cb = sample_codebook(rng, 1000, 20);
  // For each sampled entry, count +1 outputs over 400 random inputs.
  const int trials = 400;
  std::vector<int> plus(1000, 0);
  for (int t = 0; t < trials; ++t) {
    const auto out = ols_update(cb, random_vector(rng, 1000));
    for (std::size_t i = 0; i < 1000; ++i) plus[i] += out[i] == 1;
  }
  const double sigma = std::sqrt(0.25 / trials);
  int within = 0;
  double total = 0.0;
  for (int p : plus) {
    const double frac = static_cast<double>(p) / trials;
    within += std::abs(frac - 0.5) <= 3.0 * sigma;
    total += frac;
  }
  CHECK(within >= 990);
  CHECK(total / 1000.0 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("one sweep equals a step-by-step transcription") {
  for (auto variant : {WeightVariant::OuterProduct, WeightVariant::OrdinaryLeastSquares}) {
    for (std::uint64_t s = 0; s < 10; ++s) {
      Rng rng(200 + s);
      const std::vector<std::size_t> sizes{4, 4};
      const auto p = sample_problem(rng, 100, sizes);
      std::vector<BipolarVector> init{random_vector(rng, 100), random_vector(rng, 100)};
      std::vector<std::vector<int>> ref;
      for (const auto& e : init) ref.push_back(e.to_ints());

      SolverState state(init);
      ResonatorConfig config;
      config.weights = variant;
      resonator_sweep(state, p, config);
      const auto expected = variant == WeightVariant::OuterProduct
                                ? oracle::sweep(p, ref, oracle::op_update)
                                : oracle::sweep(p, ref, oracle::ols_update);
      for (std::size_t f = 0; f < 2; ++f) CHECK(state.estimate(f).to_ints() == expected[f]);
      CHECK(state.iteration == 1);
      for (std::size_t f = 0; f < 2; ++f) {
        std::vector<std::uint64_t> packed(state.words_per_factor());
        state.estimate(f).pack_into(packed);
        CHECK(std::equal(packed.begin(), packed.end(), state.packed(f).begin()));
      }
    }
  }
}

TEST_CASE("synchronous sweeps read only the previous state") {
  Rng rng(7);
  const std::vector<std::size_t> sizes{5, 5, 5};
  const auto p = sample_problem(rng, 120, sizes);
  std::vector<BipolarVector> init{random_vector(rng, 120), random_vector(rng, 120), random_vector(rng, 120)};
  SolverState state(init);
  ResonatorConfig config;
  config.convention = UpdateConvention::Synchronous;
  resonator_sweep(state, p, config);
  for (std::size_t f = 0; f < 3; ++f) {
    const auto input = hadamard(others_product(init, f), p.composite());
    CHECK(state.estimate(f) == op_update(p.codebook(f), input));
  }
}

TEST_CASE("ground truth is a fixed point of OLS, also with an even sign flip") {
  Rng rng(8);
  const std::vector<std::size_t> sizes{6, 6};
  const auto p = sample_problem(rng, 100, sizes);
  ResonatorConfig config;
  config.weights = WeightVariant::OrdinaryLeastSquares;
  auto est = truth_estimates(p);
  SolverState state(est);
  resonator_sweep(state, p, config);
  CHECK(state.estimates() == est);

  std::vector<BipolarVector> flipped{-est[0], -est[1]};
  CHECK(hadamard(flipped[0], flipped[1]) == p.composite());
  SolverState state2(flipped);
  resonator_sweep(state2, p, config);
  CHECK(state2.estimates() == flipped);
}

TEST_CASE("history detects repeats by lag") {
  Rng rng(9);
  const auto a = random_vector(rng, 70);
  const auto b = random_vector(rng, 70);
  const auto c = random_vector(rng, 70);
  SolverState s(std::vector<BipolarVector>{a, b}, 4);
  CHECK(!s.repeat_lag());
  s.remember();
  CHECK(s.repeat_lag() == 1u);
  s.set_estimate(0, c);
  CHECK(!s.repeat_lag());
  s.remember();
  s.set_estimate(0, a);
  CHECK(s.repeat_lag() == 2u);
  // the buffer forgets states older than its length
  for (int i = 0; i < 4; ++i) {
    s.set_estimate(1, random_vector(rng, 70));
    s.remember();
  }
  s.set_estimate(0, a);
  s.set_estimate(1, b);
  CHECK(!s.repeat_lag());
  CHECK(s.history_size() == 4);
}

TEST_CASE("single-candidate codebooks converge in one sweep") {
  Rng rng(10);
  const std::vector<std::size_t> sizes{1, 1, 1};
  const auto p = sample_problem(rng, 64, sizes);
  for (auto variant : {WeightVariant::OuterProduct, WeightVariant::OrdinaryLeastSquares}) {
    ResonatorConfig config;
    config.weights = variant;
    const auto r = run_resonator(p, config);
    CHECK(r.iterations == 1);
    CHECK(r.termination.kind == TerminationKind::FixedPoint);
    CHECK(r.indices() == std::vector<std::size_t>{0, 0, 0});
  }
}

TEST_CASE("small problems decode to the exhaustive answer") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const std::vector<std::size_t> sizes{3, 3};
    const auto p = trial_problem(1, 100, sizes, s);
    const auto best = oracle::enumerate(p);
    for (auto variant : {WeightVariant::OuterProduct, WeightVariant::OrdinaryLeastSquares}) {
      ResonatorConfig config;
      config.weights = variant;
      const auto r = run_resonator(p, config, s);
      CHECK(r.indices() == best.indices);
    }
  }
}

TEST_CASE("termination bookkeeping") {
  const std::vector<std::size_t> sizes{30, 30, 30};
  for (std::size_t t = 0; t < 10; ++t) {
    const auto p = trial_problem(3, 400, sizes, t);
    ResonatorConfig config;
    config.max_iterations = 200;
    const auto r = run_resonator(p, config);
    CHECK(r.similarity_trace.size() == r.iterations);
    for (const auto& d : r.decoded) CHECK(std::abs(d.similarity) <= 1.0);
    if (r.termination.kind == TerminationKind::FixedPoint) {
      // replay the solve, then check one more sweep changes nothing
      SolverState state(std::vector<BipolarVector>{initial_superposition(p.codebook(0)),
                                                   initial_superposition(p.codebook(1)),
                                                   initial_superposition(p.codebook(2))});
      for (std::size_t i = 0; i < r.iterations; ++i) resonator_sweep(state, p, config);
      const auto before = state.estimates();
      resonator_sweep(state, p, config);
      CHECK(state.estimates() == before);
    }
    if (r.termination.kind == TerminationKind::LimitCycle) CHECK(r.termination.cycle_length >= 2);
  }
}

TEST_CASE("a one-sweep cap reports the cap") {
  const std::vector<std::size_t> sizes{60, 60, 60};
  const auto p = trial_problem(4, 300, sizes, 0);
  ResonatorConfig config;
  config.max_iterations = 1;
  const auto r = run_resonator(p, config);
  CHECK(r.iterations == 1);
  CHECK(r.termination.kind != TerminationKind::LimitCycle);
}

TEST_CASE("solved problems end with similarity one") {
  const std::vector<std::size_t> sizes{10, 10, 10};
  for (std::size_t t = 0; t < 10; ++t) {
    const auto p = trial_problem(5, 500, sizes, t);
    const auto r = run_resonator(p, ResonatorConfig{});
    CHECK(total_accuracy(r, *p.truth()) == 1.0);
    CHECK(r.similarity_trace.back() == doctest::Approx(1.0));
    CHECK(r.termination.kind == TerminationKind::FixedPoint);
  }
}

TEST_CASE("randomized factor order needs a seed and stays bipolar") {
  const std::vector<std::size_t> sizes{8, 8, 8};
  const auto p = trial_problem(6, 300, sizes, 0);
  ResonatorConfig config;
  config.randomize_order = true;
  const auto a = run_resonator(p, config, 11);
  const auto b = run_resonator(p, config, 11);
  CHECK(a.indices() == b.indices());
  CHECK(a.iterations == b.iterations);
  SolverState state(truth_estimates(p));
  CHECK_THROWS_AS(resonator_sweep(state, p, config, nullptr), std::invalid_argument);
}

TEST_CASE("iterations stay far below the search-space size when solvable") {
  const std::vector<std::size_t> sizes{40, 40, 40};
  std::vector<std::size_t> iters;
  for (std::size_t t = 0; t < 60; ++t) {
    const auto p = trial_problem(7, 1500, sizes, t);
    iters.push_back(run_resonator(p, ResonatorConfig{}).iterations);
  }
  std::nth_element(iters.begin(), iters.begin() + 30, iters.end());
  CHECK(static_cast<double>(iters[30]) < 1e-4 * 64000.0);
}

TEST_CASE("OP flip rate from a stored codevector matches the Hopfield estimate") {
  Rng rng(12);
  const std::size_t n = 1000, d = 50;
  const int trials = 250;
  std::vector<double> rates;
  for (int t = 0; t < trials; ++t) {
    const auto cb = sample_codebook(rng, n, d);
    const auto x = cb.column(0);
    rates.push_back(static_cast<double>(hamming_distance(op_update(cb, x), x)) / n);
  }
  double mean = 0.0;
  for (double r : rates) mean += r;
  mean /= trials;
  double ss = 0.0;
  for (double r : rates) ss += (r - mean) * (r - mean);
  const double se = std::sqrt(ss / (trials - 1) / trials);
  const double theory = hopfield_bitflip(n, d, true);
  CHECK(std::abs(mean - theory) <= 3.0 * std::max(se, 1.0 / (n * trials)));
}
