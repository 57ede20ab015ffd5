#include "resonator/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/QR>

#include "resonator/parallel.hpp"

namespace resonator {

namespace {

std::uint64_t sizes_key(std::span<const std::size_t> sizes) {
  std::uint64_t h = 1469598103934665603ull;
  for (auto d : sizes) {
    h ^= static_cast<std::uint64_t>(d);
    h *= 1099511628211ull;
  }
  return h ^ sizes.size();
}

SolverSpec resonator_solver(const std::string& name, ResonatorConfig config) {
  SolverSpec s;
  s.name = name;
  s.uses_iteration_cap = true;
  s.solve = [config](const FactorizationProblem& problem, std::uint64_t seed, std::size_t cap) {
    ResonatorConfig c = config;
    c.max_iterations = std::max<std::size_t>(cap, 1);
    return run_resonator(problem, c, seed);
  };
  return s;
}

SolverSpec benchmark_solver(const std::string& name, BenchmarkConfig config) {
  config.validate();
  SolverSpec s;
  s.name = name;
  s.uses_iteration_cap = false;
  s.solve = [config](const FactorizationProblem& problem, std::uint64_t, std::size_t) {
    return run_benchmark(problem, config);
  };
  return s;
}

struct Trial {
  double accuracy = 0.0;
  double iterations = 0.0;
  bool aborted = false;
};

AccuracyEstimate summarize_trials(const std::vector<Trial>& trials) {
  std::vector<double> acc;
  acc.reserve(trials.size());
  double iters = 0.0;
  std::size_t aborted = 0;
  for (const auto& t : trials) {
    acc.push_back(t.accuracy);
    iters += t.iterations;
    aborted += t.aborted;
  }
  auto est = summarize(acc);
  est.aborted = aborted;
  est.mean_iterations = trials.empty() ? 0.0 : iters / static_cast<double>(trials.size());
  return est;
}

Trial run_trial(const SolverSpec& solver, const FactorizationProblem& problem,
                std::span<const std::size_t> truth, std::uint64_t seed, std::size_t cap) {
  try {
    const auto result = solver.solve(problem, seed, cap);
    return {total_accuracy(result, truth), static_cast<double>(result.iterations), false};
  } catch (const NumericalError&) {
    return {0.0, 0.0, true};
  } catch (const SingularGramError&) {
    return {0.0, 0.0, true};
  }
}

}  // namespace

std::vector<std::string> solver_names() {
  return {"resonator-op", "resonator-ols", "als", "ista", "fista", "pgd-simplex", "pgd-l1", "mw", "msc"};
}

std::vector<std::string> benchmark_names() { return {"als", "ista", "fista", "pgd-simplex", "mw", "msc"}; }

SolverSpec make_solver(const std::string& name, const ResonatorConfig& resonator,
                       std::optional<BenchmarkConfig> benchmark) {
  if (name == "resonator-op" || name == "resonator-ols") {
    ResonatorConfig c = resonator;
    c.weights = name == "resonator-op" ? WeightVariant::OuterProduct : WeightVariant::OrdinaryLeastSquares;
    return resonator_solver(name, c);
  }
  std::optional<BenchmarkConfig> defaults;
  if (name == "als") defaults = BenchmarkConfig::defaults(Algorithm::ALS);
  if (name == "ista") defaults = BenchmarkConfig::defaults(Algorithm::ISTA);
  if (name == "fista") defaults = BenchmarkConfig::defaults(Algorithm::FISTA);
  if (name == "pgd-simplex" || name == "pgd") defaults = BenchmarkConfig::defaults(Algorithm::PGD, Constraint::Simplex);
  if (name == "pgd-l1") defaults = BenchmarkConfig::defaults(Algorithm::PGD, Constraint::L1Ball);
  if (name == "mw") defaults = BenchmarkConfig::defaults(Algorithm::MW);
  if (name == "msc") defaults = BenchmarkConfig::defaults(Algorithm::MSC);
  if (!defaults) throw std::invalid_argument("unknown solver '" + name + "'");
  BenchmarkConfig config = *defaults;
  if (benchmark) {
    if (benchmark->algorithm != defaults->algorithm || benchmark->constraint != defaults->constraint) {
      throw std::invalid_argument("benchmark config does not match solver '" + name + "'");
    }
    config = *benchmark;
  }
  return benchmark_solver(name, config);
}

SolverSpec make_solver(const std::string& name) { return make_solver(name, ResonatorConfig{}); }

double total_accuracy(const SolveResult& result, std::span<const std::size_t> truth) {
  if (truth.empty() || result.decoded.size() != truth.size()) {
    throw std::invalid_argument("total_accuracy: decoded and truth differ in length");
  }
  std::size_t correct = 0;
  for (std::size_t f = 0; f < truth.size(); ++f) correct += result.decoded[f].index == truth[f];
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

std::size_t iteration_cap(double search_space_size, double k_fraction) {
  const double k = std::ceil(k_fraction * search_space_size);
  if (!(k >= 1.0)) return 1;
  if (k > 1e15) return static_cast<std::size_t>(1e15);
  return static_cast<std::size_t>(k);
}

double balance_ratio(std::span<const std::size_t> sizes) {
  if (sizes.empty()) throw std::invalid_argument("balance_ratio: empty size list");
  const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
  if (*lo == 0) throw std::invalid_argument("balance_ratio: zero codebook size");
  return static_cast<double>(*lo) / static_cast<double>(*hi);
}

AccuracyEstimate summarize(std::span<const double> accuracies) {
  AccuracyEstimate est;
  est.trials = accuracies.size();
  if (accuracies.empty()) return est;
  const double n = static_cast<double>(accuracies.size());
  const double mean = std::accumulate(accuracies.begin(), accuracies.end(), 0.0) / n;
  double ss = 0.0;
  for (double a : accuracies) ss += (a - mean) * (a - mean);
  est.mean = mean;
  est.standard_error = accuracies.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return est;
}

FactorizationProblem trial_problem(std::uint64_t seed, std::size_t n, std::span<const std::size_t> sizes,
                                   std::size_t trial) {
  auto rng = derive_rng(seed, Stream::Problem, {static_cast<std::uint64_t>(n), sizes_key(sizes), trial});
  return sample_problem(rng, n, sizes);
}

namespace {

// Trials [0, trials) in blocks; stops after a block once the summed accuracy
// can no longer reach `bar` * trials. Block boundaries do not depend on the
// thread count, so neither does the result.
AccuracyEstimate accuracy_blocks(std::size_t n, std::span<const std::size_t> sizes, std::size_t trials,
                                 const SolverSpec& solver, std::uint64_t seed, const ExperimentOptions& options,
                                 std::optional<double> bar) {
  if (trials < 1) throw std::invalid_argument("accuracy_at: trials must be >= 1");
  double m = 1.0;
  for (auto d : sizes) m *= static_cast<double>(d);
  const std::size_t cap = std::max(iteration_cap(m, options.k_fraction), options.min_iterations);
  const std::size_t block = bar && options.early_stop_block > 0 ? options.early_stop_block : trials;
  std::vector<Trial> all;
  double lost = 0.0;
  for (std::size_t start = 0; start < trials; start += block) {
    const std::size_t count = std::min(block, trials - start);
    auto results = parallel_trials(count, options.threads, [&](std::size_t i) {
      const std::size_t t = start + i;
      const auto problem = trial_problem(seed, n, sizes, t);
      return run_trial(solver, problem, *problem.truth(), derive_seed(seed, Stream::Solver, {t}), cap);
    });
    for (const auto& r : results) lost += 1.0 - r.accuracy;
    all.insert(all.end(), results.begin(), results.end());
    if (bar && lost > (1.0 - *bar) * static_cast<double>(trials) + 1e-9) break;
  }
  return summarize_trials(all);
}

}  // namespace

AccuracyEstimate accuracy_at(std::size_t n, std::span<const std::size_t> sizes, std::size_t trials,
                             const SolverSpec& solver, std::uint64_t seed, const ExperimentOptions& options) {
  return accuracy_blocks(n, sizes, trials, solver, seed, options, std::nullopt);
}

std::vector<AccuracyRow> accuracy_curve(std::size_t n, std::size_t f, std::span<const std::size_t> d_grid,
                                        std::size_t trials, const SolverSpec& solver, std::uint64_t seed,
                                        const ExperimentOptions& options) {
  std::vector<AccuracyRow> rows;
  for (auto d : d_grid) {
    const std::vector<std::size_t> sizes(f, d);
    AccuracyRow row;
    row.d = d;
    row.m = std::pow(static_cast<double>(d), static_cast<double>(f));
    row.estimate = accuracy_at(n, sizes, trials, solver, seed, options);
    rows.push_back(row);
  }
  return rows;
}

CapacityPoint find_operational_capacity(std::size_t n, std::size_t f, double p, std::size_t trials,
                                        const SolverSpec& solver, std::uint64_t seed,
                                        const ExperimentOptions& options, std::size_t d_limit) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("find_operational_capacity: p must be in (0, 1)");
  if (f < 2) throw std::invalid_argument("find_operational_capacity: need F >= 2");
  if (d_limit < 2) throw std::invalid_argument("find_operational_capacity: d_limit must be >= 2");
  CapacityPoint point;
  point.n = n;
  point.f = f;
  point.p = p;
  point.k_fraction = options.k_fraction;
  point.trials = trials;

  auto evaluate = [&](std::size_t d) -> const CapacityStep& {
    const std::vector<std::size_t> sizes(f, d);
    CapacityStep step;
    step.d = d;
    step.estimate = accuracy_blocks(n, sizes, trials, solver, seed, options, p);
    step.passed = step.estimate.trials == trials && step.estimate.mean >= p;
    point.path.push_back(step);
    if (options.on_capacity_step) options.on_capacity_step(point.path.back());
    return point.path.back();
  };

  std::optional<std::size_t> last_pass;
  std::optional<std::size_t> first_fail;
  std::size_t d = 2;
  while (true) {
    if (!evaluate(d).passed) {
      first_fail = d;
      break;
    }
    last_pass = d;
    if (d >= d_limit) {
      point.hit_limit = true;
      break;
    }
    d = std::min(2 * d, d_limit);
  }
  if (!last_pass) {
    point.below_floor = true;
    point.d_max = 1;
    point.m_max = 1.0;
    point.accuracy_at_max = point.path.front().estimate;
    return point;
  }
  std::size_t lo = *last_pass;
  if (first_fail) {
    std::size_t hi = *first_fail;
    while (hi - lo > 1) {
      const std::size_t mid = lo + (hi - lo) / 2;
      if (evaluate(mid).passed) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
  }
  point.d_max = lo;
  point.m_max = std::pow(static_cast<double>(lo), static_cast<double>(f));
  for (const auto& step : point.path) {
    if (step.d == lo) point.accuracy_at_max = step.estimate;
  }
  return point;
}

QuadraticFit fit_quadratic(std::span<const std::pair<double, double>> points) {
  std::vector<double> xs;
  for (const auto& [x, y] : points) xs.push_back(x);
  std::sort(xs.begin(), xs.end());
  if (std::unique(xs.begin(), xs.end()) - xs.begin() < 3) {
    throw std::invalid_argument("fit_quadratic: need at least 3 distinct N values");
  }
  const auto m = static_cast<Eigen::Index>(points.size());
  // Centre and scale N so the Vandermonde matrix stays well conditioned.
  const double shift = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  const double scale = std::max(std::abs(xs.front() - shift), std::abs(xs.back() - shift));
  Eigen::MatrixXd design(m, 3);
  Eigen::VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double u = (points[static_cast<std::size_t>(i)].first - shift) / scale;
    design(i, 0) = 1.0;
    design(i, 1) = u;
    design(i, 2) = u * u;
    y[i] = points[static_cast<std::size_t>(i)].second;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < 3) throw std::invalid_argument("fit_quadratic: rank-deficient design");
  const Eigen::Vector3d w = qr.solve(y);
  // Map back: w0 + w1 u + w2 u^2 with u = (N - shift)/scale.
  QuadraticFit fit;
  fit.c = w[2] / (scale * scale);
  fit.b = w[1] / scale - 2.0 * w[2] * shift / (scale * scale);
  fit.a = w[0] - w[1] * shift / scale + w[2] * shift * shift / (scale * scale);
  const Eigen::VectorXd residual = y - design * w;
  const double total = (y.array() - y.mean()).square().sum();
  fit.r_squared = total > 0.0 ? 1.0 - residual.squaredNorm() / total : 1.0;
  return fit;
}

PowerLawFit fit_power_law(std::span<const std::pair<double, double>> points) {
  if (points.size() < 2) throw std::invalid_argument("fit_power_law: need at least 2 points");
  const auto m = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd design(m, 2);
  Eigen::VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto [x, v] = points[static_cast<std::size_t>(i)];
    if (!(x > 0.0 && v > 0.0)) throw std::invalid_argument("fit_power_law: values must be positive");
    design(i, 0) = 1.0;
    design(i, 1) = std::log(x);
    y[i] = std::log(v);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < 2) throw std::invalid_argument("fit_power_law: need at least 2 distinct x values");
  const Eigen::Vector2d w = qr.solve(y);
  return {std::exp(w[0]), w[1]};
}

BipolarVector corrupt_composite(const BipolarVector& c, double zeta, Rng& rng) {
  if (!(zeta >= 0.0 && zeta <= 1.0)) throw std::invalid_argument("corrupt_composite: zeta must be in [0, 1]");
  // The small offset keeps floor(0.3 * 1000) from landing on 299.
  const auto count = std::min(c.size(), static_cast<std::size_t>(std::floor(zeta * static_cast<double>(c.size()) + 1e-9)));
  std::vector<std::size_t> all(c.size());
  std::iota(all.begin(), all.end(), 0);
  std::vector<std::size_t> chosen;
  chosen.reserve(count);
  std::sample(all.begin(), all.end(), std::back_inserter(chosen), count, rng);
  BipolarVector out = c;
  for (auto i : chosen) out.flip(i);
  return out;
}

std::vector<NoiseRow> noise_sweep(std::size_t n, std::size_t f, std::span<const std::size_t> d_grid,
                                  std::span<const double> zeta_grid, std::size_t trials, std::uint64_t seed,
                                  const NoiseOptions& options) {
  if (trials < 1) throw std::invalid_argument("noise_sweep: trials must be >= 1");
  ResonatorConfig config;
  config.weights = options.variant;
  std::vector<NoiseRow> rows;
  for (auto d : d_grid) {
    const std::vector<std::size_t> sizes(f, d);
    const double m = std::pow(static_cast<double>(d), static_cast<double>(f));
    config.max_iterations = std::max(iteration_cap(m, options.experiment.k_fraction), options.experiment.min_iterations);
    for (std::size_t z = 0; z < zeta_grid.size(); ++z) {
      const double zeta = zeta_grid[z];
      auto results = parallel_trials(trials, options.experiment.threads, [&](std::size_t t) {
        const auto problem = trial_problem(seed, n, sizes, t);
        auto rng = derive_rng(seed, Stream::Corruption, {static_cast<std::uint64_t>(d), z, t});
        const auto noisy = problem.with_composite(corrupt_composite(problem.composite(), zeta, rng));
        try {
          const auto result = run_resonator(noisy, config, derive_seed(seed, Stream::Solver, {t}));
          return Trial{total_accuracy(result, *problem.truth()), static_cast<double>(result.iterations), false};
        } catch (const SingularGramError&) {
          return Trial{0.0, 0.0, true};
        }
      });
      NoiseRow row;
      row.d = d;
      row.zeta = zeta;
      row.flipped = static_cast<std::size_t>(std::floor(zeta * static_cast<double>(n) + 1e-9));
      row.estimate = summarize_trials(results);
      rows.push_back(row);
    }
  }
  return rows;
}

std::uint64_t composite_checksum(const BipolarVector& c) {
  std::uint64_t h = 1469598103934665603ull;
  for (auto e : c.entries()) {
    h ^= static_cast<std::uint8_t>(e);
    h *= 1099511628211ull;
  }
  return h;
}

std::vector<SpeedSummary> speed_trace(std::size_t n, std::size_t f, std::size_t d, std::size_t trials,
                                      std::span<const SolverSpec> solvers, std::uint64_t seed,
                                      std::size_t resonator_iterations, std::size_t warmup) {
  using Clock = std::chrono::steady_clock;
  const std::vector<std::size_t> sizes(f, d);
  const std::size_t cap = std::max<std::size_t>(resonator_iterations, 1);
  std::vector<SpeedSummary> out(solvers.size());
  for (std::size_t s = 0; s < solvers.size(); ++s) {
    out[s].algorithm = solvers[s].name;
    // Warm-up problems use trial indices past the measured range.
    for (std::size_t w = 0; w < warmup; ++w) {
      const auto problem = trial_problem(seed, n, sizes, trials + w);
      try {
        solvers[s].solve(problem, derive_seed(seed, Stream::Solver, {trials + w}), cap);
      } catch (const NumericalError&) {
      }
    }
  }
  for (std::size_t t = 0; t < trials; ++t) {
    const auto problem = trial_problem(seed, n, sizes, t);
    const auto checksum = composite_checksum(problem.composite());
    for (std::size_t s = 0; s < solvers.size(); ++s) {
      SpeedTrial trial;
      trial.composite_checksum = checksum;
      const auto start = Clock::now();
      try {
        auto result = solvers[s].solve(problem, derive_seed(seed, Stream::Solver, {t}), cap);
        trial.seconds = std::chrono::duration<double>(Clock::now() - start).count();
        trial.accuracy = total_accuracy(result, *problem.truth());
        trial.iterations = result.iterations;
        trial.termination = result.termination.kind;
        trial.similarity_trace = std::move(result.similarity_trace);
        trial.linear_similarity_trace = std::move(result.linear_similarity_trace);
      } catch (const NumericalError&) {
        trial.seconds = std::chrono::duration<double>(Clock::now() - start).count();
        trial.aborted = true;
      }
      out[s].total_seconds += trial.seconds;
      out[s].total_iterations += trial.iterations;
      out[s].trials.push_back(std::move(trial));
    }
  }
  for (auto& summary : out) {
    std::vector<double> accuracies;
    for (const auto& t : summary.trials) accuracies.push_back(t.accuracy);
    summary.accuracy = summarize(accuracies);
    for (const auto& t : summary.trials) summary.accuracy.aborted += t.aborted;
    summary.accuracy.mean_iterations =
        trials ? static_cast<double>(summary.total_iterations) / static_cast<double>(trials) : 0.0;
    summary.seconds_per_iteration =
        summary.total_iterations ? summary.total_seconds / static_cast<double>(summary.total_iterations) : 0.0;
  }
  return out;
}

Eigen::VectorXd nudged_simplex_init(std::size_t d, double theta, std::size_t true_index, NudgeTarget target,
                                    Rng& rng) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument("nudged_simplex_init: theta must be in [0, 1]");
  if (true_index >= d) throw std::out_of_range("nudged_simplex_init: true index out of range");
  std::size_t i = true_index;
  if (target == NudgeTarget::RandomOtherVertex) {
    if (d < 2) throw std::invalid_argument("nudged_simplex_init: no other vertex when D = 1");
    i = std::uniform_int_distribution<std::size_t>(0, d - 2)(rng);
    if (i >= true_index) ++i;
  }
  Eigen::VectorXd a = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(d), (1.0 - theta) / static_cast<double>(d));
  a[static_cast<Eigen::Index>(i)] += theta;
  return a;
}

std::string to_string(NudgeTarget t) {
  return t == NudgeTarget::CorrectVertex ? "toward" : "away";
}

std::vector<BasinRow> basin_experiment(std::size_t n, std::size_t f, std::size_t d,
                                       std::span<const double> thetas, std::size_t trials,
                                       std::span<const Algorithm> algorithms, std::uint64_t seed,
                                       unsigned threads) {
  const std::vector<std::size_t> sizes(f, d);
  std::vector<BasinRow> rows;
  for (auto algorithm : algorithms) {
    if (algorithm != Algorithm::PGD && algorithm != Algorithm::MW) {
      throw std::invalid_argument("basin_experiment: only PGD (simplex) and MW are supported");
    }
    const auto config = BenchmarkConfig::defaults(algorithm, Constraint::Simplex);
    const std::string name = algorithm == Algorithm::PGD ? "pgd-simplex" : "mw";
    for (double theta : thetas) {
      for (auto target : {NudgeTarget::CorrectVertex, NudgeTarget::RandomOtherVertex}) {
        auto results = parallel_trials(trials, threads, [&](std::size_t t) {
          const auto problem = trial_problem(seed, n, sizes, t);
          auto rng = derive_rng(seed, Stream::Initialization, {t});
          std::vector<Eigen::VectorXd> init;
          for (std::size_t g = 0; g < f; ++g) {
            init.push_back(nudged_simplex_init(d, theta, (*problem.truth())[g], target, rng));
          }
          BenchmarkRunOptions opts;
          opts.initial_coeffs = std::move(init);
          try {
            const auto result = run_benchmark(problem, config, opts);
            return Trial{total_accuracy(result, *problem.truth()), static_cast<double>(result.iterations), false};
          } catch (const NumericalError&) {
            return Trial{0.0, 0.0, true};
          }
        });
        rows.push_back({name, theta, target, summarize_trials(results)});
      }
    }
  }
  return rows;
}

}  // namespace resonator
