#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "resonator/benchmarks.hpp"
#include "resonator/problem.hpp"
#include "resonator/random.hpp"
#include "resonator/resonator.hpp"
#include "resonator/solve_result.hpp"

namespace resonator {

/// A named solver as used by the experiment protocols. `iteration_cap` is
/// honoured by the resonator solvers only; the benchmarks run until they
/// converge or hit their own safety cap.
struct SolverSpec {
  std::string name;
  bool uses_iteration_cap = false;
  std::function<SolveResult(const FactorizationProblem&, std::uint64_t seed, std::size_t iteration_cap)>
      solve;
};

/// resonator-op, resonator-ols, als, ista, fista, pgd-simplex, pgd-l1, mw, msc.
std::vector<std::string> solver_names();
/// The six benchmarks, with PGD on the simplex.
std::vector<std::string> benchmark_names();
/// Throws std::invalid_argument for an unknown name.
SolverSpec make_solver(const std::string& name);
SolverSpec make_solver(const std::string& name, const ResonatorConfig& resonator,
                       std::optional<BenchmarkConfig> benchmark = std::nullopt);

/// Fraction of factors decoded to the true index; signs are ignored.
double total_accuracy(const SolveResult& result, std::span<const std::size_t> truth);

/// ceil(k_fraction * M), at least 1.
std::size_t iteration_cap(double search_space_size, double k_fraction);

double balance_ratio(std::span<const std::size_t> sizes);

struct AccuracyEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t trials = 0;
  std::size_t aborted = 0;  // trials whose solver threw; counted as accuracy 0
  double mean_iterations = 0.0;
};

/// Mean and standard error of a sample.
AccuracyEstimate summarize(std::span<const double> accuracies);

/// Problem for trial t of an experiment. Depends only on (seed, N, sizes, t),
/// so different solvers see the same instances.
FactorizationProblem trial_problem(std::uint64_t seed, std::size_t n, std::span<const std::size_t> sizes,
                                   std::size_t trial);

struct CapacityStep;

struct ExperimentOptions {
  double k_fraction = 0.001;
  /// Floor on the iteration cap. ceil(k_fraction M) is 1 for M <= 1000, which
  /// cuts solves off before their first few sweeps.
  std::size_t min_iterations = 100;
  unsigned threads = 0;  // 0 = all cores
  /// Capacity search only: run trials in fixed blocks of this size and stop a
  /// point once its accumulated error already rules out reaching p. The
  /// estimate then covers fewer trials. 0 runs every point in full.
  std::size_t early_stop_block = 50;
  /// Called after every capacity-search evaluation, in evaluation order.
  std::function<void(const CapacityStep&)> on_capacity_step;
};

/// Mean total accuracy of `solver` on `trials` fresh problems with the given
/// codebook sizes and an iteration cap of max(ceil(k_fraction M), min_iterations).
AccuracyEstimate accuracy_at(std::size_t n, std::span<const std::size_t> sizes, std::size_t trials,
                             const SolverSpec& solver, std::uint64_t seed,
                             const ExperimentOptions& options = {});

struct AccuracyRow {
  std::size_t d = 0;
  double m = 0.0;
  AccuracyEstimate estimate;
};

std::vector<AccuracyRow> accuracy_curve(std::size_t n, std::size_t f, std::span<const std::size_t> d_grid,
                                        std::size_t trials, const SolverSpec& solver, std::uint64_t seed,
                                        const ExperimentOptions& options = {});

struct CapacityStep {
  std::size_t d = 0;
  AccuracyEstimate estimate;
  bool passed = false;
};

struct CapacityPoint {
  std::size_t n = 0;
  std::size_t f = 0;
  double p = 0.99;
  double k_fraction = 0.001;
  std::size_t trials = 0;
  std::size_t d_max = 1;
  double m_max = 1.0;
  AccuracyEstimate accuracy_at_max;
  /// Accuracy stayed below p even at D = 2.
  bool below_floor = false;
  /// The doubling phase reached d_limit without failing.
  bool hit_limit = false;
  std::vector<CapacityStep> path;  // in evaluation order
};

/// Largest balanced D with accuracy >= p: doubling from D = 2 until the bar is
/// missed, then integer bisection between the last pass and the first miss.
CapacityPoint find_operational_capacity(std::size_t n, std::size_t f, double p, std::size_t trials,
                                        const SolverSpec& solver, std::uint64_t seed,
                                        const ExperimentOptions& options = {},
                                        std::size_t d_limit = 1u << 16);

struct QuadraticFit {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double r_squared = 0.0;
};

/// Least-squares M = a + b N + c N^2. Needs at least 3 distinct N.
QuadraticFit fit_quadratic(std::span<const std::pair<double, double>> points);

struct PowerLawFit {
  double coefficient = 0.0;
  double exponent = 0.0;
};

/// y = coefficient * x^exponent by least squares in log-log space. Report only.
PowerLawFit fit_power_law(std::span<const std::pair<double, double>> points);

/// Flips exactly floor(zeta N) distinct uniformly chosen entries.
BipolarVector corrupt_composite(const BipolarVector& c, double zeta, Rng& rng);

struct NoiseRow {
  std::size_t d = 0;
  double zeta = 0.0;
  std::size_t flipped = 0;
  AccuracyEstimate estimate;
};

struct NoiseOptions {
  ExperimentOptions experiment;
  WeightVariant variant = WeightVariant::OuterProduct;
};

/// Resonator accuracy on corrupted composites, scored against the truth of the
/// clean composite. The same problems are used at every zeta.
std::vector<NoiseRow> noise_sweep(std::size_t n, std::size_t f, std::span<const std::size_t> d_grid,
                                  std::span<const double> zeta_grid, std::size_t trials, std::uint64_t seed,
                                  const NoiseOptions& options = {});

struct SpeedTrial {
  double accuracy = 0.0;
  std::size_t iterations = 0;
  double seconds = 0.0;
  std::uint64_t composite_checksum = 0;
  bool aborted = false;
  TerminationKind termination = TerminationKind::IterationCap;
  std::vector<double> similarity_trace;
  std::vector<double> linear_similarity_trace;
};

struct SpeedSummary {
  std::string algorithm;
  AccuracyEstimate accuracy;
  double total_seconds = 0.0;
  std::size_t total_iterations = 0;
  double seconds_per_iteration = 0.0;
  std::vector<SpeedTrial> trials;
};

/// FNV-1a over the composite entries.
std::uint64_t composite_checksum(const BipolarVector& c);

/// Runs every solver on the same `trials` seeded problems, single-threaded,
/// timing each solve with a monotonic clock. Solvers take turns on each
/// problem so load changes on the machine hit all of them alike. `warmup`
/// extra problems per solver are solved first and discarded. Resonators are
/// capped at `resonator_iterations` sweeps.
std::vector<SpeedSummary> speed_trace(std::size_t n, std::size_t f, std::size_t d, std::size_t trials,
                                      std::span<const SolverSpec> solvers, std::uint64_t seed,
                                      std::size_t resonator_iterations = 1000, std::size_t warmup = 3);

enum class NudgeTarget { CorrectVertex, RandomOtherVertex };

/// theta e_i + (1 - theta)/D 1, with i the true index or a uniformly chosen
/// other index (drawn from rng).
Eigen::VectorXd nudged_simplex_init(std::size_t d, double theta, std::size_t true_index, NudgeTarget target,
                                    Rng& rng);

struct BasinRow {
  std::string algorithm;
  double theta = 0.0;
  NudgeTarget target = NudgeTarget::CorrectVertex;
  AccuracyEstimate estimate;
};

/// PGD-simplex and/or MW started from nudged_simplex_init on every factor.
/// The same problems and the same "other" vertices are used for every theta.
std::vector<BasinRow> basin_experiment(std::size_t n, std::size_t f, std::size_t d,
                                       std::span<const double> thetas, std::size_t trials,
                                       std::span<const Algorithm> algorithms, std::uint64_t seed,
                                       unsigned threads = 0);

std::string to_string(NudgeTarget t);

}  // namespace resonator
