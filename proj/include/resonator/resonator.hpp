#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "resonator/bipolar.hpp"
#include "resonator/codebook.hpp"
#include "resonator/problem.hpp"
#include "resonator/random.hpp"
#include "resonator/solve_result.hpp"

namespace resonator {

enum class WeightVariant { OuterProduct, OrdinaryLeastSquares };

/// Asynchronous: factor f sees the values its predecessors computed earlier in
/// the same sweep. Synchronous: every factor sees the previous sweep's values.
enum class UpdateConvention { Asynchronous, Synchronous };

struct ResonatorConfig {
  WeightVariant weights = WeightVariant::OuterProduct;
  UpdateConvention convention = UpdateConvention::Asynchronous;
  std::size_t max_iterations = 1000;
  std::size_t cycle_buffer_length = 64;
  /// Shuffle the factor order every sweep (seeded). Off by default.
  bool randomize_order = false;

  /// Throws std::invalid_argument for max_iterations < 1 or a buffer < 2.
  void validate() const;
};

/// sgn(X X^T v), with popcount correlation and integer accumulation.
BipolarVector op_update(const Codebook& codebook, const BipolarVector& input);

/// sgn(X X^+ v). Uses (and if needed computes) the codebook's cached
/// pseudoinverse, so it can throw SingularGramError.
BipolarVector ols_update(const Codebook& codebook, const BipolarVector& input);

/// Factor estimates plus a short history of past states for fixed point and
/// limit cycle detection. Keeps a bit-packed copy of the estimates in sync.
class SolverState {
 public:
  SolverState() = default;
  explicit SolverState(std::vector<BipolarVector> estimates, std::size_t buffer_length = 64);

  const std::vector<BipolarVector>& estimates() const noexcept { return estimates_; }
  const BipolarVector& estimate(std::size_t f) const { return estimates_.at(f); }
  void set_estimate(std::size_t f, BipolarVector v);

  std::size_t factors() const noexcept { return estimates_.size(); }
  std::size_t words_per_factor() const noexcept { return words_; }
  std::span<const std::uint64_t> packed(std::size_t f) const {
    return {packed_.data() + f * words_, words_};
  }

  std::size_t iteration = 0;

  /// 64-bit hash of the packed concatenated estimates.
  std::uint64_t fingerprint() const;

  /// Records the current estimates in the history ring buffer.
  void remember();

  /// Smallest L >= 1 such that the current estimates equal those recorded L
  /// snapshots ago (1 = the previous snapshot). Hash hits are confirmed by a
  /// full comparison.
  std::optional<std::size_t> repeat_lag() const;

  std::size_t history_size() const noexcept { return count_; }

 private:
  friend void resonator_sweep(SolverState&, const FactorizationProblem&, const ResonatorConfig&, Rng*);

  std::vector<BipolarVector> estimates_;
  std::vector<std::uint64_t> packed_;  // F blocks of words_
  std::size_t words_ = 0;

  std::vector<std::uint64_t> ring_;  // capacity_ snapshots of packed_
  std::vector<std::uint64_t> ring_hash_;
  std::size_t capacity_ = 64;
  std::size_t count_ = 0;
  std::size_t next_ = 0;

  // scratch for the sweep
  std::vector<std::uint64_t> input_;
  std::vector<std::int32_t> coeffs_;
  std::vector<std::int32_t> field_;
};

/// One full sweep over the factors. Increments state.iteration but does not
/// touch the history. `order_rng` is required when config.randomize_order.
void resonator_sweep(SolverState& state, const FactorizationProblem& problem,
                     const ResonatorConfig& config, Rng* order_rng = nullptr);

/// cos(c_hat, c) where c_hat is the product of the estimates.
double composite_similarity(std::span<const BipolarVector> estimates, const BipolarVector& composite);
double composite_similarity(const SolverState& state, std::span<const std::uint64_t> packed_composite,
                            std::size_t n);

/// Initializes every factor with initial_superposition and iterates to a fixed
/// point, a limit cycle or the iteration cap, then decodes every factor.
SolveResult run_resonator(const FactorizationProblem& problem, const ResonatorConfig& config,
                          std::uint64_t seed = 0);

/// Same loop from caller-supplied initial estimates.
SolveResult run_resonator_from(const FactorizationProblem& problem, const ResonatorConfig& config,
                               std::vector<BipolarVector> initial, std::uint64_t seed = 0);

}  // namespace resonator
