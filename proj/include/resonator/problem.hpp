#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "resonator/bipolar.hpp"
#include "resonator/codebook.hpp"
#include "resonator/random.hpp"

namespace resonator {

/// F codebooks and a composite c to be factored, optionally with the indices
/// that generated c. Immutable once built.
class FactorizationProblem {
 public:
  FactorizationProblem() = default;

  /// Validates F >= 2, a common dimension, and (when truth is given) that the
  /// product of the truth codevectors equals the composite exactly.
  FactorizationProblem(std::vector<Codebook> codebooks, BipolarVector composite,
                       std::optional<std::vector<std::size_t>> truth = std::nullopt);

  const std::vector<Codebook>& codebooks() const noexcept { return codebooks_; }
  const Codebook& codebook(std::size_t f) const { return codebooks_.at(f); }
  const BipolarVector& composite() const noexcept { return composite_; }
  /// composite() in the packed form of BipolarVector::pack().
  std::span<const std::uint64_t> packed_composite() const noexcept { return packed_composite_; }
  const std::optional<std::vector<std::size_t>>& truth() const noexcept { return truth_; }

  std::size_t factors() const noexcept { return codebooks_.size(); }
  std::size_t dimension() const noexcept { return composite_.size(); }
  std::vector<std::size_t> codebook_sizes() const;

  /// M, the number of candidate factorizations (as a double; it can be large).
  double search_space_size() const;

  /// Same codebooks, a different composite, no ground truth.
  FactorizationProblem with_composite(BipolarVector composite) const;

 private:
  std::vector<Codebook> codebooks_;
  BipolarVector composite_;
  std::vector<std::uint64_t> packed_composite_;
  std::optional<std::vector<std::size_t>> truth_;
};

/// Composite = Hadamard product of codebooks[f] column indices[f]; the truth is
/// stored. Throws std::out_of_range for a bad index.
FactorizationProblem compose(std::vector<Codebook> codebooks, std::span<const std::size_t> indices);

/// Fresh Rademacher codebooks of the given sizes and uniformly drawn truth
/// indices.
FactorizationProblem sample_problem(Rng& rng, std::size_t n, std::span<const std::size_t> sizes);

}  // namespace resonator
