#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "resonator/codebook.hpp"

namespace resonator {

enum class TerminationKind { FixedPoint, LimitCycle, IterationCap };

struct Termination {
  TerminationKind kind = TerminationKind::IterationCap;
  std::size_t cycle_length = 0;  // set for LimitCycle only
};

/// Outcome of one solve, shared by the resonator and the benchmark optimizers.
struct SolveResult {
  std::vector<DecodedFactor> decoded;
  std::size_t iterations = 0;
  Termination termination;
  /// cos(c_hat, c) after each iteration; c_hat uses bipolar estimates.
  std::vector<double> similarity_trace;
  /// Benchmarks only: the same similarity with the raw linear estimates.
  std::vector<double> linear_similarity_trace;

  std::vector<std::size_t> indices() const {
    std::vector<std::size_t> out;
    out.reserve(decoded.size());
    for (const auto& d : decoded) out.push_back(d.index);
    return out;
  }
};

inline std::string to_string(TerminationKind kind) {
  switch (kind) {
    case TerminationKind::FixedPoint: return "fixed_point";
    case TerminationKind::LimitCycle: return "limit_cycle";
    case TerminationKind::IterationCap: return "iteration_cap";
  }
  return "unknown";
}

}  // namespace resonator
