#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "resonator/resonator.hpp"

namespace resonator {

/// Standard normal CDF, 0.5 erfc(-x / sqrt 2).
double normal_cdf(double x);

/// Probability that one OP update flips a bit of a stored codevector when the
/// input is exactly that codevector. Requires N >= 2, D >= 2.
double hopfield_bitflip(std::size_t n, std::size_t d, bool self_connections = true);

/// Analytic bitflip probabilities for factor f (1-based) of a network whose
/// state starts at the ground truth.
struct PercolationRow {
  std::size_t factor = 0;
  double h = 0.0;        // Hopfield baseline
  double r_prime = 0.0;  // flip probability where no net flip arrives
  double r_dprime = 0.0; // flip probability where a net flip arrives
  double r = 0.0;        // total flip probability
  double n = 0.0;        // net flip probability passed to factor f+1
};

/// Rows for factors 1..F in order, starting from n_0 = 0.
std::vector<PercolationRow> percolated_chain(std::size_t n, std::span<const std::size_t> sizes);

struct FlipStatistic {
  double mean = 0.0;
  double standard_error = 0.0;
};

/// Monte-Carlo bitflip rates: each trial draws a fresh problem, sets the state
/// to the ground truth, runs one asynchronous sweep and records the fraction of
/// flipped bits per factor. Returns the mean and standard error per factor.
std::vector<FlipStatistic> empirical_bitflip(std::uint64_t seed, std::size_t n,
                                             std::span<const std::size_t> sizes, std::size_t trials,
                                             WeightVariant variant = WeightVariant::OuterProduct,
                                             unsigned threads = 1);

/// CSV with header f,N,D,h_f,r_f,n_f,empirical_mean,empirical_stderr.
void write_bitflip_csv(std::ostream& out, std::size_t n, std::span<const std::size_t> sizes,
                       std::span<const PercolationRow> rows, std::span<const FlipStatistic> empirical,
                       bool header = true);

}  // namespace resonator
