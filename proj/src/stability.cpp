#include "resonator/stability.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#include "resonator/parallel.hpp"

namespace resonator {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace {

void require_sizes(std::size_t n, std::size_t d) {
  if (n < 2 || d < 2) throw std::invalid_argument("bitflip: need N >= 2 and D >= 2");
}

double spread(std::size_t n, std::size_t d) {
  return std::sqrt(static_cast<double>(n - 1) * static_cast<double>(d - 1));
}

}  // namespace

double hopfield_bitflip(std::size_t n, std::size_t d, bool self_connections) {
  require_sizes(n, d);
  const double nn = static_cast<double>(n);
  const double numerator = self_connections ? -nn - static_cast<double>(d) + 1.0 : -nn;
  return normal_cdf(numerator / spread(n, d));
}

std::vector<PercolationRow> percolated_chain(std::size_t n, std::span<const std::size_t> sizes) {
  std::vector<PercolationRow> rows;
  rows.reserve(sizes.size());
  const double nn = static_cast<double>(n);
  double n_prev = 0.0;
  for (std::size_t f = 0; f < sizes.size(); ++f) {
    const std::size_t d = sizes[f];
    require_sizes(n, d);
    const double s = spread(n, d);
    const double dm1 = static_cast<double>(d - 1);
    PercolationRow row;
    row.factor = f + 1;
    row.h = hopfield_bitflip(n, d, true);
    row.r_prime = normal_cdf((-nn * (1.0 - 2.0 * n_prev) - dm1) / s);
    row.r_dprime = normal_cdf((-nn * (1.0 - 2.0 * n_prev) + dm1) / s);
    row.r = row.r_prime * (1.0 - n_prev) + row.r_dprime * n_prev;
    row.n = row.r_prime * (1.0 - n_prev) + (1.0 - row.r_dprime) * n_prev;
    rows.push_back(row);
    n_prev = row.n;
  }
  return rows;
}

std::vector<FlipStatistic> empirical_bitflip(std::uint64_t seed, std::size_t n,
                                             std::span<const std::size_t> sizes, std::size_t trials,
                                             WeightVariant variant, unsigned threads) {
  if (trials < 1) throw std::invalid_argument("empirical_bitflip: trials must be >= 1");
  const std::size_t nf = sizes.size();
  ResonatorConfig config;
  config.weights = variant;
  config.convention = UpdateConvention::Asynchronous;

  auto fractions = parallel_trials(trials, threads, [&](std::size_t t) {
    auto rng = derive_rng(seed, Stream::Problem, {static_cast<std::uint64_t>(n), t});
    const auto problem = sample_problem(rng, n, sizes);
    std::vector<BipolarVector> truth;
    for (std::size_t f = 0; f < nf; ++f) truth.push_back(problem.codebook(f).column((*problem.truth())[f]));
    SolverState state(truth, 2);
    resonator_sweep(state, problem, config);
    std::vector<double> out(nf);
    for (std::size_t f = 0; f < nf; ++f) {
      out[f] = static_cast<double>(hamming_distance(state.estimate(f), truth[f])) / static_cast<double>(n);
    }
    return out;
  });

  std::vector<FlipStatistic> stats(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    double sum = 0.0;
    for (const auto& tr : fractions) sum += tr[f];
    const double mean = sum / static_cast<double>(trials);
    double ss = 0.0;
    for (const auto& tr : fractions) ss += (tr[f] - mean) * (tr[f] - mean);
    const double var = trials > 1 ? ss / static_cast<double>(trials - 1) : 0.0;
    stats[f] = {mean, std::sqrt(var / static_cast<double>(trials))};
  }
  return stats;
}

void write_bitflip_csv(std::ostream& out, std::size_t n, std::span<const std::size_t> sizes,
                       std::span<const PercolationRow> rows, std::span<const FlipStatistic> empirical,
                       bool header) {
  if (header) out << "f,N,D,h_f,r_f,n_f,empirical_mean,empirical_stderr\n";
  out << std::setprecision(10);
  for (std::size_t f = 0; f < rows.size(); ++f) {
    out << rows[f].factor << ',' << n << ',' << sizes[f] << ',' << rows[f].h << ',' << rows[f].r << ','
        << rows[f].n << ',';
    if (f < empirical.size()) {
      out << empirical[f].mean << ',' << empirical[f].standard_error;
    } else {
      out << ',';
    }
    out << '\n';
  }
}

}  // namespace resonator
