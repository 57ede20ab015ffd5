#include "resonator/resonator.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <stdexcept>
#include <string_view>

namespace resonator {

void ResonatorConfig::validate() const {
  if (max_iterations < 1) throw std::invalid_argument("ResonatorConfig: max_iterations must be >= 1");
  if (cycle_buffer_length < 2) {
    throw std::invalid_argument("ResonatorConfig: cycle_buffer_length must be >= 2");
  }
}

namespace {

BipolarVector ols_update_real(const Codebook& codebook, const Eigen::VectorXd& input) {
  const Eigen::VectorXd coeffs = codebook.pseudoinverse() * input;
  const Eigen::VectorXd field = codebook.matrix() * coeffs;
  return sign_threshold(std::span<const double>(field.data(), static_cast<std::size_t>(field.size())));
}

}  // namespace

BipolarVector op_update(const Codebook& codebook, const BipolarVector& input) {
  if (input.size() != codebook.dimension()) throw std::invalid_argument("op_update: length mismatch");
  std::vector<std::int32_t> coeffs(codebook.size());
  std::vector<std::int32_t> field(codebook.dimension());
  codebook.correlate(input.pack(), coeffs);
  codebook.synthesize(coeffs, field);
  return sign_threshold(std::span<const std::int32_t>(field));
}

BipolarVector ols_update(const Codebook& codebook, const BipolarVector& input) {
  if (input.size() != codebook.dimension()) throw std::invalid_argument("ols_update: length mismatch");
  return ols_update_real(codebook, input.to_real());
}

SolverState::SolverState(std::vector<BipolarVector> est, std::size_t buffer_length)
    : estimates_(std::move(est)), capacity_(buffer_length) {
  if (capacity_ < 2) throw std::invalid_argument("SolverState: buffer length must be >= 2");
  if (estimates_.empty()) throw std::invalid_argument("SolverState: no estimates");
  const std::size_t n = estimates_.front().size();
  for (const auto& e : estimates_) {
    if (e.size() != n) throw std::invalid_argument("SolverState: estimates differ in length");
  }
  words_ = packed_words(n);
  packed_.assign(words_ * estimates_.size(), 0);
  for (std::size_t f = 0; f < estimates_.size(); ++f) {
    estimates_[f].pack_into(std::span<std::uint64_t>(packed_.data() + f * words_, words_));
  }
  ring_hash_.assign(capacity_, 0);
}

void SolverState::set_estimate(std::size_t f, BipolarVector v) {
  if (f >= estimates_.size()) throw std::out_of_range("SolverState: factor index");
  if (v.size() != estimates_[f].size()) throw std::invalid_argument("SolverState: estimate length");
  v.pack_into(std::span<std::uint64_t>(packed_.data() + f * words_, words_));
  estimates_[f] = std::move(v);
}

namespace {

std::uint64_t hash_words(std::span<const std::uint64_t> words) {
  std::string_view bytes(reinterpret_cast<const char*>(words.data()), words.size_bytes());
  return std::hash<std::string_view>{}(bytes);
}

// Writes sgn(field) into the bipolar estimate and its packed words.
void store_sign(std::span<const std::int32_t> field, BipolarVector& estimate,
                std::span<std::uint64_t> packed) {
  estimate.assign_sign_of(field);
  std::fill(packed.begin(), packed.end(), 0);
  for (std::size_t i = 0; i < field.size(); ++i) {
    packed[i >> 6] |= static_cast<std::uint64_t>(field[i] < 0) << (i & 63);
  }
}

}  // namespace

std::uint64_t SolverState::fingerprint() const { return hash_words(packed_); }

void SolverState::remember() {
  // The ring grows on demand; most solves stop long before it is full.
  if (ring_.size() < (next_ + 1) * packed_.size()) ring_.resize((next_ + 1) * packed_.size());
  std::copy(packed_.begin(), packed_.end(), ring_.begin() + static_cast<std::ptrdiff_t>(next_ * packed_.size()));
  ring_hash_[next_] = hash_words(packed_);
  next_ = (next_ + 1) % capacity_;
  count_ = std::min(count_ + 1, capacity_);
}

std::optional<std::size_t> SolverState::repeat_lag() const {
  if (count_ == 0) return std::nullopt;
  const auto hash = hash_words(packed_);
  const std::size_t size = packed_.size();
  for (std::size_t lag = 1; lag <= count_; ++lag) {
    const std::size_t slot = (next_ + capacity_ - lag) % capacity_;
    if (ring_hash_[slot] != hash) continue;
    const auto* snap = ring_.data() + slot * size;
    if (std::equal(packed_.begin(), packed_.end(), snap)) return lag;
  }
  return std::nullopt;
}

void resonator_sweep(SolverState& state, const FactorizationProblem& problem,
                     const ResonatorConfig& config, Rng* order_rng) {
  const std::size_t nf = problem.factors();
  if (state.factors() != nf) throw std::invalid_argument("resonator_sweep: wrong factor count");
  if (state.estimates_.front().size() != problem.dimension()) {
    throw std::invalid_argument("resonator_sweep: estimate length differs from N");
  }
  const std::size_t n = problem.dimension();
  const std::size_t words = state.words_;

  std::vector<std::size_t> order(nf);
  std::iota(order.begin(), order.end(), 0);
  if (config.randomize_order) {
    if (!order_rng) throw std::invalid_argument("resonator_sweep: randomize_order needs an rng");
    std::shuffle(order.begin(), order.end(), *order_rng);
  }

  // Under the synchronous convention every factor reads the packed state as it
  // was at the start of the sweep.
  std::vector<std::uint64_t> frozen;
  if (config.convention == UpdateConvention::Synchronous) frozen = state.packed_;
  const std::uint64_t* source =
      config.convention == UpdateConvention::Synchronous ? frozen.data() : state.packed_.data();

  const auto composite = problem.packed_composite();
  state.input_.resize(words);
  for (std::size_t f : order) {
    auto& input = state.input_;
    std::copy(composite.begin(), composite.end(), input.begin());
    for (std::size_t g = 0; g < nf; ++g) {
      if (g == f) continue;
      const std::uint64_t* other = source + g * words;
      for (std::size_t w = 0; w < words; ++w) input[w] ^= other[w];
    }
    const Codebook& cb = problem.codebook(f);
    std::span<std::uint64_t> target(state.packed_.data() + f * words, words);
    if (config.weights == WeightVariant::OuterProduct) {
      state.coeffs_.resize(cb.size());
      state.field_.resize(n);
      cb.correlate(input, state.coeffs_);
      cb.synthesize(state.coeffs_, state.field_);
      store_sign(state.field_, state.estimates_[f], target);
    } else {
      Eigen::VectorXd real(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) {
        real[static_cast<Eigen::Index>(i)] = (input[i >> 6] >> (i & 63)) & 1u ? -1.0 : 1.0;
      }
      state.set_estimate(f, ols_update_real(cb, real));
    }
  }
  ++state.iteration;
}

double composite_similarity(const SolverState& state, std::span<const std::uint64_t> packed_composite,
                            std::size_t n) {
  const std::size_t words = state.words_per_factor();
  std::size_t mismatches = 0;
  for (std::size_t w = 0; w < words; ++w) {
    std::uint64_t acc = packed_composite[w];
    for (std::size_t f = 0; f < state.factors(); ++f) acc ^= state.packed(f)[w];
    mismatches += static_cast<std::size_t>(std::popcount(acc));
  }
  const auto nn = static_cast<double>(n);
  return (nn - 2.0 * static_cast<double>(mismatches)) / nn;
}

double composite_similarity(std::span<const BipolarVector> estimates, const BipolarVector& composite) {
  if (estimates.empty()) throw std::invalid_argument("composite_similarity: no estimates");
  for (const auto& e : estimates) {
    if (e.size() != composite.size()) throw std::invalid_argument("composite_similarity: length mismatch");
  }
  SolverState state(std::vector<BipolarVector>(estimates.begin(), estimates.end()), 2);
  return composite_similarity(state, composite.pack(), composite.size());
}

SolveResult run_resonator(const FactorizationProblem& problem, const ResonatorConfig& config,
                          std::uint64_t seed) {
  std::vector<BipolarVector> initial;
  initial.reserve(problem.factors());
  for (const auto& cb : problem.codebooks()) initial.push_back(initial_superposition(cb));
  return run_resonator_from(problem, config, std::move(initial), seed);
}

SolveResult run_resonator_from(const FactorizationProblem& problem, const ResonatorConfig& config,
                               std::vector<BipolarVector> initial, std::uint64_t seed) {
  config.validate();
  if (initial.size() != problem.factors()) {
    throw std::invalid_argument("run_resonator_from: need one initial estimate per factor");
  }
  for (const auto& e : initial) {
    if (e.size() != problem.dimension()) throw std::invalid_argument("run_resonator_from: bad estimate length");
  }
  if (config.weights == WeightVariant::OrdinaryLeastSquares) {
    for (const auto& cb : problem.codebooks()) cb.pseudoinverse();
  }
  Rng order_rng(seed);
  SolverState state(std::move(initial), config.cycle_buffer_length);
  state.remember();
  const auto packed_composite = problem.packed_composite();

  SolveResult result;
  while (true) {
    resonator_sweep(state, problem, config, config.randomize_order ? &order_rng : nullptr);
    result.similarity_trace.push_back(composite_similarity(state, packed_composite, problem.dimension()));
    const auto lag = state.repeat_lag();
    if (lag && *lag == 1) {
      result.termination = {TerminationKind::FixedPoint, 0};
      break;
    }
    if (lag) {
      result.termination = {TerminationKind::LimitCycle, *lag};
      break;
    }
    if (state.iteration >= config.max_iterations) {
      result.termination = {TerminationKind::IterationCap, 0};
      break;
    }
    state.remember();
  }
  result.iterations = state.iteration;
  result.decoded.reserve(problem.factors());
  for (std::size_t f = 0; f < problem.factors(); ++f) {
    result.decoded.push_back(decode_unsigned(problem.codebook(f), state.estimate(f)));
  }
  return result;
}

}  // namespace resonator
