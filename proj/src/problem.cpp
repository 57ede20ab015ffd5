#include "resonator/problem.hpp"

#include <stdexcept>
#include <string>

namespace resonator {

FactorizationProblem::FactorizationProblem(std::vector<Codebook> codebooks, BipolarVector composite,
                                           std::optional<std::vector<std::size_t>> truth)
    : codebooks_(std::move(codebooks)),
      composite_(std::move(composite)),
      packed_composite_(composite_.pack()),
      truth_(std::move(truth)) {
  if (codebooks_.size() < 2) {
    throw std::invalid_argument("FactorizationProblem: need at least two factors");
  }
  for (const auto& cb : codebooks_) {
    if (cb.size() == 0) throw std::invalid_argument("FactorizationProblem: empty codebook");
    if (cb.dimension() != composite_.size()) {
      throw std::invalid_argument("FactorizationProblem: codebook dimension " +
                                  std::to_string(cb.dimension()) + " != composite length " +
                                  std::to_string(composite_.size()));
    }
  }
  if (truth_) {
    if (truth_->size() != codebooks_.size()) {
      throw std::invalid_argument("FactorizationProblem: truth has wrong number of indices");
    }
    BipolarVector product = BipolarVector::ones(composite_.size());
    for (std::size_t f = 0; f < codebooks_.size(); ++f) {
      product *= codebooks_[f].column((*truth_)[f]);
    }
    if (!(product == composite_)) {
      throw std::invalid_argument("FactorizationProblem: truth does not reproduce the composite");
    }
  }
}

std::vector<std::size_t> FactorizationProblem::codebook_sizes() const {
  std::vector<std::size_t> sizes;
  sizes.reserve(codebooks_.size());
  for (const auto& cb : codebooks_) sizes.push_back(cb.size());
  return sizes;
}

double FactorizationProblem::search_space_size() const {
  double m = 1.0;
  for (const auto& cb : codebooks_) m *= static_cast<double>(cb.size());
  return m;
}

FactorizationProblem FactorizationProblem::with_composite(BipolarVector composite) const {
  return FactorizationProblem(codebooks_, std::move(composite));
}

FactorizationProblem compose(std::vector<Codebook> codebooks, std::span<const std::size_t> indices) {
  if (indices.size() != codebooks.size()) {
    throw std::invalid_argument("compose: need exactly one index per codebook");
  }
  if (codebooks.empty()) throw std::invalid_argument("compose: no codebooks");
  BipolarVector composite = BipolarVector::ones(codebooks.front().dimension());
  for (std::size_t f = 0; f < codebooks.size(); ++f) {
    if (indices[f] >= codebooks[f].size()) {
      throw std::out_of_range("compose: index " + std::to_string(indices[f]) +
                              " out of range for codebook " + std::to_string(f) + " of size " +
                              std::to_string(codebooks[f].size()));
    }
    composite *= codebooks[f].column(indices[f]);
  }
  return FactorizationProblem(std::move(codebooks), std::move(composite),
                              std::vector<std::size_t>(indices.begin(), indices.end()));
}

FactorizationProblem sample_problem(Rng& rng, std::size_t n, std::span<const std::size_t> sizes) {
  std::vector<Codebook> codebooks;
  codebooks.reserve(sizes.size());
  for (auto d : sizes) codebooks.push_back(sample_codebook(rng, n, d));
  std::vector<std::size_t> indices;
  indices.reserve(sizes.size());
  for (auto d : sizes) indices.push_back(std::uniform_int_distribution<std::size_t>(0, d - 1)(rng));
  return compose(std::move(codebooks), indices);
}

}  // namespace resonator
