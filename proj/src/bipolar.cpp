#include "resonator/bipolar.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace resonator {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": length mismatch (" +
                                std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

}  // namespace

BipolarVector::BipolarVector(std::vector<std::int8_t> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i] != 1 && entries_[i] != -1) {
      throw std::invalid_argument("BipolarVector: entry " + std::to_string(i) +
                                  " is not +1 or -1");
    }
  }
}

BipolarVector BipolarVector::ones(std::size_t n) {
  BipolarVector v;
  v.entries_.assign(n, 1);
  return v;
}

BipolarVector BipolarVector::from_ints(std::span<const int> values) {
  std::vector<std::int8_t> entries(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] != 1 && values[i] != -1) {
      throw std::invalid_argument("BipolarVector: entry " + std::to_string(i) +
                                  " is not +1 or -1");
    }
    entries[i] = static_cast<std::int8_t>(values[i]);
  }
  BipolarVector v;
  v.entries_ = std::move(entries);
  return v;
}

void BipolarVector::assign_sign_of(std::span<const double> v) {
  entries_.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) entries_[i] = v[i] < 0.0 ? -1 : 1;
}

void BipolarVector::assign_sign_of(std::span<const std::int32_t> v) {
  entries_.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) entries_[i] = v[i] < 0 ? -1 : 1;
}

BipolarVector& BipolarVector::operator*=(const BipolarVector& other) {
  require_same_length(size(), other.size(), "hadamard");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    entries_[i] = static_cast<std::int8_t>(entries_[i] * other.entries_[i]);
  }
  return *this;
}

BipolarVector BipolarVector::operator-() const {
  BipolarVector out = *this;
  for (auto& e : out.entries_) e = static_cast<std::int8_t>(-e);
  return out;
}

std::vector<std::uint64_t> BipolarVector::pack() const {
  std::vector<std::uint64_t> words(packed_words(size()));
  pack_into(words);
  return words;
}

void BipolarVector::pack_into(std::span<std::uint64_t> words) const {
  if (words.size() < packed_words(size())) {
    throw std::invalid_argument("pack_into: output too short");
  }
  std::fill(words.begin(), words.end(), 0);
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i] < 0) words[i >> 6] |= std::uint64_t{1} << (i & 63);
  }
}

Eigen::VectorXd BipolarVector::to_real() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
  for (std::size_t i = 0; i < size(); ++i) out[static_cast<Eigen::Index>(i)] = entries_[i];
  return out;
}

std::vector<int> BipolarVector::to_ints() const {
  return std::vector<int>(entries_.begin(), entries_.end());
}

BipolarVector sign_threshold(std::span<const double> v) {
  BipolarVector out;
  out.assign_sign_of(v);
  return out;
}

BipolarVector sign_threshold(std::span<const std::int32_t> v) {
  BipolarVector out;
  out.assign_sign_of(v);
  return out;
}

BipolarVector hadamard(const BipolarVector& x, const BipolarVector& y) {
  BipolarVector out = x;
  out *= y;
  return out;
}

BipolarVector others_product(std::span<const BipolarVector> estimates, std::size_t skip) {
  if (estimates.empty()) throw std::invalid_argument("others_product: no estimates");
  if (skip >= estimates.size()) throw std::out_of_range("others_product: factor index");
  BipolarVector out = BipolarVector::ones(estimates.front().size());
  for (std::size_t g = 0; g < estimates.size(); ++g) {
    if (g != skip) out *= estimates[g];
  }
  return out;
}

std::size_t hamming_distance(const BipolarVector& x, const BipolarVector& y) {
  require_same_length(x.size(), y.size(), "hamming_distance");
  std::size_t count = 0;
  auto a = x.entries();
  auto b = y.entries();
  for (std::size_t i = 0; i < a.size(); ++i) count += a[i] != b[i];
  return count;
}

double cosine_similarity(std::span<const double> x, std::span<const double> y) {
  require_same_length(x.size(), y.size(), "cosine_similarity");
  if (x.empty()) throw std::invalid_argument("cosine_similarity: empty input");
  double dot = 0.0, xx = 0.0, yy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += x[i] * y[i];
    xx += x[i] * x[i];
    yy += y[i] * y[i];
  }
  if (xx == 0.0 || yy == 0.0) throw std::invalid_argument("cosine_similarity: zero-norm input");
  return dot / (std::sqrt(xx) * std::sqrt(yy));
}

double cosine_similarity(const BipolarVector& x, const BipolarVector& y) {
  require_same_length(x.size(), y.size(), "cosine_similarity");
  if (x.empty()) throw std::invalid_argument("cosine_similarity: empty input");
  const auto n = static_cast<double>(x.size());
  return (n - 2.0 * static_cast<double>(hamming_distance(x, y))) / n;
}

}  // namespace resonator
