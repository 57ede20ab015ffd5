#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace resonator {

/// A vector with every entry exactly -1 or +1.
///
/// Entries are stored one per byte; bit-packed copies for popcount kernels are
/// produced on demand with pack(). Every mutating member keeps the entries
/// bipolar.
class BipolarVector {
 public:
  BipolarVector() = default;

  /// Throws std::invalid_argument if any entry is not -1 or +1.
  explicit BipolarVector(std::vector<std::int8_t> entries);

  static BipolarVector ones(std::size_t n);
  static BipolarVector from_ints(std::span<const int> values);

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::int8_t operator[](std::size_t i) const { return entries_[i]; }
  std::span<const std::int8_t> entries() const noexcept { return entries_; }

  void flip(std::size_t i) { entries_[i] = static_cast<std::int8_t>(-entries_[i]); }

  /// Overwrites this vector with sgn(v), using sgn(0) = +1.
  void assign_sign_of(std::span<const double> v);
  void assign_sign_of(std::span<const std::int32_t> v);

  /// Entrywise product in place.
  BipolarVector& operator*=(const BipolarVector& other);

  BipolarVector operator-() const;

  /// Bit i of the packed form is set when entry i is -1; trailing bits of the
  /// last word are zero. XOR of two packed vectors is their Hadamard product.
  std::vector<std::uint64_t> pack() const;
  void pack_into(std::span<std::uint64_t> words) const;

  Eigen::VectorXd to_real() const;
  std::vector<int> to_ints() const;

  friend bool operator==(const BipolarVector&, const BipolarVector&) = default;

 private:
  std::vector<std::int8_t> entries_;
};

inline std::size_t packed_words(std::size_t n) { return (n + 63) / 64; }

/// sgn with the tie rule sgn(0) = +1.
BipolarVector sign_threshold(std::span<const double> v);
BipolarVector sign_threshold(std::span<const std::int32_t> v);

/// Entrywise product. Throws std::invalid_argument on length mismatch.
BipolarVector hadamard(const BipolarVector& x, const BipolarVector& y);

/// Hadamard product of every estimate except the one at `skip` (0-based).
/// The caller stages the estimates for its update convention.
BipolarVector others_product(std::span<const BipolarVector> estimates, std::size_t skip);

/// Number of positions where x and y differ.
std::size_t hamming_distance(const BipolarVector& x, const BipolarVector& y);

/// <x, y> / (|x| |y|). Throws std::invalid_argument on length mismatch or a
/// zero-norm argument.
double cosine_similarity(std::span<const double> x, std::span<const double> y);
double cosine_similarity(const BipolarVector& x, const BipolarVector& y);

}  // namespace resonator
