#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "resonator/bipolar.hpp"
#include "resonator/random.hpp"

namespace resonator {

/// Raised when the Gram matrix of a codebook is singular or too badly
/// conditioned to invert (duplicate or linearly dependent codevectors).
class SingularGramError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reciprocal condition estimate below which a Gram matrix counts as singular.
inline constexpr double kSingularRcond = 1e-12;

/// An immutable N x D matrix of bipolar codevectors.
///
/// Copies share storage. The Moore-Penrose pseudoinverse is computed at most
/// once per codebook (thread-safe) the first time pseudoinverse() is called.
class Codebook {
 public:
  Codebook() = default;
  explicit Codebook(std::span<const BipolarVector> columns);

  /// Builds from column-major entries (column j occupies [j*n, (j+1)*n)).
  static Codebook from_column_major(std::size_t n, std::size_t d,
                                    std::vector<std::int8_t> entries);

  std::size_t dimension() const noexcept { return storage_ ? storage_->n : 0; }
  std::size_t size() const noexcept { return storage_ ? storage_->d : 0; }

  BipolarVector column(std::size_t j) const;
  std::span<const std::int8_t> column_entries(std::size_t j) const;
  std::span<const std::uint64_t> packed_column(std::size_t j) const;
  std::size_t words_per_column() const noexcept { return storage_ ? storage_->words : 0; }

  /// The codevectors as an N x D real matrix.
  const Eigen::MatrixXd& matrix() const { return storage_->dense; }

  /// (X^T X)^{-1} X^T, D x N. Throws SingularGramError.
  const Eigen::MatrixXd& pseudoinverse() const;

  /// X^T v for bipolar v, computed with popcounts. `out` has length D.
  void correlate(std::span<const std::uint64_t> packed_input,
                 std::span<std::int32_t> out) const;

  /// X a with integer coefficients. `out` has length N. Intermediate sums are
  /// bounded by sum |a_j|, which must fit in 32 bits.
  void synthesize(std::span<const std::int32_t> coeffs, std::span<std::int32_t> out) const;

  friend bool operator==(const Codebook& a, const Codebook& b);

 private:
  struct Storage {
    std::size_t n = 0;
    std::size_t d = 0;
    std::size_t words = 0;
    std::vector<std::int8_t> signs;     // column-major
    std::vector<std::uint64_t> packed;  // column-major, `words` per column
    std::vector<std::int32_t> masks;    // column-major, -1 where the entry is -1, else 0
    std::vector<std::int16_t> masks16;  // same, narrow copy for small coefficient sums
    Eigen::MatrixXd dense;
  };
  struct PseudoinverseCache;

  void build(std::size_t n, std::size_t d, std::vector<std::int8_t> entries);

  std::shared_ptr<const Storage> storage_;
  std::shared_ptr<PseudoinverseCache> pinv_;
};

/// Unsigned nearest-neighbour decode result.
struct DecodedFactor {
  std::size_t index = 0;
  int sign = 1;
  double similarity = 0.0;
};

/// D codevectors of length N with i.i.d. Rademacher entries.
Codebook sample_codebook(Rng& rng, std::size_t n, std::size_t d);

/// (X^T X)^{-1} X^T via a Cholesky solve of the Gram system. Throws
/// SingularGramError when D > N, the factorization fails, or the reciprocal
/// condition estimate is below kSingularRcond.
Eigen::MatrixXd gram_pseudoinverse(const Codebook& codebook);

/// sgn of the sum of all codevectors, sgn(0) = +1.
BipolarVector initial_superposition(const Codebook& codebook);

/// Codevector with the largest |cosine similarity| to v; ties go to the
/// lowest index. A zero vector decodes to index 0 with similarity 0.
DecodedFactor decode_unsigned(const Codebook& codebook, std::span<const double> v);
DecodedFactor decode_unsigned(const Codebook& codebook, const BipolarVector& v);

}  // namespace resonator
