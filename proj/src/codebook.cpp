#include "resonator/codebook.hpp"

#include <cmath>
#include <exception>
#include <mutex>
#include <string>

#include <Eigen/Cholesky>

namespace resonator {

struct Codebook::PseudoinverseCache {
  std::once_flag once;
  Eigen::MatrixXd value;
};

Codebook::Codebook(std::span<const BipolarVector> columns) {
  if (columns.empty()) throw std::invalid_argument("Codebook: no columns");
  const std::size_t n = columns.front().size();
  if (n == 0) throw std::invalid_argument("Codebook: zero-length codevectors");
  std::vector<std::int8_t> entries;
  entries.reserve(n * columns.size());
  for (const auto& col : columns) {
    if (col.size() != n) throw std::invalid_argument("Codebook: columns differ in length");
    auto e = col.entries();
    entries.insert(entries.end(), e.begin(), e.end());
  }
  build(n, columns.size(), std::move(entries));
}

Codebook Codebook::from_column_major(std::size_t n, std::size_t d,
                                     std::vector<std::int8_t> entries) {
  if (n == 0 || d == 0) throw std::invalid_argument("Codebook: empty shape");
  if (entries.size() != n * d) throw std::invalid_argument("Codebook: entry count != n*d");
  for (auto e : entries) {
    if (e != 1 && e != -1) throw std::invalid_argument("Codebook: entry is not +1 or -1");
  }
  Codebook cb;
  cb.build(n, d, std::move(entries));
  return cb;
}

void Codebook::build(std::size_t n, std::size_t d, std::vector<std::int8_t> entries) {
  auto s = std::make_shared<Storage>();
  s->n = n;
  s->d = d;
  s->words = packed_words(n);
  s->signs = std::move(entries);
  s->packed.assign(s->words * d, 0);
  s->masks.resize(n * d);
  s->masks16.resize(n * d);
  s->dense.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t j = 0; j < d; ++j) {
    const std::int8_t* col = s->signs.data() + j * n;
    std::uint64_t* words = s->packed.data() + j * s->words;
    for (std::size_t i = 0; i < n; ++i) {
      if (col[i] < 0) words[i >> 6] |= std::uint64_t{1} << (i & 63);
      s->masks[j * n + i] = col[i] < 0 ? -1 : 0;
      s->masks16[j * n + i] = static_cast<std::int16_t>(col[i] < 0 ? -1 : 0);
      s->dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
    }
  }
  storage_ = std::move(s);
  pinv_ = std::make_shared<PseudoinverseCache>();
}

BipolarVector Codebook::column(std::size_t j) const {
  auto e = column_entries(j);
  return BipolarVector(std::vector<std::int8_t>(e.begin(), e.end()));
}

std::span<const std::int8_t> Codebook::column_entries(std::size_t j) const {
  if (j >= size()) throw std::out_of_range("Codebook: column index " + std::to_string(j));
  return {storage_->signs.data() + j * storage_->n, storage_->n};
}

std::span<const std::uint64_t> Codebook::packed_column(std::size_t j) const {
  if (j >= size()) throw std::out_of_range("Codebook: column index " + std::to_string(j));
  return {storage_->packed.data() + j * storage_->words, storage_->words};
}

const Eigen::MatrixXd& Codebook::pseudoinverse() const {
  if (!storage_) throw std::logic_error("Codebook: empty");
  std::call_once(pinv_->once, [this] { pinv_->value = gram_pseudoinverse(*this); });
  return pinv_->value;
}

namespace {

#if defined(__GNUC__) && defined(__x86_64__) && defined(__ELF__)
#define RESONATOR_POPCNT_CLONES __attribute__((target_clones("popcnt", "default")))
#else
#define RESONATOR_POPCNT_CLONES
#endif

// Hamming distances between one packed vector and d packed columns.
RESONATOR_POPCNT_CLONES
void mismatch_counts(const std::uint64_t* columns, std::size_t words, std::size_t d,
                     const std::uint64_t* input, std::int32_t* out) {
  for (std::size_t j = 0; j < d; ++j) {
    const std::uint64_t* col = columns + j * words;
    std::int32_t count = 0;
    for (std::size_t w = 0; w < words; ++w) count += __builtin_popcountll(col[w] ^ input[w]);
    out[j] = count;
  }
}

}  // namespace

void Codebook::correlate(std::span<const std::uint64_t> packed_input,
                         std::span<std::int32_t> out) const {
  const auto& s = *storage_;
  const auto n = static_cast<std::int32_t>(s.n);
  mismatch_counts(s.packed.data(), s.words, s.d, packed_input.data(), out.data());
  for (std::size_t j = 0; j < s.d; ++j) out[j] = n - 2 * out[j];
}

namespace {

// y = sum_j a_j x_j = sum(a) - 2 sum_j (a_j & m_j), where m_j is -1 on the -1
// entries of x_j. Four columns per pass over y.
template <class T>
void masked_synthesize(const T* masks, std::size_t n, std::size_t d, const std::int32_t* coeffs,
                       T* __restrict y) {
  std::fill(y, y + n, T{0});
  std::size_t j = 0;
  for (; j + 4 <= d; j += 4) {
    const T a0 = static_cast<T>(coeffs[j]), a1 = static_cast<T>(coeffs[j + 1]);
    const T a2 = static_cast<T>(coeffs[j + 2]), a3 = static_cast<T>(coeffs[j + 3]);
    const T* __restrict m0 = masks + j * n;
    const T* __restrict m1 = m0 + n;
    const T* __restrict m2 = m1 + n;
    const T* __restrict m3 = m2 + n;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<T>(y[i] + ((a0 & m0[i]) + (a1 & m1[i]) + (a2 & m2[i]) + (a3 & m3[i])));
    }
  }
  for (; j < d; ++j) {
    const T a = static_cast<T>(coeffs[j]);
    const T* __restrict m = masks + j * n;
    for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<T>(y[i] + (a & m[i]));
  }
}

}  // namespace

void Codebook::synthesize(std::span<const std::int32_t> coeffs,
                          std::span<std::int32_t> out) const {
  const auto& s = *storage_;
  std::int64_t total = 0;
  std::int64_t bound = 0;
  for (std::size_t j = 0; j < s.d; ++j) {
    total += coeffs[j];
    bound += coeffs[j] < 0 ? -std::int64_t{coeffs[j]} : coeffs[j];
  }
  const auto t = static_cast<std::int32_t>(total);
  // Every partial sum is bounded by sum |a_j|, so 16-bit lanes are exact when
  // that bound fits; they process twice as many entries per instruction.
  if (bound <= INT16_MAX) {
    thread_local std::vector<std::int16_t> narrow;
    narrow.resize(s.n);
    masked_synthesize<std::int16_t>(s.masks16.data(), s.n, s.d, coeffs.data(), narrow.data());
    for (std::size_t i = 0; i < s.n; ++i) out[i] = t - 2 * narrow[i];
  } else {
    masked_synthesize<std::int32_t>(s.masks.data(), s.n, s.d, coeffs.data(), out.data());
    for (std::size_t i = 0; i < s.n; ++i) out[i] = t - 2 * out[i];
  }
}

bool operator==(const Codebook& a, const Codebook& b) {
  if (a.storage_ == b.storage_) return true;
  if (!a.storage_ || !b.storage_) return false;
  return a.storage_->n == b.storage_->n && a.storage_->d == b.storage_->d &&
         a.storage_->signs == b.storage_->signs;
}

Codebook sample_codebook(Rng& rng, std::size_t n, std::size_t d) {
  if (n == 0 || d == 0) throw std::invalid_argument("sample_codebook: N and D must be >= 1");
  std::vector<std::int8_t> entries(n * d);
  std::uint64_t bits = 0;
  int remaining = 0;
  for (auto& e : entries) {
    if (remaining == 0) {
      bits = rng();
      remaining = 64;
    }
    e = (bits & 1u) ? 1 : -1;
    bits >>= 1;
    --remaining;
  }
  return Codebook::from_column_major(n, d, std::move(entries));
}

Eigen::MatrixXd gram_pseudoinverse(const Codebook& codebook) {
  const auto n = codebook.dimension();
  const auto d = codebook.size();
  if (d > n) {
    throw SingularGramError("gram_pseudoinverse: D=" + std::to_string(d) + " exceeds N=" +
                            std::to_string(n) + ", Gram matrix is singular");
  }
  const Eigen::MatrixXd& x = codebook.matrix();
  const Eigen::MatrixXd gram = x.transpose() * x;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw SingularGramError("gram_pseudoinverse: Cholesky failed, codevectors are dependent");
  }
  const double rcond = llt.rcond();
  if (!(rcond >= kSingularRcond)) {
    throw SingularGramError("gram_pseudoinverse: Gram matrix is singular (rcond=" +
                            std::to_string(rcond) + ")");
  }
  return llt.solve(x.transpose());
}

BipolarVector initial_superposition(const Codebook& codebook) {
  std::vector<std::int32_t> ones(codebook.size(), 1);
  std::vector<std::int32_t> sum(codebook.dimension());
  codebook.synthesize(ones, sum);
  return sign_threshold(std::span<const std::int32_t>(sum));
}

namespace {

DecodedFactor pick_unsigned_max(const Eigen::Ref<const Eigen::VectorXd>& sims) {
  DecodedFactor best;
  double best_abs = -1.0;
  for (Eigen::Index j = 0; j < sims.size(); ++j) {
    const double a = std::abs(sims[j]);
    if (a > best_abs) {
      best_abs = a;
      best.index = static_cast<std::size_t>(j);
      best.similarity = sims[j];
    }
  }
  best.sign = best.similarity < 0.0 ? -1 : 1;
  return best;
}

}  // namespace

DecodedFactor decode_unsigned(const Codebook& codebook, std::span<const double> v) {
  if (v.size() != codebook.dimension()) {
    throw std::invalid_argument("decode_unsigned: length mismatch");
  }
  Eigen::Map<const Eigen::VectorXd> vec(v.data(), static_cast<Eigen::Index>(v.size()));
  const double norm = vec.norm();
  if (norm == 0.0) return DecodedFactor{0, 1, 0.0};
  Eigen::VectorXd sims = codebook.matrix().transpose() * vec;
  sims /= norm * std::sqrt(static_cast<double>(codebook.dimension()));
  return pick_unsigned_max(sims);
}

DecodedFactor decode_unsigned(const Codebook& codebook, const BipolarVector& v) {
  if (v.size() != codebook.dimension()) {
    throw std::invalid_argument("decode_unsigned: length mismatch");
  }
  std::vector<std::int32_t> dots(codebook.size());
  codebook.correlate(v.pack(), dots);
  Eigen::VectorXd sims(static_cast<Eigen::Index>(dots.size()));
  const double n = static_cast<double>(codebook.dimension());
  for (std::size_t j = 0; j < dots.size(); ++j) sims[static_cast<Eigen::Index>(j)] = dots[j] / n;
  return pick_unsigned_max(sims);
}

}  // namespace resonator
