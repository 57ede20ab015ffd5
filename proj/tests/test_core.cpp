#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "oracles.hpp"
#include "resonator/bipolar.hpp"
#include "resonator/codebook.hpp"
#include "resonator/problem.hpp"
#include "resonator/random.hpp"
#include "resonator/serialization.hpp"

using namespace resonator;

namespace {

BipolarVector bv(std::initializer_list<int> v) { return BipolarVector::from_ints(std::vector<int>(v)); }

BipolarVector random_vector(Rng& rng, std::size_t n) {
  std::vector<int> v(n);
  for (auto& e : v) e = (rng() & 1u) ? 1 : -1;
  return BipolarVector::from_ints(v);
}

}  // namespace

TEST_CASE("sign threshold maps zero to +1") {
  const std::vector<double> v{3.2, -0.1, 0.0};
  CHECK(sign_threshold(v) == bv({1, -1, 1}));
  const std::vector<std::int32_t> z{0, -5, 7, 0};
  CHECK(sign_threshold(z) == bv({1, -1, 1, 1}));
}

TEST_CASE("sign threshold is idempotent on bipolar input") {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const auto x = random_vector(rng, 67);
    const auto real = x.to_real();
    const auto once = sign_threshold(std::span<const double>(real.data(), x.size()));
    CHECK(once == x);
    const auto neg = (-x).to_real();
    CHECK(sign_threshold(std::span<const double>(neg.data(), x.size())) == -x);
  }
}

TEST_CASE("bipolar vectors reject other values") {
  CHECK_THROWS_AS(BipolarVector(std::vector<std::int8_t>{1, 0, -1}), std::invalid_argument);
  CHECK_THROWS_AS(BipolarVector::from_ints(std::vector<int>{1, 2}), std::invalid_argument);
}

TEST_CASE("hadamard product") {
  CHECK(hadamard(bv({1, -1}), bv({-1, -1})) == bv({-1, 1}));
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    const auto x = random_vector(rng, 130);
    const auto y = random_vector(rng, 130);
    const auto z = random_vector(rng, 130);
    CHECK(hadamard(x, x) == BipolarVector::ones(130));
    CHECK(hadamard(x, BipolarVector::ones(130)) == x);
    CHECK(hadamard(x, y) == hadamard(y, x));
    CHECK(hadamard(hadamard(x, y), z) == hadamard(x, hadamard(y, z)));
  }
  CHECK_THROWS_AS(hadamard(bv({1}), bv({1, 1})), std::invalid_argument);
}

TEST_CASE("packed form xors to the hadamard product") {
  Rng rng(8);
  for (std::size_t n : {1u, 63u, 64u, 65u, 200u}) {
    const auto x = random_vector(rng, n);
    const auto y = random_vector(rng, n);
    auto px = x.pack();
    const auto py = y.pack();
    for (std::size_t w = 0; w < px.size(); ++w) px[w] ^= py[w];
    CHECK(px == hadamard(x, y).pack());
  }
}

TEST_CASE("others product") {
  const std::vector<BipolarVector> two{bv({1, -1, 1}), bv({-1, -1, 1})};
  CHECK(others_product(two, 0) == two[1]);
  CHECK(others_product(two, 1) == two[0]);
  const std::vector<BipolarVector> three{bv({1, -1, 1, -1}), bv({-1, -1, 1, 1}), bv({1, 1, -1, -1})};
  // entrywise: (-1*1, -1*1, 1*-1, 1*-1) for skip 0
  CHECK(others_product(three, 0) == bv({-1, -1, -1, -1}));
  CHECK(others_product(three, 1) == bv({1, -1, -1, 1}));
  CHECK(others_product(three, 2) == bv({-1, 1, 1, -1}));
  CHECK_THROWS(others_product(three, 3));
}

TEST_CASE("all-correct estimates unbind the composite") {
  Rng rng(11);
  const std::vector<std::size_t> sizes{5, 6, 7};
  const auto p = sample_problem(rng, 300, sizes);
  std::vector<BipolarVector> est;
  for (std::size_t f = 0; f < 3; ++f) est.push_back(p.codebook(f).column((*p.truth())[f]));
  for (std::size_t f = 0; f < 3; ++f) CHECK(hadamard(others_product(est, f), p.composite()) == est[f]);
}

TEST_CASE("codebook sampling is seeded and balanced") {
  Rng a(42), b(42);
  CHECK(sample_codebook(a, 100, 10) == sample_codebook(b, 100, 10));

  Rng rng(2);
  const auto cb = sample_codebook(rng, 10000, 100);
  int inside = 0;
  for (std::size_t j = 0; j < 100; ++j) {
    double mean = 0.0;
    for (auto e : cb.column_entries(j)) mean += e;
    mean /= 10000.0;
    inside += std::abs(mean) <= 0.05;
  }
  // P(|mean| > 0.05) for 10000 fair signs is about 6e-7 per column.
  CHECK(inside >= 99);

  // Cross-column cosine similarity has standard deviation 1/sqrt(N).
  double ss = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    for (std::size_t j = i + 1; j < 100; ++j) {
      const double s = cosine_similarity(cb.column(i), cb.column(j));
      ss += s * s;
      ++count;
    }
  }
  const double sd = std::sqrt(ss / count);
  CHECK(sd == doctest::Approx(0.01).epsilon(0.1));
}

TEST_CASE("compose stores a consistent truth") {
  Rng rng(4);
  std::vector<Codebook> cbs{sample_codebook(rng, 64, 3), sample_codebook(rng, 64, 4)};
  const std::vector<std::size_t> idx{2, 1};
  const auto p = compose(cbs, idx);
  CHECK(p.composite() == hadamard(cbs[0].column(2), cbs[1].column(1)));
  CHECK(*p.truth() == idx);
  CHECK(p.search_space_size() == 12.0);

  const std::vector<std::size_t> bad{3, 0};
  CHECK_THROWS_AS(compose(cbs, bad), std::out_of_range);

  // the same vector twice gives the all-ones composite
  std::vector<Codebook> same{cbs[0], cbs[0]};
  const std::vector<std::size_t> twice{1, 1};
  CHECK(compose(same, twice).composite() == BipolarVector::ones(64));
}

TEST_CASE("problems validate their shape") {
  Rng rng(9);
  const auto x = sample_codebook(rng, 32, 3);
  const auto y = sample_codebook(rng, 16, 3);
  const std::vector<Codebook> one{x};
  CHECK_THROWS_AS(FactorizationProblem(one, x.column(0)), std::invalid_argument);
  const std::vector<Codebook> mixed{x, y};
  CHECK_THROWS_AS(FactorizationProblem(mixed, x.column(0)), std::invalid_argument);
  const std::vector<Codebook> two{x, x};
  CHECK_THROWS_AS(FactorizationProblem(two, x.column(0), std::vector<std::size_t>{0, 1}), std::invalid_argument);
}

TEST_CASE("flipping an even number of factor signs keeps the composite") {
  Rng rng(6);
  const std::vector<std::size_t> sizes{4, 4, 4};
  const auto p = sample_problem(rng, 100, sizes);
  std::vector<BipolarVector> est;
  for (std::size_t f = 0; f < 3; ++f) est.push_back(p.codebook(f).column((*p.truth())[f]));
  est[0] = -est[0];
  est[2] = -est[2];
  CHECK(hadamard(hadamard(est[0], est[1]), est[2]) == p.composite());
}

TEST_CASE("composed problems are recovered by exhaustive search") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    Rng rng(100 + s);
    const std::vector<std::size_t> sizes{7, 9};
    const auto p = sample_problem(rng, 128, sizes);
    const auto e = oracle::enumerate(p);
    CHECK(e.indices == *p.truth());
    CHECK(e.similarity == 1.0);
  }
}

TEST_CASE("cosine similarity") {
  const std::vector<double> x{1.0, 2.0, -3.0};
  const std::vector<double> nx{-1.0, -2.0, 3.0};
  CHECK(cosine_similarity(x, x) == doctest::Approx(1.0));
  CHECK(cosine_similarity(x, nx) == doctest::Approx(-1.0));
  const std::vector<double> zero{0.0, 0.0, 0.0};
  CHECK_THROWS_AS(cosine_similarity(x, zero), std::invalid_argument);

  Rng rng(77);
  const auto a = random_vector(rng, 1000);
  const auto b = random_vector(rng, 1000);
  long dot = 0;
  for (std::size_t i = 0; i < 1000; ++i) dot += a[i] * b[i];
  const double expected = static_cast<double>(dot) / 1000.0;
  CHECK(std::abs(cosine_similarity(a, b) - expected) < 1e-12);
  const auto ra = a.to_real();
  const auto rb = b.to_real();
  CHECK(std::abs(cosine_similarity(std::span<const double>(ra.data(), 1000), std::span<const double>(rb.data(), 1000)) -
                 expected) < 1e-12);
}

TEST_CASE("unsigned decoding") {
  Rng rng(12);
  const auto cb = sample_codebook(rng, 256, 10);
  for (std::size_t j = 0; j < 10; ++j) {
    const auto pos = decode_unsigned(cb, cb.column(j));
    CHECK(pos.index == j);
    CHECK(pos.sign == 1);
    CHECK(pos.similarity == 1.0);
    const auto neg = decode_unsigned(cb, -cb.column(j));
    CHECK(neg.index == j);
    CHECK(neg.sign == -1);
    CHECK(neg.similarity == -1.0);
    const auto real = cb.column(j).to_real();
    const auto r = decode_unsigned(cb, std::span<const double>(real.data(), 256));
    CHECK(r.index == j);
    CHECK(r.similarity == doctest::Approx(1.0));
  }
}

TEST_CASE("decoding a noisy codevector matches a full similarity scan") {
  Rng rng(13);
  const auto cb = sample_codebook(rng, 1000, 50);
  for (int t = 0; t < 20; ++t) {
    const std::size_t j = static_cast<std::size_t>(t) % 50;
    auto v = cb.column(j);
    std::vector<std::size_t> pos(1000);
    for (std::size_t i = 0; i < 1000; ++i) pos[i] = i;
    std::shuffle(pos.begin(), pos.end(), rng);
    for (std::size_t k = 0; k < 100; ++k) v.flip(pos[k]);
    std::size_t best = 0;
    long best_abs = -1;
    for (std::size_t c = 0; c < 50; ++c) {
      long dot = 0;
      for (std::size_t i = 0; i < 1000; ++i) dot += v[i] * cb.column_entries(c)[i];
      if (std::labs(dot) > best_abs) {
        best_abs = std::labs(dot);
        best = c;
      }
    }
    CHECK(best == j);
    CHECK(decode_unsigned(cb, v).index == best);
  }
}

TEST_CASE("decoding ties go to the lowest index") {
  const std::vector<BipolarVector> cols{bv({1, 1, 1, 1}), bv({1, 1, -1, -1}), bv({1, -1, 1, -1})};
  const Codebook cb(cols);
  // equal |similarity| 0.5 to columns 0 and 1, 0.5 to column 2 as well
  const auto d = decode_unsigned(cb, bv({1, 1, 1, -1}));
  CHECK(d.index == 0);
  const std::vector<double> zero(4, 0.0);
  CHECK(decode_unsigned(cb, zero).index == 0);
}

TEST_CASE("correlate and synthesize match dense products") {
  Rng rng(21);
  for (std::size_t n : {7u, 64u, 129u}) {
    const auto cb = sample_codebook(rng, n, 9);
    const auto x = oracle::dense(cb);
    const auto v = random_vector(rng, n);
    std::vector<std::int32_t> coeffs(9);
    cb.correlate(v.pack(), coeffs);
    const Eigen::VectorXd expect = x.transpose() * v.to_real();
    for (std::size_t j = 0; j < 9; ++j) CHECK(coeffs[j] == static_cast<std::int32_t>(expect[static_cast<Eigen::Index>(j)]));
    // small coefficients take the 16-bit path, large ones the 32-bit path
    for (std::int32_t scale : {1, 5000}) {
      std::vector<std::int32_t> a(9);
      Eigen::VectorXd ad(9);
      for (std::size_t j = 0; j < 9; ++j) {
        a[j] = scale * (static_cast<std::int32_t>(rng() % 21) - 10);
        ad[static_cast<Eigen::Index>(j)] = a[j];
      }
      std::vector<std::int32_t> y(n);
      cb.synthesize(a, y);
      const Eigen::VectorXd ey = x * ad;
      for (std::size_t i = 0; i < n; ++i) CHECK(y[i] == static_cast<std::int32_t>(ey[static_cast<Eigen::Index>(i)]));
    }
  }
}

TEST_CASE("gram pseudoinverse") {
  SUBCASE("orthogonal columns give X^T / N") {
    const std::vector<BipolarVector> cols{bv({1, 1, 1, 1}), bv({1, -1, 1, -1}), bv({1, 1, -1, -1}),
                                          bv({1, -1, -1, 1})};
    const Codebook cb(cols);
    const Eigen::MatrixXd p = gram_pseudoinverse(cb);
    CHECK((p - cb.matrix().transpose() / 4.0).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("random codebook is a left inverse and matches an SVD-based pseudoinverse") {
    Rng rng(31);
    const auto cb = sample_codebook(rng, 500, 20);
    const Eigen::MatrixXd& p = cb.pseudoinverse();
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(20, 20);
    CHECK((p * cb.matrix() - eye).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((p - oracle::pinv(oracle::dense(cb))).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("dependent columns are refused") {
    Rng rng(32);
    const auto base = sample_codebook(rng, 50, 3);
    const std::vector<BipolarVector> cols{base.column(0), base.column(1), base.column(0)};
    CHECK_THROWS_AS(gram_pseudoinverse(Codebook(cols)), SingularGramError);
    const auto wide = sample_codebook(rng, 4, 6);
    CHECK_THROWS_AS(gram_pseudoinverse(wide), SingularGramError);
  }
}

TEST_CASE("initial superposition") {
  Rng rng(41);
  const auto one = sample_codebook(rng, 40, 1);
  CHECK(initial_superposition(one) == one.column(0));

  const auto x = one.column(0);
  const std::vector<BipolarVector> opposite{x, -x};
  CHECK(initial_superposition(Codebook(opposite)) == BipolarVector::ones(40));

  // Similarity to each column concentrates near sqrt(2 / (pi D)).
  double mean = 0.0;
  int count = 0;
  bool all_positive = true;
  for (int s = 0; s < 20; ++s) {
    const auto cb = sample_codebook(rng, 1000, 50);
    const auto v = initial_superposition(cb);
    for (std::size_t j = 0; j < 50; ++j) {
      const double sim = cosine_similarity(v, cb.column(j));
      all_positive = all_positive && sim > 0.0;
      mean += sim;
      ++count;
    }
  }
  mean /= count;
  CHECK(all_positive);
  CHECK(mean == doctest::Approx(std::sqrt(2.0 / (M_PI * 50.0))).epsilon(0.05));
}

TEST_CASE("per-trial streams are independent of each other") {
  auto a = derive_rng(1, Stream::Problem, {3, 4});
  auto b = derive_rng(1, Stream::Problem, {3, 4});
  CHECK(a() == b());
  auto c = derive_rng(1, Stream::Solver, {3, 4});
  auto d = derive_rng(1, Stream::Problem, {4, 3});
  auto e = derive_rng(2, Stream::Problem, {3, 4});
  const auto first = derive_rng(1, Stream::Problem, {3, 4})();
  CHECK(c() != first);
  CHECK(d() != first);
  CHECK(e() != first);
}

TEST_CASE("binary and json round trips") {
  Rng rng(51);
  const std::vector<std::size_t> sizes{3, 5, 2};
  const auto p = sample_problem(rng, 77, sizes);

  std::stringstream bin;
  write_problem(bin, p);
  const auto q = read_problem(bin);
  CHECK(q.composite() == p.composite());
  CHECK(*q.truth() == *p.truth());
  for (std::size_t f = 0; f < 3; ++f) CHECK(q.codebook(f) == p.codebook(f));

  const auto r = problem_from_json(problem_to_json(p));
  CHECK(r.composite() == p.composite());
  CHECK(*r.truth() == *p.truth());

  std::stringstream cb;
  write_codebook(cb, p.codebook(1));
  CHECK(read_codebook(cb) == p.codebook(1));

  std::stringstream vec;
  write_vector(vec, p.composite());
  CHECK(read_vector(vec) == p.composite());

  const auto dir = std::filesystem::temp_directory_path() / "resonator_core_test";
  std::filesystem::create_directories(dir);
  save_problem(dir / "p.rsn", p);
  save_problem(dir / "p.json", p);
  CHECK(load_problem(dir / "p.rsn").composite() == p.composite());
  CHECK(load_problem(dir / "p.json").composite() == p.composite());
  std::filesystem::remove_all(dir);
}

TEST_CASE("binary layout is row-major with bit 1 meaning +1") {
  const std::vector<BipolarVector> cols{bv({1, -1, 1}), bv({-1, -1, 1})};
  std::stringstream s;
  write_codebook(s, Codebook(cols));
  const std::string bytes = s.str();
  REQUIRE(bytes.size() == 4 + 1 + 1 + 2 + 8 + 8 + 1);
  CHECK(bytes.substr(0, 4) == "RSN1");
  CHECK(bytes[4] == 1);
  CHECK(bytes[5] == 1);
  // rows (+1,-1), (-1,-1), (+1,+1) -> bits 1,0, 0,0, 1,1 LSB first
  CHECK(static_cast<unsigned char>(bytes[24]) == 0b110001);
}

TEST_CASE("malformed input is rejected") {
  std::stringstream bad("XXXX123");
  CHECK_THROWS_AS(read_codebook(bad), FormatError);
  CHECK_THROWS_AS(load_problem("/nonexistent/problem.rsn"), std::exception);
  CHECK_THROWS(codebook_from_json(nlohmann::json{{"N", 2}, {"D", 1}, {"columns", {{1, 0}}}}));
}
