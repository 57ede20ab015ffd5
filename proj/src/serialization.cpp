#include "resonator/serialization.hpp"

#include <array>
#include <cstring>
#include <functional>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>

namespace resonator {

namespace {

constexpr std::array<char, 4> kMagic{'R', 'S', 'N', '1'};
constexpr std::uint8_t kKindCodebook = 1;
constexpr std::uint8_t kKindVector = 2;
constexpr std::uint8_t kKindProblem = 3;
constexpr std::uint8_t kEncodingBits = 1;
// Refuse absurd sizes from corrupt headers before allocating.
constexpr std::uint64_t kMaxEntries = std::uint64_t{1} << 34;

void put_u8(std::ostream& out, std::uint8_t v) { out.put(static_cast<char>(v)); }

void put_u64(std::ostream& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) put_u8(out, static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint8_t get_u8(std::istream& in) {
  const int c = in.get();
  if (c == std::char_traits<char>::eof()) throw FormatError("RSN1: unexpected end of data");
  return static_cast<std::uint8_t>(c);
}

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{get_u8(in)} << (8 * i);
  return v;
}

void write_header(std::ostream& out, std::uint8_t kind, std::uint64_t n, std::uint64_t count) {
  out.write(kMagic.data(), kMagic.size());
  put_u8(out, kind);
  put_u8(out, kEncodingBits);
  put_u8(out, 0);
  put_u8(out, 0);
  put_u64(out, n);
  put_u64(out, count);
}

struct Header {
  std::uint8_t kind;
  std::uint64_t n;
  std::uint64_t count;
};

Header read_header(std::istream& in, std::uint8_t expected_kind) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != 4 || magic != kMagic) throw FormatError("RSN1: bad magic bytes");
  Header h{};
  h.kind = get_u8(in);
  const auto encoding = get_u8(in);
  get_u8(in);
  get_u8(in);
  h.n = get_u64(in);
  h.count = get_u64(in);
  if (h.kind != expected_kind) {
    throw FormatError("RSN1: expected kind " + std::to_string(expected_kind) + ", found " +
                      std::to_string(h.kind));
  }
  if (encoding != kEncodingBits) {
    throw FormatError("RSN1: unsupported entry encoding " + std::to_string(encoding));
  }
  if (h.n == 0 || h.count == 0) throw FormatError("RSN1: empty shape");
  return h;
}

// Row-major bits of an N x D matrix given as column-major int8 entries.
void write_bits(std::ostream& out, std::size_t n, std::size_t d,
                const std::function<std::int8_t(std::size_t, std::size_t)>& at) {
  std::uint8_t byte = 0;
  int used = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      if (at(i, j) > 0) byte |= static_cast<std::uint8_t>(1u << used);
      if (++used == 8) {
        put_u8(out, byte);
        byte = 0;
        used = 0;
      }
    }
  }
  if (used > 0) put_u8(out, byte);
}

std::vector<std::int8_t> read_bits(std::istream& in, std::uint64_t n, std::uint64_t d) {
  if (n > kMaxEntries / d) throw FormatError("RSN1: shape too large");
  std::vector<std::int8_t> column_major(n * d);
  const std::uint64_t total = n * d;
  std::uint8_t byte = 0;
  for (std::uint64_t k = 0; k < total; ++k) {
    if (k % 8 == 0) byte = get_u8(in);
    const std::uint64_t i = k / d;
    const std::uint64_t j = k % d;
    column_major[j * n + i] = (byte >> (k % 8)) & 1u ? 1 : -1;
  }
  return column_major;
}

void write_codebook_payload(std::ostream& out, const Codebook& cb) {
  const auto n = cb.dimension();
  write_bits(out, n, cb.size(),
             [&](std::size_t i, std::size_t j) { return cb.column_entries(j)[i]; });
}

void write_vector_payload(std::ostream& out, const BipolarVector& v) {
  write_bits(out, v.size(), 1, [&](std::size_t i, std::size_t) { return v[i]; });
}

std::vector<int> checked_entries(const nlohmann::json& arr, std::size_t n, const char* what) {
  if (!arr.is_array()) throw FormatError(std::string("JSON: ") + what + " must be an array");
  if (arr.size() != n) {
    throw FormatError(std::string("JSON: ") + what + " has " + std::to_string(arr.size()) +
                      " entries, expected " + std::to_string(n));
  }
  std::vector<int> out;
  out.reserve(n);
  for (const auto& e : arr) {
    if (!e.is_number_integer() || (e.get<int>() != 1 && e.get<int>() != -1)) {
      throw FormatError(std::string("JSON: ") + what + " entries must be +1 or -1");
    }
    out.push_back(e.get<int>());
  }
  return out;
}

std::size_t require_size(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number_unsigned()) {
    throw FormatError(std::string("JSON: missing or invalid \"") + key + "\"");
  }
  return j.at(key).get<std::size_t>();
}

bool looks_like_json(std::istream& in) {
  in >> std::ws;
  return in.peek() == '{';
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

nlohmann::json parse_json(std::istream& in) {
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("JSON: ") + e.what());
  }
}

template <class Write>
void save_file(const std::filesystem::path& path, const nlohmann::json* as_json, Write write) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  if (as_json) {
    out << as_json->dump() << '\n';
  } else {
    write(out);
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

bool json_path(const std::filesystem::path& path) { return path.extension() == ".json"; }

}  // namespace

void write_codebook(std::ostream& out, const Codebook& codebook) {
  write_header(out, kKindCodebook, codebook.dimension(), codebook.size());
  write_codebook_payload(out, codebook);
}

void write_vector(std::ostream& out, const BipolarVector& v) {
  write_header(out, kKindVector, v.size(), 1);
  write_vector_payload(out, v);
}

void write_problem(std::ostream& out, const FactorizationProblem& problem) {
  write_header(out, kKindProblem, problem.dimension(), problem.factors());
  write_vector_payload(out, problem.composite());
  put_u8(out, problem.truth() ? 1 : 0);
  for (const auto& cb : problem.codebooks()) put_u64(out, cb.size());
  if (problem.truth()) {
    for (auto i : *problem.truth()) put_u64(out, i);
  }
  for (const auto& cb : problem.codebooks()) write_codebook_payload(out, cb);
}

Codebook read_codebook(std::istream& in) {
  const auto h = read_header(in, kKindCodebook);
  return Codebook::from_column_major(h.n, h.count, read_bits(in, h.n, h.count));
}

BipolarVector read_vector(std::istream& in) {
  const auto h = read_header(in, kKindVector);
  if (h.count != 1) throw FormatError("RSN1: vector must have count 1");
  return BipolarVector(read_bits(in, h.n, 1));
}

FactorizationProblem read_problem(std::istream& in) {
  const auto h = read_header(in, kKindProblem);
  if (h.count > 4096) throw FormatError("RSN1: implausible factor count");
  BipolarVector composite(read_bits(in, h.n, 1));
  const auto has_truth = get_u8(in);
  if (has_truth > 1) throw FormatError("RSN1: bad truth flag");
  std::vector<std::uint64_t> sizes(h.count);
  for (auto& d : sizes) {
    d = get_u64(in);
    if (d == 0) throw FormatError("RSN1: empty codebook");
  }
  std::optional<std::vector<std::size_t>> truth;
  if (has_truth) {
    truth.emplace(h.count);
    for (auto& i : *truth) i = get_u64(in);
  }
  std::vector<Codebook> codebooks;
  for (auto d : sizes) codebooks.push_back(Codebook::from_column_major(h.n, d, read_bits(in, h.n, d)));
  try {
    return FactorizationProblem(std::move(codebooks), std::move(composite), std::move(truth));
  } catch (const std::exception& e) {
    throw FormatError(std::string("RSN1: inconsistent problem: ") + e.what());
  }
}

nlohmann::json codebook_to_json(const Codebook& codebook) {
  nlohmann::json cols = nlohmann::json::array();
  for (std::size_t j = 0; j < codebook.size(); ++j) {
    auto e = codebook.column_entries(j);
    cols.push_back(std::vector<int>(e.begin(), e.end()));
  }
  return {{"N", codebook.dimension()}, {"D", codebook.size()}, {"columns", std::move(cols)}};
}

nlohmann::json vector_to_json(const BipolarVector& v) {
  return {{"N", v.size()}, {"entries", v.to_ints()}};
}

nlohmann::json problem_to_json(const FactorizationProblem& problem) {
  nlohmann::json j{{"N", problem.dimension()},
                   {"F", problem.factors()},
                   {"composite", problem.composite().to_ints()}};
  nlohmann::json cbs = nlohmann::json::array();
  for (const auto& cb : problem.codebooks()) cbs.push_back(codebook_to_json(cb));
  j["codebooks"] = std::move(cbs);
  if (problem.truth()) j["truth"] = *problem.truth();
  return j;
}

Codebook codebook_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("JSON: codebook must be an object");
  const auto n = require_size(j, "N");
  const auto d = require_size(j, "D");
  if (!j.contains("columns") || !j.at("columns").is_array() || j.at("columns").size() != d) {
    throw FormatError("JSON: \"columns\" must hold D arrays");
  }
  if (n == 0 || d == 0) throw FormatError("JSON: empty codebook");
  std::vector<std::int8_t> entries;
  entries.reserve(n * d);
  for (const auto& col : j.at("columns")) {
    for (int e : checked_entries(col, n, "column")) entries.push_back(static_cast<std::int8_t>(e));
  }
  return Codebook::from_column_major(n, d, std::move(entries));
}

BipolarVector vector_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("JSON: vector must be an object");
  const auto n = require_size(j, "N");
  if (!j.contains("entries")) throw FormatError("JSON: missing \"entries\"");
  auto ints = checked_entries(j.at("entries"), n, "entries");
  return BipolarVector::from_ints(ints);
}

FactorizationProblem problem_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("JSON: problem must be an object");
  const auto n = require_size(j, "N");
  if (!j.contains("composite") || !j.contains("codebooks") || !j.at("codebooks").is_array()) {
    throw FormatError("JSON: problem needs \"composite\" and \"codebooks\"");
  }
  auto composite = BipolarVector::from_ints(checked_entries(j.at("composite"), n, "composite"));
  std::vector<Codebook> codebooks;
  for (const auto& cb : j.at("codebooks")) codebooks.push_back(codebook_from_json(cb));
  std::optional<std::vector<std::size_t>> truth;
  if (j.contains("truth") && !j.at("truth").is_null()) {
    try {
      truth = j.at("truth").get<std::vector<std::size_t>>();
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("JSON: bad \"truth\": ") + e.what());
    }
    for (std::size_t f = 0; f < truth->size() && f < codebooks.size(); ++f) {
      if ((*truth)[f] >= codebooks[f].size()) throw FormatError("JSON: truth index out of range");
    }
  }
  try {
    return FactorizationProblem(std::move(codebooks), std::move(composite), std::move(truth));
  } catch (const std::exception& e) {
    throw FormatError(std::string("JSON: inconsistent problem: ") + e.what());
  }
}

Codebook load_codebook(const std::filesystem::path& path) {
  auto in = open_input(path);
  return looks_like_json(in) ? codebook_from_json(parse_json(in)) : read_codebook(in);
}

BipolarVector load_vector(const std::filesystem::path& path) {
  auto in = open_input(path);
  return looks_like_json(in) ? vector_from_json(parse_json(in)) : read_vector(in);
}

FactorizationProblem load_problem(const std::filesystem::path& path) {
  auto in = open_input(path);
  return looks_like_json(in) ? problem_from_json(parse_json(in)) : read_problem(in);
}

void save_codebook(const std::filesystem::path& path, const Codebook& codebook) {
  nlohmann::json j;
  if (json_path(path)) j = codebook_to_json(codebook);
  save_file(path, json_path(path) ? &j : nullptr,
            [&](std::ostream& out) { write_codebook(out, codebook); });
}

void save_vector(const std::filesystem::path& path, const BipolarVector& v) {
  nlohmann::json j;
  if (json_path(path)) j = vector_to_json(v);
  save_file(path, json_path(path) ? &j : nullptr, [&](std::ostream& out) { write_vector(out, v); });
}

void save_problem(const std::filesystem::path& path, const FactorizationProblem& problem) {
  nlohmann::json j;
  if (json_path(path)) j = problem_to_json(problem);
  save_file(path, json_path(path) ? &j : nullptr,
            [&](std::ostream& out) { write_problem(out, problem); });
}

}  // namespace resonator
