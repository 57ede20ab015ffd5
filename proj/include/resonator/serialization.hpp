#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "resonator/bipolar.hpp"
#include "resonator/codebook.hpp"
#include "resonator/problem.hpp"

namespace resonator {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Binary container "RSN1", all integers little-endian:
//   magic[4] = "RSN1"
//   u8  kind      1 codebook, 2 vector, 3 problem
//   u8  encoding  1 = one bit per entry, bit 1 means +1
//   u16 reserved  0
//   u64 N
//   u64 count     D for a codebook, 1 for a vector, F for a problem
// Codebook payload: N rows of D bits each, row-major, LSB-first, packed
// continuously and padded with zero bits to a whole byte. A vector is a
// one-column codebook. A problem payload holds the composite, a u8 truth flag,
// F u64 codebook sizes, F u64 truth indices when the flag is 1, then each
// codebook payload.

void write_codebook(std::ostream& out, const Codebook& codebook);
void write_vector(std::ostream& out, const BipolarVector& v);
void write_problem(std::ostream& out, const FactorizationProblem& problem);

Codebook read_codebook(std::istream& in);
BipolarVector read_vector(std::istream& in);
FactorizationProblem read_problem(std::istream& in);

// JSON debug form. Codebooks are {"N", "D", "columns": [[+-1...], ...]},
// vectors are {"N", "entries"}, problems {"N", "F", "composite",
// "codebooks", "truth"?}.
nlohmann::json codebook_to_json(const Codebook& codebook);
nlohmann::json vector_to_json(const BipolarVector& v);
nlohmann::json problem_to_json(const FactorizationProblem& problem);
Codebook codebook_from_json(const nlohmann::json& j);
BipolarVector vector_from_json(const nlohmann::json& j);
FactorizationProblem problem_from_json(const nlohmann::json& j);

/// File helpers. Loading detects JSON by a leading '{'; saving writes JSON
/// when the extension is ".json" and the binary container otherwise.
Codebook load_codebook(const std::filesystem::path& path);
BipolarVector load_vector(const std::filesystem::path& path);
FactorizationProblem load_problem(const std::filesystem::path& path);
void save_codebook(const std::filesystem::path& path, const Codebook& codebook);
void save_vector(const std::filesystem::path& path, const BipolarVector& v);
void save_problem(const std::filesystem::path& path, const FactorizationProblem& problem);

}  // namespace resonator
