#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "flipbench/matrix.hpp"

namespace flipbench {

enum class Scheme { Constant, Sequential, Random, MaskedRandom };

inline constexpr int kMaxMaskBits = 53;
inline constexpr int kFractionBits = 52;

// Which initialization scheme fills the operands, plus its parameters.
//
// Canonical text form (used by the CLI and in trace files):
//   constant:<float> | sequential | random | masked:<0..53>
// The seed is carried separately; it is not part of the text form.
struct InitSpec {
  Scheme scheme = Scheme::Random;
  double value = 0.0;        // Constant only
  std::uint64_t seed = 0;    // Random / MaskedRandom only
  int mask_bits = 0;         // MaskedRandom only

  static InitSpec constant(double value);
  static InitSpec sequential();
  static InitSpec random(std::uint64_t seed);
  static InitSpec masked(std::uint64_t seed, int mask_bits);

  // Parses the canonical text; `seed` is attached for the random schemes.
  static InitSpec parse(std::string_view text, std::uint64_t seed = 0);

  std::string to_string() const;
  std::optional<int> mask() const {
    if (scheme == Scheme::MaskedRandom) return mask_bits;
    return std::nullopt;
  }
  bool uses_seed() const {
    return scheme == Scheme::Random || scheme == Scheme::MaskedRandom;
  }

  // Throws std::invalid_argument when the parameters break the invariants.
  void validate() const;

  friend bool operator==(const InitSpec&, const InitSpec&) = default;
};

Matrix gen_constant(std::size_t order, double value);
Matrix gen_sequential(std::size_t order);
Matrix gen_random(std::size_t order, std::uint64_t seed);
Matrix gen_masked(std::size_t order, std::uint64_t seed, int mask_bits);

// Clears the `mask_bits` lowest bits of the 52-bit stored fraction. Sign and
// exponent are kept. mask_bits == 53 yields the bit pattern of 0.5 for any
// input. Throws std::invalid_argument for non-finite input or k > 53.
std::uint64_t apply_mantissa_mask(std::uint64_t bits, int mask_bits);
double apply_mantissa_mask(double x, int mask_bits);

// Operand role within one kernel call. Random streams are decorrelated by
// xoring the role index into the seed.
enum class Operand : std::uint64_t { A = 0, B = 1, C = 2 };

// Fills `m` in place (no reallocation when it already has the right order).
void fill(Matrix& m, std::size_t order, const InitSpec& spec, Operand role = Operand::A);
Matrix generate(std::size_t order, const InitSpec& spec, Operand role = Operand::A);

struct OperandSet {
  Matrix a, b, c;
};
OperandSet generate_operands(std::size_t order, const InitSpec& spec);

// Bit entropy of a matrix, measured as Hamming distance between raw 64-bit
// element patterns.
struct EntropyStats {
  double mean_adjacent_hamming = 0.0;
  double mean_sampled_pairwise_hamming = 0.0;
  std::uint64_t sample_pairs = 0;
  std::uint64_t seed = 0;
};

double mean_adjacent_hamming(const Matrix& m);
double mean_sampled_pairwise_hamming(const Matrix& m, std::uint64_t pairs, std::uint64_t seed);
EntropyStats entropy_stats(const Matrix& m, std::uint64_t pairs, std::uint64_t seed);

}  // namespace flipbench
