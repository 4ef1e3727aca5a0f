#include "flipbench/datagen.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include "flipbench/error.hpp"
#include "flipbench/prng.hpp"

namespace flipbench {

namespace {

constexpr std::uint64_t kExponentMask = 0x7ff0000000000000ULL;
constexpr std::uint64_t kHalfBits = 0x3fe0000000000000ULL;

void require_order(std::size_t order, std::size_t minimum) {
  if (order < minimum) {
    throw std::invalid_argument("matrix order must be at least " + std::to_string(minimum));
  }
}

void require_mask(int mask_bits) {
  if (mask_bits < 0 || mask_bits > kMaxMaskBits) {
    throw std::invalid_argument("mask_bits must be in 0..53, got " + std::to_string(mask_bits));
  }
}

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::uint64_t stream_seed(std::uint64_t seed, Operand role) {
  return seed ^ static_cast<std::uint64_t>(role);
}

void fill_random(Matrix& m, std::uint64_t seed, int mask_bits) {
  Xoshiro256 rng(seed);
  double* data = m.data();
  const auto count = static_cast<std::size_t>(m.size());
  for (std::size_t i = 0; i < count; ++i) {
    data[i] = rng.uniform01();
  }
  if (mask_bits > 0) {
    for (std::size_t i = 0; i < count; ++i) data[i] = apply_mantissa_mask(data[i], mask_bits);
  }
}

}  // namespace

InitSpec InitSpec::constant(double value) {
  InitSpec s;
  s.scheme = Scheme::Constant;
  s.value = value;
  s.validate();
  return s;
}

InitSpec InitSpec::sequential() {
  InitSpec s;
  s.scheme = Scheme::Sequential;
  return s;
}

InitSpec InitSpec::random(std::uint64_t seed) {
  InitSpec s;
  s.scheme = Scheme::Random;
  s.seed = seed;
  return s;
}

InitSpec InitSpec::masked(std::uint64_t seed, int mask_bits) {
  InitSpec s;
  s.scheme = Scheme::MaskedRandom;
  s.seed = seed;
  s.mask_bits = mask_bits;
  s.validate();
  return s;
}

void InitSpec::validate() const {
  switch (scheme) {
    case Scheme::Constant:
      if (!std::isfinite(value)) throw std::invalid_argument("constant value must be finite");
      break;
    case Scheme::MaskedRandom:
      require_mask(mask_bits);
      break;
    case Scheme::Sequential:
    case Scheme::Random:
      break;
  }
}

InitSpec InitSpec::parse(std::string_view text, std::uint64_t seed) {
  auto fail = [&](const std::string& why) -> InputError {
    return InputError("invalid scheme '" + std::string(text) + "': " + why);
  };
  if (text == "sequential") return sequential();
  if (text == "random") return random(seed);

  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw fail("expected constant:<float>, sequential, random or masked:<0..53>");
  }
  const auto head = text.substr(0, colon);
  const auto arg = text.substr(colon + 1);
  if (arg.empty()) throw fail("missing argument");
  const char* first = arg.data();
  const char* last = arg.data() + arg.size();

  if (head == "constant") {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) throw fail("value is not a number");
    if (!std::isfinite(v)) throw fail("value must be finite");
    return constant(v);
  }
  if (head == "masked") {
    int k = 0;
    auto [ptr, ec] = std::from_chars(first, last, k);
    if (ec != std::errc() || ptr != last) throw fail("mask is not an integer");
    if (k < 0 || k > kMaxMaskBits) throw fail("mask must be in 0..53");
    return masked(seed, k);
  }
  throw fail("unknown scheme");
}

std::string InitSpec::to_string() const {
  switch (scheme) {
    case Scheme::Constant:
      return "constant:" + format_double(value);
    case Scheme::Sequential:
      return "sequential";
    case Scheme::Random:
      return "random";
    case Scheme::MaskedRandom:
      return "masked:" + std::to_string(mask_bits);
  }
  return {};
}

std::uint64_t apply_mantissa_mask(std::uint64_t bits, int mask_bits) {
  require_mask(mask_bits);
  if ((bits & kExponentMask) == kExponentMask) {
    throw std::invalid_argument("cannot mask a non-finite value");
  }
  if (mask_bits == kMaxMaskBits) return kHalfBits;
  const std::uint64_t cleared = (std::uint64_t{1} << mask_bits) - 1;
  return bits & ~cleared;
}

double apply_mantissa_mask(double x, int mask_bits) {
  return std::bit_cast<double>(apply_mantissa_mask(std::bit_cast<std::uint64_t>(x), mask_bits));
}

Matrix gen_constant(std::size_t order, double value) {
  Matrix m;
  fill(m, order, InitSpec::constant(value));
  return m;
}

Matrix gen_sequential(std::size_t order) {
  Matrix m;
  fill(m, order, InitSpec::sequential());
  return m;
}

Matrix gen_random(std::size_t order, std::uint64_t seed) {
  Matrix m;
  fill(m, order, InitSpec::random(seed));
  return m;
}

Matrix gen_masked(std::size_t order, std::uint64_t seed, int mask_bits) {
  Matrix m;
  fill(m, order, InitSpec::masked(seed, mask_bits));
  return m;
}

void fill(Matrix& m, std::size_t order, const InitSpec& spec, Operand role) {
  spec.validate();
  require_order(order, spec.scheme == Scheme::Sequential ? 2 : 1);
  const auto n = static_cast<Eigen::Index>(order);
  if (m.rows() != n || m.cols() != n) m.resize(n, n);

  switch (spec.scheme) {
    case Scheme::Constant:
      m.setConstant(spec.value);
      break;
    case Scheme::Sequential: {
      // Same sequence for every operand role.
      const double denom = static_cast<double>(order * order - 1);
      double* data = m.data();
      const auto count = static_cast<std::size_t>(m.size());
      for (std::size_t i = 0; i < count; ++i) data[i] = static_cast<double>(i) / denom;
      break;
    }
    case Scheme::Random:
      fill_random(m, stream_seed(spec.seed, role), 0);
      break;
    case Scheme::MaskedRandom:
      fill_random(m, stream_seed(spec.seed, role), spec.mask_bits);
      break;
  }
}

Matrix generate(std::size_t order, const InitSpec& spec, Operand role) {
  Matrix m;
  fill(m, order, spec, role);
  return m;
}

OperandSet generate_operands(std::size_t order, const InitSpec& spec) {
  return {generate(order, spec, Operand::A), generate(order, spec, Operand::B),
          generate(order, spec, Operand::C)};
}

double mean_adjacent_hamming(const Matrix& m) {
  const auto count = static_cast<std::size_t>(m.size());
  if (count < 2) throw std::invalid_argument("adjacent Hamming needs at least two elements");
  const double* data = m.data();
  std::uint64_t total = 0;
  std::uint64_t prev = std::bit_cast<std::uint64_t>(data[0]);
  for (std::size_t i = 1; i < count; ++i) {
    const std::uint64_t cur = std::bit_cast<std::uint64_t>(data[i]);
    total += static_cast<std::uint64_t>(std::popcount(prev ^ cur));
    prev = cur;
  }
  return static_cast<double>(total) / static_cast<double>(count - 1);
}

double mean_sampled_pairwise_hamming(const Matrix& m, std::uint64_t pairs, std::uint64_t seed) {
  const auto count = static_cast<std::uint64_t>(m.size());
  if (count < 2) throw std::invalid_argument("pairwise Hamming needs at least two elements");
  if (pairs == 0) throw std::invalid_argument("pairs must be at least 1");
  Xoshiro256 rng(seed);
  const double* data = m.data();
  std::uint64_t total = 0;
  for (std::uint64_t p = 0; p < pairs; ++p) {
    const std::uint64_t i = rng.below(count);
    std::uint64_t j = rng.below(count - 1);
    if (j >= i) ++j;
    total += static_cast<std::uint64_t>(std::popcount(std::bit_cast<std::uint64_t>(data[i]) ^
                                                      std::bit_cast<std::uint64_t>(data[j])));
  }
  return static_cast<double>(total) / static_cast<double>(pairs);
}

EntropyStats entropy_stats(const Matrix& m, std::uint64_t pairs, std::uint64_t seed) {
  return {mean_adjacent_hamming(m), mean_sampled_pairwise_hamming(m, pairs, seed), pairs, seed};
}

}  // namespace flipbench
