#include <doctest.h>

#include <cmath>
#include <cstdint>

#include "flipbench/datagen.hpp"
#include "flipbench/error.hpp"
#include "flipbench/kernels.hpp"
#include "flipbench/prng.hpp"

using namespace flipbench;

namespace {

// Scalar that counts every multiply and add it takes part in.
struct Counted {
  double v = 0.0;
  static inline std::uint64_t mults = 0;
  static inline std::uint64_t adds = 0;

  Counted() = default;
  Counted(double x) : v(x) {}  // NOLINT(google-explicit-constructor)

  friend Counted operator*(Counted a, Counted b) {
    ++mults;
    return a.v * b.v;
  }
  friend Counted operator+(Counted a, Counted b) {
    ++adds;
    return a.v + b.v;
  }
  friend Counted operator-(Counted a, Counted b) { return a.v - b.v; }
  Counted& operator+=(Counted o) {
    ++adds;
    v += o.v;
    return *this;
  }
  friend bool operator==(Counted a, Counted b) { return a.v == b.v; }
  friend bool isfinite(Counted c) { return std::isfinite(c.v); }

  static void reset() { mults = adds = 0; }
};

}  // namespace

namespace Eigen {
template <>
struct NumTraits<Counted> : NumTraits<double> {
  using Real = Counted;
  using NonInteger = Counted;
  using Nested = Counted;
  using Literal = Counted;
  enum { IsComplex = 0, IsInteger = 0, IsSigned = 1, RequireInitialization = 1,
         ReadCost = 1, AddCost = 1, MulCost = 1 };
};
}  // namespace Eigen

namespace {

RowMatrix<Counted> counted(const Matrix& m) {
  RowMatrix<Counted> out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.size(); ++i) out.data()[i] = Counted(m.data()[i]);
  return out;
}

}  // namespace

TEST_CASE("dgemm_naive hand-computed 2x2 product") {
  Matrix a(2, 2), b(2, 2), c = Matrix::Zero(2, 2);
  a << 1, 2, 3, 4;
  b << 5, 6, 7, 8;
  dgemm_naive(1.0, a, b, 0.0, c);
  Matrix expected(2, 2);
  expected << 19, 22, 43, 50;
  CHECK(c == expected);
}

TEST_CASE("identity and scalar degeneracies") {
  const Matrix b = gen_random(8, 3);
  const Matrix id = Matrix::Identity(8, 8);

  Matrix c = gen_random(8, 4);
  dgemm_naive(1.0, id, b, 0.0, c);
  CHECK(c == b);

  c = gen_random(8, 4);
  dgemm_blocked(1.0, id, b, 0.0, c, 8);
  CHECK(c == b);

  Matrix c2 = gen_random(8, 4);
  dgemm_blocked(1.0, id, b, 0.0, c2, 3);
  CHECK(c2 == b);

  const Matrix c0 = gen_random(8, 5);
  Matrix c3 = c0;
  dgemm_naive(0.0, gen_random(8, 6), b, 1.0, c3);
  CHECK(c3 == c0);
  Matrix c4 = c0;
  dgemm_blocked(0.0, gen_random(8, 6), b, 1.0, c4, 4);
  CHECK(c4 == c0);
}

TEST_CASE("blocked kernel matches the naive oracle") {
  Xoshiro256 rng(77);
  for (std::size_t n : {4u, 8u, 16u, 33u, 64u}) {
    for (std::size_t block : {std::size_t{1}, std::size_t{4}, std::size_t{8}, n}) {
      if (block > n) continue;
      const Matrix a = gen_random(n, rng());
      const Matrix b = gen_random(n, rng());
      const Matrix c0 = gen_random(n, rng());
      const double alpha = 2.0 * rng.uniform01() - 1.0;
      const double beta = 2.0 * rng.uniform01() - 1.0;
      Matrix ref = c0, got = c0;
      dgemm_naive(alpha, a, b, beta, ref);
      dgemm_blocked(alpha, a, b, beta, got, block);
      CHECK(relative_frobenius_error(got, ref) <= 1e-9);
    }
  }
}

TEST_CASE("kernel errors") {
  Matrix a = gen_random(4, 1), b = gen_random(4, 2), c = gen_random(3, 3);
  CHECK_THROWS_AS(dgemm_naive(1.0, a, b, 0.0, c), std::invalid_argument);
  CHECK_THROWS_AS(dgemm_blocked(1.0, a, b, 0.0, c, 2), std::invalid_argument);
  Matrix c4 = gen_random(4, 3);
  CHECK_THROWS_AS(dgemm_blocked(1.0, a, b, 0.0, c4, 0), std::invalid_argument);
  CHECK_THROWS_AS(dgemm_blocked(1.0, a, b, 0.0, c4, 5), std::invalid_argument);
  CHECK_THROWS_AS(dgemm_naive(NAN, a, b, 0.0, c4), std::invalid_argument);
  Matrix rect(4, 3);
  CHECK_THROWS_AS(dgemm_naive(1.0, rect, b, 0.0, c4), std::invalid_argument);
}

TEST_CASE("flop_count") {
  CHECK(flop_count(1) == 4);
  CHECK(flop_count(2) == 24);
  CHECK(flop_count(2048) == 17'188'257'792ULL);
  for (std::uint64_t n = 1; n < 200; ++n) CHECK(flop_count(n + 1) > flop_count(n));
  CHECK(find_kernel("blocked").flops(64) == flop_count(64));
}

TEST_CASE("operation count does not depend on matrix content") {
  constexpr std::size_t n = 12;
  const InitSpec specs[] = {InitSpec::constant(0.0), InitSpec::constant(0.987),
                            InitSpec::sequential(), InitSpec::random(5),
                            InitSpec::masked(5, 40)};
  for (std::size_t block : {std::size_t{1}, std::size_t{5}, n}) {
    std::uint64_t mults = 0, adds = 0;
    bool first = true;
    for (const auto& spec : specs) {
      const auto ops = generate_operands(n, spec);
      auto a = counted(ops.a), b = counted(ops.b), c = counted(ops.c);
      Counted::reset();
      gemm_blocked<Counted>(Counted(1.0), a, b, Counted(1.0), c, block);
      if (first) {
        mults = Counted::mults;
        adds = Counted::adds;
        first = false;
      }
      CHECK(Counted::mults == mults);
      CHECK(Counted::adds == adds);
    }
    // n^3 products, n^2 beta scalings, and alpha*A(i,k) once per column tile.
    const std::size_t tiles = (n + block - 1) / block;
    CHECK(mults == n * n * n + n * n + n * n * tiles);
    CHECK(adds == n * n * n);
  }

  const auto ops = generate_operands(n, InitSpec::random(9));
  auto a = counted(ops.a), b = counted(ops.b), c = counted(ops.c);
  Counted::reset();
  gemm_naive<Counted>(Counted(2.0), a, b, Counted(0.5), c);
  CHECK(Counted::mults == n * n * n + 2 * n * n);
  CHECK(Counted::adds == n * n * n + n * n);
}

TEST_CASE("kernel lookup by name") {
  CHECK(find_kernel("naive").kind == KernelKind::Naive);
  CHECK(find_kernel("blocked").kind == KernelKind::Blocked);
  CHECK_THROWS_AS(find_kernel("openblas"), InputError);

  const auto ops = generate_operands(16, InitSpec::random(1));
  Matrix ref = ops.c, got = ops.c;
  find_kernel("naive").run(1.0, ops.a, ops.b, 1.0, ref, 4);
  find_kernel("blocked").run(1.0, ops.a, ops.b, 1.0, got, 64);  // block clamps to order
  CHECK(relative_frobenius_error(got, ref) <= 1e-9);
}
