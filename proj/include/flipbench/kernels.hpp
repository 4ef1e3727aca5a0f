#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "flipbench/matrix.hpp"

namespace flipbench {

namespace detail {

template <typename Scalar>
void check_gemm_shapes(const RowMatrix<Scalar>& a, const RowMatrix<Scalar>& b,
                       const RowMatrix<Scalar>& c) {
  const auto n = a.rows();
  if (n == 0 || a.cols() != n || b.rows() != n || b.cols() != n || c.rows() != n ||
      c.cols() != n) {
    throw std::invalid_argument("gemm operands must be square matrices of one order");
  }
}

template <typename Scalar>
void check_scalars(const Scalar& alpha, const Scalar& beta) {
  using std::isfinite;
  if (!isfinite(alpha) || !isfinite(beta)) {
    throw std::invalid_argument("gemm scalars must be finite");
  }
}

}  // namespace detail

// C <- alpha * A * B + beta * C with a plain i-j-k triple loop. This is the
// correctness oracle for every other kernel.
template <typename Scalar>
void gemm_naive(const Scalar& alpha, const RowMatrix<Scalar>& a, const RowMatrix<Scalar>& b,
                const Scalar& beta, RowMatrix<Scalar>& c) {
  detail::check_gemm_shapes(a, b, c);
  detail::check_scalars(alpha, beta);
  const Eigen::Index n = a.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      Scalar sum = Scalar(0);
      for (Eigen::Index k = 0; k < n; ++k) sum += a(i, k) * b(k, j);
      c(i, j) = alpha * sum + beta * c(i, j);
    }
  }
}

// Same contract as gemm_naive, computed over block x block tiles in i-k-j
// order so the innermost loop streams one row of B into one row of C.
// Accumulation order differs from the naive kernel.
template <typename Scalar>
void gemm_blocked(const Scalar& alpha, const RowMatrix<Scalar>& a, const RowMatrix<Scalar>& b,
                  const Scalar& beta, RowMatrix<Scalar>& c, std::size_t block) {
  detail::check_gemm_shapes(a, b, c);
  detail::check_scalars(alpha, beta);
  const auto n = static_cast<std::size_t>(a.rows());
  if (block == 0 || block > n) {
    throw std::invalid_argument("block size must be in 1..order");
  }

  Scalar* cp = c.data();
  const Scalar* ap = a.data();
  const Scalar* bp = b.data();
  for (std::size_t idx = 0; idx < n * n; ++idx) cp[idx] = beta * cp[idx];

  for (std::size_t ii = 0; ii < n; ii += block) {
    const std::size_t i_end = std::min(ii + block, n);
    for (std::size_t kk = 0; kk < n; kk += block) {
      const std::size_t k_end = std::min(kk + block, n);
      for (std::size_t jj = 0; jj < n; jj += block) {
        const std::size_t j_end = std::min(jj + block, n);
        for (std::size_t i = ii; i < i_end; ++i) {
          Scalar* __restrict c_row = cp + i * n;
          for (std::size_t k = kk; k < k_end; ++k) {
            const Scalar aik = alpha * ap[i * n + k];
            const Scalar* __restrict b_row = bp + k * n;
            for (std::size_t j = jj; j < j_end; ++j) c_row[j] += aik * b_row[j];
          }
        }
      }
    }
  }
}

inline void dgemm_naive(double alpha, const Matrix& a, const Matrix& b, double beta, Matrix& c) {
  gemm_naive<double>(alpha, a, b, beta, c);
}

inline void dgemm_blocked(double alpha, const Matrix& a, const Matrix& b, double beta, Matrix& c,
                          std::size_t block) {
  gemm_blocked<double>(alpha, a, b, beta, c, block);
}

// 2 N^3 multiply-adds plus 2 N^2 for the alpha/beta scaling.
constexpr std::uint64_t flop_count(std::uint64_t order) {
  return 2 * order * order * order + 2 * order * order;
}

// Relative Frobenius distance ||x - ref||_F / ||ref||_F (absolute when ref is 0).
template <typename Derived, typename OtherDerived>
double relative_frobenius_error(const Eigen::MatrixBase<Derived>& x,
                                const Eigen::MatrixBase<OtherDerived>& ref) {
  const double diff = (x - ref).norm();
  const double scale = ref.norm();
  return scale == 0.0 ? diff : diff / scale;
}

enum class KernelKind { Naive, Blocked };

// A selectable double-precision kernel.
struct KernelDescriptor {
  std::string name;
  KernelKind kind = KernelKind::Blocked;

  std::uint64_t flops(std::uint64_t order) const { return flop_count(order); }
  void run(double alpha, const Matrix& a, const Matrix& b, double beta, Matrix& c,
           std::size_t block) const;
};

// Looks a kernel up by CLI name ("naive" or "blocked"); throws InputError otherwise.
//
// External BLAS hook (not built): add a KernelKind, resolve `cblas_dgemm`
// with dlopen/dlsym in find_kernel, and call it with CblasRowMajor from
// KernelDescriptor::run. The harness only sees the descriptor, so timing and
// traces need no change.
KernelDescriptor find_kernel(std::string_view name);

}  // namespace flipbench
