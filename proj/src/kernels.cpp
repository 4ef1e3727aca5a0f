#include "flipbench/kernels.hpp"

#include "flipbench/error.hpp"

namespace flipbench {

void KernelDescriptor::run(double alpha, const Matrix& a, const Matrix& b, double beta,
                           Matrix& c, std::size_t block) const {
  switch (kind) {
    case KernelKind::Naive:
      dgemm_naive(alpha, a, b, beta, c);
      break;
    case KernelKind::Blocked:
      dgemm_blocked(alpha, a, b, beta, c, std::min<std::size_t>(block, a.rows()));
      break;
  }
}

KernelDescriptor find_kernel(std::string_view name) {
  if (name == "naive") return {"naive", KernelKind::Naive};
  if (name == "blocked") return {"blocked", KernelKind::Blocked};
  throw InputError("unknown kernel '" + std::string(name) + "' (expected naive|blocked)");
}

}  // namespace flipbench
