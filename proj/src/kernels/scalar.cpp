#include "kernels_internal.hpp"

namespace triage::kernels::detail {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_scalar(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

double sparse_dot_scalar(const double* dense, const std::uint32_t* index, const double* value,
                         std::size_t nnz) {
  double sum = 0.0;
  for (std::size_t k = 0; k < nnz; ++k) sum += dense[index[k]] * value[k];
  return sum;
}

}  // namespace

const KernelTable kScalarTable{Backend::kScalar, "scalar", dot_scalar, axpy_scalar, scale_scalar,
                               sparse_dot_scalar};

}  // namespace triage::kernels::detail
