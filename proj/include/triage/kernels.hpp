#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

// Data-parallel inner loops shared by the featurizers and the linear model.
// Every kernel has a scalar reference implementation; vectorized variants are
// selected at runtime when the CPU supports them and are tested for
// equivalence against the reference.

namespace triage::kernels {

enum class Backend { kScalar, kAvx2 };

struct KernelTable {
  Backend backend;
  std::string_view name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // x *= alpha
  void (*scale)(double alpha, double* x, std::size_t n);
  // sum_k dense[index[k]] * value[k]
  double (*sparse_dot)(const double* dense, const std::uint32_t* index, const double* value,
                       std::size_t nnz);
};

const KernelTable& scalar_table();

/// nullptr when the variant was not compiled in or the CPU lacks the feature.
const KernelTable* avx2_table();

/// Best available backend, overridable with TRIAGE_KERNELS=scalar|avx2.
const KernelTable& active();

/// Forces a backend for the process. Throws UsageError if unavailable.
void select(Backend backend);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

inline void scale(double alpha, std::span<double> x) { active().scale(alpha, x.data(), x.size()); }

inline double sparse_dot(std::span<const double> dense, std::span<const std::uint32_t> index,
                         std::span<const double> value) {
  return active().sparse_dot(dense.data(), index.data(), value.data(), index.size());
}

}  // namespace triage::kernels
