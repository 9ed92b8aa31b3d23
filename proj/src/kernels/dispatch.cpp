#include <atomic>
#include <cstdlib>
#include <string>

#include "kernels_internal.hpp"
#include "triage/error.hpp"

namespace triage::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(TRIAGE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* initial_table() {
  const KernelTable* best = avx2_table();
  if (const char* forced = std::getenv("TRIAGE_KERNELS")) {
    const std::string name = forced;
    if (name == "scalar") return &scalar_table();
    if (name == "avx2" && best != nullptr) return best;
  }
  return best != nullptr ? best : &scalar_table();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

const KernelTable& scalar_table() { return detail::kScalarTable; }

const KernelTable* avx2_table() {
#if defined(TRIAGE_HAVE_AVX2)
  static const bool supported = cpu_has_avx2();
  return supported ? &detail::kAvx2Table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void select(Backend backend) {
  const KernelTable* table = backend == Backend::kScalar ? &scalar_table() : avx2_table();
  if (table == nullptr) throw UsageError("kernel backend not available on this CPU/build");
  current().store(table, std::memory_order_release);
}

}  // namespace triage::kernels
