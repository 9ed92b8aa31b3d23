#pragma once

#include "triage/kernels.hpp"

namespace triage::kernels::detail {

extern const KernelTable kScalarTable;

#if defined(TRIAGE_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif

}  // namespace triage::kernels::detail
