#pragma once

#include <cstring>

#include "tiermem/simd.hpp"

namespace tiermem::simd {

#if defined(TIERMEM_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

}  // namespace tiermem::simd
