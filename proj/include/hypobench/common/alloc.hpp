#pragma once

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace hypobench {

/// Keeps large training buffers in the heap between steps instead of
/// returning them to the kernel, which would page-fault them in again on
/// every step. No-op outside glibc.
inline void tune_allocator() {
#if defined(__GLIBC__)
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

}  // namespace hypobench
