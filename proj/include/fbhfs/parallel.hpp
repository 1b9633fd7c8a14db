#pragma once

#include <cstddef>
#include <functional>

namespace fbhfs {

/// Worker count for numerical kernels: FBHFS_THREADS when set to a positive
/// integer, otherwise the hardware concurrency.
unsigned kernel_threads();

/// Runs body(i) for every i in [begin, end) over contiguous chunks, one per
/// worker. Each index is visited exactly once; callers must write only to
/// locations owned by i so that results do not depend on the worker count.
void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& body);

}  // namespace fbhfs
