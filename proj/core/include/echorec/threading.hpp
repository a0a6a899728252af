#pragma once

#include <cstddef>
#include <functional>

namespace echorec {

/// Worker count: ECHOREC_THREADS when set, else hardware concurrency.
size_t worker_count();

/// Runs fn(i) for i in [0, n) across workers. Iterations must be
/// independent; results land in caller-owned slots so output order does not
/// depend on scheduling.
void parallel_for(size_t n, const std::function<void(size_t)>& fn);

}  // namespace echorec
