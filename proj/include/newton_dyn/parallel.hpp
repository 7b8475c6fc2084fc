#pragma once

#include <cstddef>
#include <functional>

namespace newton_dyn {

// Positive values are taken as is; 0 means one worker per hardware thread.
int resolve_threads(int requested);

// Runs body(i) for i in [0, n) on up to `threads` workers. Results must be
// written to per-index slots so the outcome does not depend on scheduling.
// The exception thrown for the lowest index, if any, is rethrown.
void parallel_for(size_t n, int threads, const std::function<void(size_t)>& body);

}  // namespace newton_dyn
