#pragma once

#include <cstddef>
#include <functional>

namespace icl_ttc {

// Resolves a requested worker count: 0 means "use ICL_TTC_THREADS, else 1".
std::size_t resolve_threads(std::size_t requested);

// Calls body(i) for every i in [0, count) on up to `threads` workers. Work is
// handed out by index, so results written to slot i do not depend on the
// schedule. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace icl_ttc
