#pragma once

#include <cstddef>
#include <functional>

namespace vmer {

/// Environment variable holding the default worker count.
inline constexpr const char* kWorkersEnv = "VMER_WORKERS";

/// VMER_WORKERS if set to a positive integer, otherwise hardware concurrency.
unsigned default_workers();

/// Runs body(i) for i in [0, n) on up to `workers` threads (0 = default).
/// Each index runs exactly once; the first exception thrown is rethrown after
/// all threads join.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body);

}  // namespace vmer
