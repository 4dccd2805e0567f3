#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace boundshift {

// SplitMix64 mixing of (master, stream, index). Used to give every Monte Carlo
// iteration or ensemble pair its own reproducible random stream.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

// Runs body(i) for i in [0, count) on up to `threads` workers. Work is handed
// out in index order; callers write results by index so the outcome does not
// depend on scheduling. threads <= 1 runs inline.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

unsigned default_thread_count();

}  // namespace boundshift
