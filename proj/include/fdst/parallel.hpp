#pragma once

#include <cstddef>
#include <functional>

namespace fdst {

/// Sets the number of worker threads used by inner kernels. Values < 1 are
/// treated as 1. The setting is process-wide.
void set_thread_count(int threads);
int thread_count();

/// Runs body(begin, end) over [0, count) split into chunks of exactly `grain`
/// items (the last chunk may be shorter). Chunk boundaries depend only on
/// count and grain, never on the thread count, and each chunk is processed
/// by exactly one thread, so kernels that write disjoint outputs per chunk
/// produce bit-identical results for any thread count.
void parallel_for_chunks(std::size_t count, std::size_t grain,
                         const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace fdst
