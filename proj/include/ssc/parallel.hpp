#pragma once

#include <cstddef>
#include <functional>

namespace ssc {

// Worker count for parallel sections: OCC_THREADS when set and nonzero,
// otherwise the hardware concurrency.
int worker_count();

// Runs fn(chunk_index, begin, end) over [0, n) split into fixed-size chunks.
// Chunk boundaries depend only on n and chunk_size, never on the worker
// count, so chunk-local results (merged afterwards in chunk order) are
// bit-identical for any number of threads.
void parallel_chunks(std::size_t n, std::size_t chunk_size,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

inline std::size_t chunk_count(std::size_t n, std::size_t chunk_size) {
    return chunk_size == 0 ? 0 : (n + chunk_size - 1) / chunk_size;
}

}  // namespace ssc
