#include "ssc/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace ssc {

int worker_count() {
    if (const char* env = std::getenv("OCC_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<int>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_chunks(std::size_t n, std::size_t chunk_size,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    const std::size_t chunks = chunk_count(n, chunk_size);
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(worker_count()), chunks);

    auto run_chunk = [&](std::size_t c) {
        const std::size_t begin = c * chunk_size;
        const std::size_t end = std::min(n, begin + chunk_size);
        fn(c, begin, end);
    };

    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
        pool.emplace_back([&] {
            for (std::size_t c = next.fetch_add(1); c < chunks; c = next.fetch_add(1)) {
                run_chunk(c);
            }
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace ssc
