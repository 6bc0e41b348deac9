#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace fluxgauge {

/// Worker count: hardware concurrency capped by FLUXGAUGE_THREADS.
inline unsigned worker_count() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("FLUXGAUGE_THREADS")) {
        try {
            const long cap = std::stol(env);
            if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
        } catch (...) {
        }
    }
    return n;
}

/// Runs body(chunk_begin, chunk_end, chunk_index) over fixed-size chunks of [0, n).
/// Chunk boundaries depend only on n and chunk_size, so per-chunk partial results
/// merged in chunk order are independent of the thread count.
template <class Body>
void for_each_chunk(std::size_t n, std::size_t chunk_size, Body&& body) {
    if (n == 0) return;
    chunk_size = std::max<std::size_t>(1, chunk_size);
    const std::size_t chunks = (n + chunk_size - 1) / chunk_size;
    const unsigned workers = std::min<std::size_t>(worker_count(), chunks);
    auto run = [&](std::size_t c) {
        const std::size_t b = c * chunk_size;
        body(b, std::min(n, b + chunk_size), c);
    };
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) run(c);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t c = next++; c < chunks; c = next++) run(c);
        });
    for (auto& t : pool) t.join();
}

template <class Body>
void parallel_for(std::size_t n, Body&& body) {
    for_each_chunk(n, 4096, [&](std::size_t b, std::size_t e, std::size_t) {
        for (std::size_t i = b; i < e; ++i) body(i);
    });
}

}  // namespace fluxgauge
