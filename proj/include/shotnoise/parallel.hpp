#ifndef SHOTNOISE_PARALLEL_HPP
#define SHOTNOISE_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace shotnoise {

/// Worker count: SHOTNOISE_THREADS if set and positive, else the hardware concurrency.
inline unsigned thread_count() {
    if (const char* env = std::getenv("SHOTNOISE_THREADS")) {
        try {
            int v = std::stoi(env);
            if (v > 0) return static_cast<unsigned>(v);
        } catch (const std::exception&) {
        }
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/**
 * Runs body(begin, end) over contiguous static chunks of [0, count).
 * Every index is handled by exactly one call, so results written per
 * index do not depend on the thread count.
 */
template <class Body>
void parallel_for(std::size_t count, Body&& body, unsigned threads = thread_count()) {
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
    if (threads <= 1) {
        body(std::size_t{0}, count);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    std::size_t chunk = (count + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
        std::size_t begin = t * chunk;
        std::size_t end = std::min(count, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&, t, begin, end] {
            try {
                body(begin, end);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace shotnoise

#endif  // SHOTNOISE_PARALLEL_HPP
