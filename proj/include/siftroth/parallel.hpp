#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace siftroth {

/// Resolves a requested thread count; 0 means "all hardware threads".
inline unsigned resolve_threads(unsigned requested) noexcept
{
    if (requested != 0)
        return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// Runs body(i) for every i in [begin, end), split into contiguous chunks.
/// body must only write state owned by index i; results are then independent
/// of the thread count.
template <typename Body>
void parallel_for(std::int64_t begin, std::int64_t end, unsigned threads, Body&& body)
{
    if (end <= begin)
        return;
    const std::int64_t n = end - begin;
    const auto workers = static_cast<std::int64_t>(std::min<std::int64_t>(resolve_threads(threads), n));
    if (workers <= 1) {
        for (std::int64_t i = begin; i < end; ++i)
            body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    pool.reserve(static_cast<std::size_t>(workers));
    for (std::int64_t w = 0; w < workers; ++w) {
        const std::int64_t lo = begin + n * w / workers;
        const std::int64_t hi = begin + n * (w + 1) / workers;
        pool.emplace_back([&, lo, hi, w] {
            try {
                for (std::int64_t i = lo; i < hi; ++i)
                    body(i);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool)
        t.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

} // namespace siftroth
