#pragma once

// Index-parallel map with a bounded worker count. Results land at their own
// index, so the merged vector is independent of scheduling; the exception of
// the lowest failing index is rethrown.

#include <atomic>
#include <exception>
#include <optional>
#include <thread>
#include <vector>

namespace ssea::cli {

template <typename R, typename F>
std::vector<R> parallel_map(std::size_t n, int jobs, F&& fn) {
    std::vector<std::optional<R>> slot(n);
    std::vector<std::exception_ptr> err(n);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                slot[i].emplace(fn(i));
            } catch (...) {
                err[i] = std::current_exception();
            }
        }
    };
    const std::size_t w = std::min<std::size_t>(n, jobs > 1 ? std::size_t(jobs) : 1);
    if (w <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < w; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    for (auto& e : err)
        if (e) std::rethrow_exception(e);
    std::vector<R> out;
    out.reserve(n);
    for (auto& s : slot) out.push_back(std::move(*s));
    return out;
}

}  // namespace ssea::cli
