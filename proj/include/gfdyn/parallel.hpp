#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace gfd {

// runs fn(i) for i in [0, n) on up to `workers` threads; the first exception is rethrown
template <class Fn>
void parallel_for(int n, int workers, Fn&& fn) {
    const int w = std::max(1, std::min(workers, n));
    if (w == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(static_cast<size_t>(w));
    std::vector<std::thread> pool;
    for (int id = 0; id < w; ++id) {
        pool.emplace_back([&, id] {
            try {
                for (int i = id; i < n; i += w) fn(i);
            } catch (...) {
                errors[static_cast<size_t>(id)] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

inline int default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

} // namespace gfd
