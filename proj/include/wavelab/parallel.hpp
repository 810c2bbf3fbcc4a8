#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace wavelab {

// Worker count used by every parallel loop in the library. Results never
// depend on it: loops write per-index slots and reductions run in index order.
int thread_count();
void set_thread_count(int n);

template <class F>
void parallel_for(std::size_t count, F&& body)
{
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < count; i += workers) body(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace wavelab
