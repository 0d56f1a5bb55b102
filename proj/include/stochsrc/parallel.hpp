#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace stochsrc {

/// Runs fn(worker, i) for i in [0, count). Work items must write only to their own slots so the
/// result does not depend on the thread count. The first exception is rethrown on the caller.
template <class Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
    const std::size_t nt = std::max<std::size_t>(1, std::min<std::size_t>(std::size_t(std::max(threads, 1)), count));
    if (nt <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(std::size_t(0), i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_m;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < nt; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = next++; i < count; i = next++) fn(w, i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_m);
                if (!err) err = std::current_exception();
                next = count;
            }
        });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

inline std::size_t worker_count(std::size_t count, int threads) {
    return std::max<std::size_t>(1, std::min<std::size_t>(std::size_t(std::max(threads, 1)), count));
}

/// Pairwise summation; the grouping depends only on the length.
inline double pairwise_sum(const double* x, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::size_t m = n / 2;
    return pairwise_sum(x, m) + pairwise_sum(x + m, n - m);
}

inline double pairwise_sum(const std::vector<double>& x) { return pairwise_sum(x.data(), x.size()); }

} // namespace stochsrc
