#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <thread>
#include <vector>

namespace dnnaf {

// Pairwise (tree) summation: O(log n) error growth instead of O(n).
// Used for every O(n^2) KDE accumulation and Monte Carlo average so results
// stay bit-stable under the documented evaluation order.
inline double pairwise_sum(std::span<const double> x) {
    if (x.size() <= 8) {
        double s = 0.0;
        for (double v : x) s += v;
        return s;
    }
    const std::size_t half = x.size() / 2;
    return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

inline double pairwise_sum(const std::vector<double>& x) {
    return pairwise_sum(std::span<const double>(x));
}

inline double mean(std::span<const double> x) {
    return x.empty() ? 0.0 : pairwise_sum(x) / double(x.size());
}

// Linear-interpolation quantile (the numpy default). q in [0,1], x sorted.
inline double quantile_sorted(std::span<const double> x, double q) {
    if (x.empty()) return 0.0;
    if (x.size() == 1) return x[0];
    const double pos = q * double(x.size() - 1);
    const std::size_t lo = std::size_t(pos);
    if (lo + 1 >= x.size()) return x[x.size() - 1];
    const double frac = pos - double(lo);
    return x[lo] + frac * (x[lo + 1] - x[lo]);
}

// Chunked parallel map over [0, n). Each worker owns a disjoint index range
// and writes only to its own slots, so the result is identical for any thread
// count — the basis of the determinism-under---threads guarantee.
inline void parallel_for(std::size_t n, unsigned threads,
                         const std::function<void(std::size_t, std::size_t)>& body) {
    if (threads <= 1 || n < 2) {
        body(0, n);
        return;
    }
    if (threads > n) threads = unsigned(n);
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
        const std::size_t begin = std::size_t(t) * chunk;
        const std::size_t end = begin + chunk < n ? begin + chunk : n;
        if (begin >= end) break;
        pool.emplace_back([&body, begin, end] { body(begin, end); });
    }
    for (auto& th : pool) th.join();
}

inline unsigned default_threads() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

} // namespace dnnaf
