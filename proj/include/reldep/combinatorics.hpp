#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace reldep::detail {

/// C(n, k) in double; exact for every value used as a divisor here (< 2^53).
inline double binomial(std::size_t n, std::size_t k) noexcept {
    if (k > n) return 0.0;
    if (k > n - k) k = n - k;
    double r = 1.0;
    for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    return std::round(r);
}

inline double factorial(int m) noexcept {
    double r = 1.0;
    for (int i = 2; i <= m; ++i) r *= i;
    return r;
}

/// Calls f(span of k increasing indices drawn from [0, n), skipping `skip`)
/// for every k-subset. Pass skip = n to skip nothing.
template <typename F>
void for_each_combination(std::size_t n, std::size_t k, std::size_t skip, F&& f) {
    std::vector<std::size_t> pool;
    pool.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        if (i != skip) pool.push_back(i);
    const std::size_t N = pool.size();
    if (k > N) return;
    std::vector<std::size_t> pos(k);
    std::vector<std::size_t> out(k);
    for (std::size_t i = 0; i < k; ++i) pos[i] = i;
    while (true) {
        for (std::size_t i = 0; i < k; ++i) out[i] = pool[pos[i]];
        f(std::span<const std::size_t>(out));
        // Advance to the next subset in lexicographic order.
        std::size_t i = k;
        while (i > 0 && pos[i - 1] == N - k + i - 1) --i;
        if (i == 0) return;
        ++pos[i - 1];
        for (std::size_t t = i; t < k; ++t) pos[t] = pos[t - 1] + 1;
    }
}

/// Integer partitions of m as nonincreasing part lists.
inline std::vector<std::vector<int>> integer_partitions(int m) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    auto rec = [&](auto&& self, int remaining, int max_part) -> void {
        if (remaining == 0) {
            out.push_back(cur);
            return;
        }
        for (int part = std::min(remaining, max_part); part >= 1; --part) {
            cur.push_back(part);
            self(self, remaining - part, part);
            cur.pop_back();
        }
    };
    rec(rec, m, m);
    return out;
}

} // namespace reldep::detail
