#pragma once

// O(n log n) and bit-parallel evaluation of the sign-based statistics
// (Kendall's tau and the Spearman dominating term). All routines return exact
// integer concordance sums; callers divide once so results match the naive
// enumeration bit for bit.

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "reldep/sample.hpp"

namespace reldep::fast {

namespace detail {

// Counts strict inversions (i < j, v[i] > v[j]) while merge-sorting v.
inline std::int64_t merge_count(std::vector<double>& v, std::vector<double>& buf, std::size_t lo,
                                std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::int64_t swaps = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
    std::size_t a = lo, b = mid, o = lo;
    while (a < mid && b < hi) {
        if (v[b] < v[a]) {
            swaps += static_cast<std::int64_t>(mid - a);
            buf[o++] = v[b++];
        } else {
            buf[o++] = v[a++];
        }
    }
    while (a < mid) buf[o++] = v[a++];
    while (b < hi) buf[o++] = v[b++];
    std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
              v.begin() + static_cast<std::ptrdiff_t>(lo));
    return swaps;
}

inline std::int64_t tied_pairs_sorted(std::span<const double> sorted) {
    std::int64_t total = 0;
    std::size_t run = 1;
    for (std::size_t k = 1; k <= sorted.size(); ++k) {
        if (k < sorted.size() && sorted[k] == sorted[k - 1]) {
            ++run;
        } else {
            total += static_cast<std::int64_t>(run * (run - 1) / 2);
            run = 1;
        }
    }
    return total;
}

} // namespace detail

/// Sum over k < l of sign(u_k - u_l) sign(v_k - v_l), by inversion counting.
inline std::int64_t kendall_sign_sum(std::span<const double> u, std::span<const double> v) {
    const std::size_t n = u.size();
    if (n < 2) return 0;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return u[a] < u[b] || (u[a] == u[b] && v[a] < v[b]);
    });

    std::int64_t tied_u = 0;
    std::int64_t tied_uv = 0;
    std::size_t run_u = 1, run_uv = 1;
    for (std::size_t k = 1; k <= n; ++k) {
        const bool same_u = k < n && u[order[k]] == u[order[k - 1]];
        const bool same_uv = same_u && v[order[k]] == v[order[k - 1]];
        if (same_u) {
            ++run_u;
        } else {
            tied_u += static_cast<std::int64_t>(run_u * (run_u - 1) / 2);
            run_u = 1;
        }
        if (same_uv) {
            ++run_uv;
        } else {
            tied_uv += static_cast<std::int64_t>(run_uv * (run_uv - 1) / 2);
            run_uv = 1;
        }
    }

    std::vector<double> seq(n);
    for (std::size_t k = 0; k < n; ++k) seq[k] = v[order[k]];
    std::vector<double> buf(n);
    const std::int64_t discordant = detail::merge_count(seq, buf, 0, n);
    const std::int64_t tied_v = detail::tied_pairs_sorted(seq);

    const auto total = static_cast<std::int64_t>(n * (n - 1) / 2);
    return total - tied_u - tied_v + tied_uv - 2 * discordant;
}

/// A_k = #{l : u_l < u_k} - #{l : u_l > u_k} for every k, i.e. sum_l sign(u_k - u_l).
inline std::vector<std::int64_t> sign_row_sums(std::span<const double> u) {
    const std::size_t n = u.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return u[a] < u[b]; });
    std::vector<std::int64_t> out(n);
    std::size_t start = 0;
    while (start < n) {
        std::size_t end = start + 1;
        while (end < n && u[order[end]] == u[order[start]]) ++end;
        const auto less = static_cast<std::int64_t>(start);
        const auto greater = static_cast<std::int64_t>(n - end);
        for (std::size_t t = start; t < end; ++t) out[order[t]] = less - greater;
        start = end;
    }
    return out;
}

/// Sum over ordered distinct triples (k, l, r) of sign(u_k - u_l) sign(v_k - v_r),
/// via sum_k A_k B_k minus the l == r diagonal.
inline std::int64_t spearman_triple_sum(std::span<const std::int64_t> a, std::span<const std::int64_t> b,
                                        std::int64_t kendall_sum) {
    std::int64_t ab = 0;
    for (std::size_t k = 0; k < a.size(); ++k) ab += a[k] * b[k];
    return ab - 2 * kendall_sum;
}

/// Packed pairwise sign information for every column, over the n(n-1)/2
/// row pairs (k < l). Pair (i, j) sums reduce to word-wise popcounts.
class TriangleSigns {
public:
    explicit TriangleSigns(const Sample& s) : n_(s.n()), p_(s.p()) {
        const std::size_t pairs = n_ * (n_ - 1) / 2;
        words_ = (pairs + 63) / 64;
        gt_.assign(words_ * p_, 0);
        nz_.assign(words_ * p_, 0);
        for (std::size_t c = 0; c < p_; ++c) {
            const auto col = s.col(c);
            std::uint64_t* gt = gt_.data() + c * words_;
            std::uint64_t* nz = nz_.data() + c * words_;
            std::size_t bit = 0;
            for (std::size_t k = 0; k + 1 < n_; ++k) {
                const double x = col[k];
                for (std::size_t l = k + 1; l < n_; ++l, ++bit) {
                    const std::uint64_t mask = std::uint64_t{1} << (bit & 63);
                    if (x > col[l]) gt[bit >> 6] |= mask;
                    if (x != col[l]) nz[bit >> 6] |= mask;
                }
            }
        }
    }

    /// Sum over k < l of sign(X_ki - X_li) sign(X_kj - X_lj); zero-based columns.
    [[nodiscard]] std::int64_t sign_sum(std::size_t i, std::size_t j) const noexcept {
        const std::uint64_t* gi = gt_.data() + i * words_;
        const std::uint64_t* gj = gt_.data() + j * words_;
        const std::uint64_t* zi = nz_.data() + i * words_;
        const std::uint64_t* zj = nz_.data() + j * words_;
        std::int64_t both = 0;
        std::int64_t differ = 0;
        for (std::size_t w = 0; w < words_; ++w) {
            const std::uint64_t z = zi[w] & zj[w];
            both += std::popcount(z);
            differ += std::popcount((gi[w] ^ gj[w]) & z);
        }
        return both - 2 * differ;
    }

    static std::size_t bytes_needed(std::size_t n, std::size_t p) noexcept {
        return 2 * 8 * p * ((n * (n - 1) / 2 + 63) / 64);
    }

private:
    std::size_t n_;
    std::size_t p_;
    std::size_t words_{};
    std::vector<std::uint64_t> gt_;
    std::vector<std::uint64_t> nz_;
};

/// Per-row packed signs: for column c and row k, bits over l of
/// X_kc > X_lc and X_kc != X_lc. Gives the leave-one-out sums
/// S_k = sum_l sign(X_ki - X_li) sign(X_kj - X_lj) needed by the jackknife.
class RowSigns {
public:
    explicit RowSigns(const Sample& s) : n_(s.n()), p_(s.p()), words_((s.n() + 63) / 64) {
        gt_.assign(p_ * n_ * words_, 0);
        nz_.assign(p_ * n_ * words_, 0);
        for (std::size_t c = 0; c < p_; ++c) {
            const auto col = s.col(c);
            for (std::size_t k = 0; k < n_; ++k) {
                std::uint64_t* gt = gt_.data() + (c * n_ + k) * words_;
                std::uint64_t* nz = nz_.data() + (c * n_ + k) * words_;
                const double x = col[k];
                for (std::size_t l = 0; l < n_; ++l) {
                    const std::uint64_t mask = std::uint64_t{1} << (l & 63);
                    if (x > col[l]) gt[l >> 6] |= mask;
                    if (x != col[l]) nz[l >> 6] |= mask;
                }
            }
        }
    }

    /// Fills out[k] = S_k for zero-based columns i, j.
    void row_sums(std::size_t i, std::size_t j, std::span<std::int64_t> out) const noexcept {
        for (std::size_t k = 0; k < n_; ++k) {
            const std::uint64_t* gi = gt_.data() + (i * n_ + k) * words_;
            const std::uint64_t* gj = gt_.data() + (j * n_ + k) * words_;
            const std::uint64_t* zi = nz_.data() + (i * n_ + k) * words_;
            const std::uint64_t* zj = nz_.data() + (j * n_ + k) * words_;
            std::int64_t both = 0;
            std::int64_t differ = 0;
            for (std::size_t w = 0; w < words_; ++w) {
                const std::uint64_t z = zi[w] & zj[w];
                both += std::popcount(z);
                differ += std::popcount((gi[w] ^ gj[w]) & z);
            }
            out[k] = both - 2 * differ;
        }
    }

    static std::size_t bytes_needed(std::size_t n, std::size_t p) noexcept {
        return 2 * 8 * p * n * ((n + 63) / 64);
    }

private:
    std::size_t n_;
    std::size_t p_;
    std::size_t words_;
    std::vector<std::uint64_t> gt_;
    std::vector<std::uint64_t> nz_;
};

} // namespace reldep::fast
