#pragma once

// Pairwise U- and V-statistics with jackknife variance estimates. The naive
// enumeration routines are the reference; ustat_matrix switches to exact fast
// paths for the covariance, Kendall and Spearman kernels.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reldep/combinatorics.hpp"
#include "reldep/errors.hpp"
#include "reldep/kernels.hpp"
#include "reldep/rank_fast.hpp"
#include "reldep/sample.hpp"

namespace reldep {

struct UStatOptions {
    /// Maximum kernel terms a naive enumeration may sum per pair; one
    /// evaluation of an order-m permutation kernel counts as its m! terms.
    double enumeration_cap = 1e7;
    /// Packed-sign tables are used only below this footprint.
    std::size_t fast_memory_limit = std::size_t{64} << 20;
};

struct UStatResult {
    KernelId kernel{};
    std::size_t n = 0;
    std::size_t p = 0;
    std::vector<double> u;      // vech order
    std::vector<double> sigma2; // jackknife variances; empty when n <= m

    [[nodiscard]] std::size_t d() const noexcept { return u.size(); }
};

namespace detail {

inline void require_columns(const Sample& s, std::size_t i, std::size_t j) {
    if (i >= s.p() || j >= s.p() || i == j)
        throw UsageError("column pair (" + std::to_string(i) + "," + std::to_string(j) +
                         ") invalid for p = " + std::to_string(s.p()));
}

inline void require_rows(const Sample& s, KernelId k) {
    const auto m = static_cast<std::size_t>(kernel_order(k));
    if (s.n() < m)
        throw UsageError("kernel '" + std::string(kernel_name(k)) + "' needs n >= " +
                         std::to_string(m) + ", got n = " + std::to_string(s.n()));
}

// Terms summed inside one kernel evaluation.
inline double evaluation_cost(KernelId k) noexcept {
    switch (k) {
    case KernelId::SpearmanHat: return 6.0;
    case KernelId::TauStar: return 24.0;
    case KernelId::HoeffdingD: return 120.0;
    case KernelId::BkrR: return 720.0;
    default: return 1.0;
    }
}

inline void check_cap(double evaluations, const UStatOptions& opt, KernelId k) {
    const double work = evaluations * evaluation_cost(k);
    if (work > opt.enumeration_cap) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "' needs %.3g kernel terms per pair, above the cap of %.3g", work,
                      opt.enumeration_cap);
        throw ResourceError("enumerating kernel '" + std::string(kernel_name(k)) + buf +
                            "; use a smaller n or the kendall kernel");
    }
}

inline std::vector<PairPoint> pair_points(const Sample& s, std::size_t i, std::size_t j) {
    const auto a = s.col(i);
    const auto b = s.col(j);
    std::vector<PairPoint> pts(s.n());
    for (std::size_t k = 0; k < s.n(); ++k) pts[k] = {a[k], b[k]};
    return pts;
}

inline double jackknife_from_q(std::span<const double> q, double u, int m) {
    const auto n = static_cast<double>(q.size());
    double ss = 0.0;
    for (double qk : q) ss += (qk - u) * (qk - u);
    const double md = m;
    return md * md * (n - 1.0) / (n * (n - md) * (n - md)) * ss;
}

inline double kendall_from_sum(std::int64_t sign_sum, std::size_t n) {
    return static_cast<double>(sign_sum) / binomial(n, 2);
}

inline double spearman_from_triple_sum(std::int64_t triple_sum, std::size_t n) {
    const double nd = static_cast<double>(n);
    return static_cast<double>(3 * triple_sum) / (nd * (nd - 1.0) * (nd - 2.0));
}

} // namespace detail

/// Average of the kernel over all m-subsets of rows, on zero-based columns i, j.
inline double ustat_naive(const Sample& s, KernelId k, std::size_t i, std::size_t j,
                          const UStatOptions& opt = {}) {
    detail::require_columns(s, i, j);
    detail::require_rows(s, k);
    const auto m = static_cast<std::size_t>(kernel_order(k));
    const double count = detail::binomial(s.n(), m);
    detail::check_cap(count, opt, k);
    const auto pts = detail::pair_points(s, i, j);
    std::vector<PairPoint> sub(m);
    double sum = 0.0;
    detail::for_each_combination(s.n(), m, s.n(), [&](std::span<const std::size_t> idx) {
        for (std::size_t a = 0; a < m; ++a) sub[a] = pts[idx[a]];
        sum += eval_kernel(k, sub);
    });
    return sum / count;
}

/// q_k: the kernel averaged over (m-1)-subsets of the other rows, with row
/// `row` (zero-based) as the first argument.
inline double loo_kernel_mean(const Sample& s, KernelId k, std::size_t i, std::size_t j, std::size_t row,
                              const UStatOptions& opt = {}) {
    detail::require_columns(s, i, j);
    detail::require_rows(s, k);
    if (row >= s.n())
        throw UsageError("row " + std::to_string(row) + " outside sample of n = " + std::to_string(s.n()));
    const auto m = static_cast<std::size_t>(kernel_order(k));
    const double count = detail::binomial(s.n() - 1, m - 1);
    detail::check_cap(count, opt, k);
    const auto pts = detail::pair_points(s, i, j);
    std::vector<PairPoint> sub(m);
    sub[0] = pts[row];
    double sum = 0.0;
    detail::for_each_combination(s.n(), m - 1, row, [&](std::span<const std::size_t> idx) {
        for (std::size_t a = 0; a + 1 < m; ++a) sub[a + 1] = pts[idx[a]];
        sum += eval_kernel(k, sub);
    });
    return sum / count;
}

/// Jackknife variance of U_ij: m^2 (n-1) / (n (n-m)^2) * sum_k (q_k - U)^2.
inline double jackknife_sigma2(const Sample& s, KernelId k, std::size_t i, std::size_t j,
                               const UStatOptions& opt = {}) {
    const int m = kernel_order(k);
    if (s.n() <= static_cast<std::size_t>(m))
        throw UsageError("jackknife variance needs n > " + std::to_string(m) + ", got n = " +
                         std::to_string(s.n()));
    detail::check_cap(static_cast<double>(s.n()) * detail::binomial(s.n() - 1, m - 1), opt, k);
    const double u = ustat_naive(s, k, i, j, opt);
    std::vector<double> q(s.n());
    for (std::size_t r = 0; r < s.n(); ++r) q[r] = loo_kernel_mean(s, k, i, j, r, opt);
    return detail::jackknife_from_q(q, u, m);
}

/// Kernel evaluations the set-partition expansion of the V-statistic performs.
inline double vstat_partition_cost(std::size_t n, int m) {
    double total = 0.0;
    for (const auto& parts : detail::integer_partitions(m)) {
        const auto b = parts.size();
        double arrangements = detail::factorial(static_cast<int>(b));
        for (std::size_t a = 0; a < b;) {
            std::size_t c = a;
            while (c < b && parts[c] == parts[a]) ++c;
            arrangements /= detail::factorial(static_cast<int>(c - a));
            a = c;
        }
        total += detail::binomial(n, b) * arrangements;
    }
    return total;
}

/// V-statistic n^{-m} sum over all index tuples, by expanding the tuple sum
/// over equality patterns. Patterns with the same block-size profile share
/// one value by symmetry, so each profile is enumerated once over row subsets
/// and weighted by m! / prod(block sizes!).
inline double vstat_partition(const Sample& s, KernelId k, std::size_t i, std::size_t j,
                              const UStatOptions& opt = {}) {
    detail::require_columns(s, i, j);
    const int m = kernel_order(k);
    const std::size_t n = s.n();
    if (n < 1) throw UsageError("V-statistic needs n >= 1");
    detail::check_cap(vstat_partition_cost(n, m), opt, k);
    const auto pts = detail::pair_points(s, i, j);
    std::vector<PairPoint> args(static_cast<std::size_t>(m));

    double total = 0.0;
    for (const auto& parts : detail::integer_partitions(m)) {
        const std::size_t b = parts.size();
        if (b > n) continue;
        double weight = detail::factorial(m);
        for (int part : parts) weight /= detail::factorial(part);

        std::vector<int> labels(parts.rbegin(), parts.rend()); // ascending for next_permutation
        double block_sum = 0.0;
        detail::for_each_combination(n, b, n, [&](std::span<const std::size_t> rows) {
            std::vector<int> lab = labels;
            do {
                std::size_t pos = 0;
                for (std::size_t t = 0; t < b; ++t)
                    for (int r = 0; r < lab[t]; ++r) args[pos++] = pts[rows[t]];
                block_sum += eval_kernel(k, args);
            } while (std::next_permutation(lab.begin(), lab.end()));
        });
        total += weight * block_sum;
    }
    return total / std::pow(static_cast<double>(n), m);
}

/// V-statistic on zero-based columns i, j. Order-2 kernels use
/// V = (sum_k h(X_k, X_k) + n(n-1) U) / n^2; Kendall's kernel vanishes on the
/// diagonal so V = (n-1)/n U.
inline double vstat(const Sample& s, KernelId k, std::size_t i, std::size_t j, const UStatOptions& opt = {}) {
    detail::require_columns(s, i, j);
    const std::size_t n = s.n();
    if (n < 1) throw UsageError("V-statistic needs n >= 1");
    if (kernel_order(k) != 2) return vstat_partition(s, k, i, j, opt);
    if (n == 1) return eval_kernel(k, std::vector<PairPoint>{{s(0, i), s(0, j)}, {s(0, i), s(0, j)}});
    const double u = ustat_naive(s, k, i, j, opt);
    const double nd = static_cast<double>(n);
    if (k == KernelId::KendallTau) return (nd - 1.0) / nd * u;
    double diag = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        const PairPoint pt{s(r, i), s(r, j)};
        diag += eval_kernel(k, std::vector<PairPoint>{pt, pt});
    }
    return (diag + nd * (nd - 1.0) * u) / (nd * nd);
}

/// All d pairwise U-statistics in vech order, without variance estimates.
inline std::vector<double> ustat_vector(const Sample& s, KernelId k, const UStatOptions& opt = {}) {
    detail::require_rows(s, k);
    const PairGrid grid(s.p());
    const std::size_t n = s.n();
    const std::size_t p = s.p();
    std::vector<double> u;
    u.reserve(grid.d());

    switch (k) {
    case KernelId::KendallTau:
    case KernelId::SpearmanHat: {
        std::vector<std::vector<std::int64_t>> row_sums;
        if (k == KernelId::SpearmanHat) {
            row_sums.reserve(p);
            for (std::size_t c = 0; c < p; ++c) row_sums.push_back(fast::sign_row_sums(s.col(c)));
        }
        const bool packed = fast::TriangleSigns::bytes_needed(n, p) <= opt.fast_memory_limit;
        std::optional<fast::TriangleSigns> tri;
        if (packed) tri.emplace(s);
        for (std::size_t j = 1; j < p; ++j)
            for (std::size_t i = 0; i < j; ++i) {
                const std::int64_t ks = packed ? tri->sign_sum(i, j) : fast::kendall_sign_sum(s.col(i), s.col(j));
                if (k == KernelId::KendallTau) {
                    u.push_back(detail::kendall_from_sum(ks, n));
                } else {
                    u.push_back(detail::spearman_from_triple_sum(
                        fast::spearman_triple_sum(row_sums[i], row_sums[j], ks), n));
                }
            }
        return u;
    }
    case KernelId::Covariance: {
        const double nd = static_cast<double>(n);
        std::vector<double> means(p);
        for (std::size_t c = 0; c < p; ++c) {
            double acc = 0.0;
            for (double x : s.col(c)) acc += x;
            means[c] = acc / nd;
        }
        for (std::size_t j = 1; j < p; ++j)
            for (std::size_t i = 0; i < j; ++i) {
                const auto a = s.col(i);
                const auto b = s.col(j);
                double acc = 0.0;
                for (std::size_t r = 0; r < n; ++r) acc += (a[r] - means[i]) * (b[r] - means[j]);
                u.push_back(acc / (nd - 1.0));
            }
        return u;
    }
    default: break;
    }

    detail::check_cap(detail::binomial(n, static_cast<std::size_t>(kernel_order(k))), opt, k);
    for (std::size_t j = 1; j < p; ++j)
        for (std::size_t i = 0; i < j; ++i) u.push_back(ustat_naive(s, k, i, j, opt));
    return u;
}

/// U-statistics and jackknife variances for all d pairs.
inline UStatResult ustat_matrix(const Sample& s, KernelId k, const UStatOptions& opt = {}) {
    detail::require_rows(s, k);
    const PairGrid grid(s.p());
    const std::size_t n = s.n();
    const std::size_t p = s.p();
    const int m = kernel_order(k);
    const bool with_variance = n > static_cast<std::size_t>(m);

    UStatResult r;
    r.kernel = k;
    r.n = n;
    r.p = p;

    if (k == KernelId::KendallTau && with_variance &&
        fast::RowSigns::bytes_needed(n, p) <= opt.fast_memory_limit) {
        const fast::RowSigns rows(s);
        std::vector<std::int64_t> sums(n);
        std::vector<double> q(n);
        const double nm1 = static_cast<double>(n - 1);
        r.u.reserve(grid.d());
        r.sigma2.reserve(grid.d());
        for (std::size_t j = 1; j < p; ++j)
            for (std::size_t i = 0; i < j; ++i) {
                rows.row_sums(i, j, sums);
                std::int64_t total = 0;
                for (std::size_t t = 0; t < n; ++t) {
                    total += sums[t];
                    q[t] = static_cast<double>(sums[t]) / nm1;
                }
                const double u = detail::kendall_from_sum(total / 2, n);
                r.u.push_back(u);
                r.sigma2.push_back(detail::jackknife_from_q(q, u, m));
            }
        return r;
    }

    r.u = ustat_vector(s, k, opt);
    if (!with_variance) return r;
    r.sigma2.reserve(grid.d());

    if (k == KernelId::Covariance) {
        // q_k = (n a_k b_k + sum_l a_l b_l) / (2(n-1)) with centred columns a, b.
        const double nd = static_cast<double>(n);
        std::vector<double> a(n), b(n), q(n);
        std::size_t idx = 0;
        for (std::size_t j = 1; j < p; ++j)
            for (std::size_t i = 0; i < j; ++i, ++idx) {
                double ma = 0.0, mb = 0.0;
                for (std::size_t t = 0; t < n; ++t) {
                    ma += s(t, i);
                    mb += s(t, j);
                }
                ma /= nd;
                mb /= nd;
                double sab = 0.0;
                for (std::size_t t = 0; t < n; ++t) {
                    a[t] = s(t, i) - ma;
                    b[t] = s(t, j) - mb;
                    sab += a[t] * b[t];
                }
                for (std::size_t t = 0; t < n; ++t) q[t] = (nd * a[t] * b[t] + sab) / (2.0 * (nd - 1.0));
                r.sigma2.push_back(detail::jackknife_from_q(q, r.u[idx], m));
            }
        return r;
    }

    // Generic leave-one-out enumeration, reusing the already computed U.
    detail::check_cap(static_cast<double>(n) * detail::binomial(n - 1, static_cast<std::size_t>(m - 1)), opt, k);
    std::vector<double> q(n);
    std::size_t idx = 0;
    for (std::size_t j = 1; j < p; ++j)
        for (std::size_t i = 0; i < j; ++i, ++idx) {
            for (std::size_t t = 0; t < n; ++t) q[t] = loo_kernel_mean(s, k, i, j, t, opt);
            r.sigma2.push_back(detail::jackknife_from_q(q, r.u[idx], m));
        }
    return r;
}

/// V-statistics for all pairs given their U-statistics. Order-2 kernels reuse u.
inline std::vector<double> vstat_vector(const Sample& s, KernelId k, std::span<const double> u,
                                        const UStatOptions& opt = {}) {
    const std::size_t n = s.n();
    const double nd = static_cast<double>(n);
    std::vector<double> v;
    v.reserve(u.size());
    if (k == KernelId::KendallTau || k == KernelId::Covariance) {
        // Both kernels vanish when the two arguments coincide.
        for (double x : u) v.push_back(k == KernelId::KendallTau ? (nd - 1.0) / nd * x
                                                                 : nd * (nd - 1.0) * x / (nd * nd));
        return v;
    }
    detail::check_cap(vstat_partition_cost(n, kernel_order(k)), opt, k);
    for (std::size_t j = 1; j < s.p(); ++j)
        for (std::size_t i = 0; i < j; ++i) v.push_back(vstat_partition(s, k, i, j, opt));
    return v;
}

} // namespace reldep
