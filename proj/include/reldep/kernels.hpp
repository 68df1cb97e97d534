#pragma once

// Pairwise dependence kernels. Each kernel consumes m bivariate points
// (u_k, v_k), the i-th and j-th coordinates of m observations, and returns the
// symmetric kernel value whose expectation is the dependence measure.

#include <algorithm>
#include <array>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>

#include "reldep/errors.hpp"

namespace reldep {

enum class KernelId { Covariance, KendallTau, SpearmanHat, HoeffdingD, BkrR, TauStar };

inline constexpr std::array<KernelId, 6> kAllKernels{KernelId::Covariance, KernelId::KendallTau,
                                                     KernelId::SpearmanHat, KernelId::HoeffdingD,
                                                     KernelId::BkrR, KernelId::TauStar};

struct PairPoint {
    double u;
    double v;
};

constexpr int kernel_order(KernelId k) noexcept {
    switch (k) {
    case KernelId::Covariance: return 2;
    case KernelId::KendallTau: return 2;
    case KernelId::SpearmanHat: return 3;
    case KernelId::HoeffdingD: return 5;
    case KernelId::BkrR: return 6;
    case KernelId::TauStar: return 4;
    }
    return 0;
}

/// True for kernels that depend on the data only through coordinate-wise ranks.
constexpr bool is_rank_kernel(KernelId k) noexcept { return k != KernelId::Covariance; }

inline std::string_view kernel_name(KernelId k) noexcept {
    switch (k) {
    case KernelId::Covariance: return "covariance";
    case KernelId::KendallTau: return "kendall";
    case KernelId::SpearmanHat: return "spearman";
    case KernelId::HoeffdingD: return "hoeffding-d";
    case KernelId::BkrR: return "bkr-r";
    case KernelId::TauStar: return "tau-star";
    }
    return "?";
}

inline KernelId parse_kernel(std::string_view name) {
    for (KernelId k : kAllKernels)
        if (kernel_name(k) == name) return k;
    throw UsageError("unknown kernel '" + std::string(name) + "'");
}

namespace detail {

constexpr double sign(double x) noexcept { return static_cast<double>((x > 0.0) - (x < 0.0)); }

// 1{z_a <= z_c} - 1{z_b <= z_c}
constexpr int ind3(const double* z, int a, int b, int c) noexcept {
    return static_cast<int>(z[a] <= z[c]) - static_cast<int>(z[b] <= z[c]);
}

// 1{z_a < z_c} 1{z_a < z_d} 1{z_b < z_c} 1{z_b < z_d}: both a and b lie below both c and d.
constexpr int below_both(const double* z, int a, int b, int c, int d) noexcept {
    return static_cast<int>(z[a] < z[c] && z[a] < z[d] && z[b] < z[c] && z[b] < z[d]);
}

constexpr int tau_star_factor(const double* z, const std::array<int, 4>& j) noexcept {
    return below_both(z, j[0], j[2], j[1], j[3]) + below_both(z, j[1], j[3], j[0], j[2]) -
           below_both(z, j[0], j[3], j[1], j[2]) - below_both(z, j[1], j[2], j[0], j[3]);
}

// Integer sum of the indicator products over every ordering of the m points.
// Callers scale by the kernel prefactor.
template <int M>
long permutation_sum(KernelId k, const double* u, const double* v) noexcept {
    std::array<int, M> j{};
    for (int a = 0; a < M; ++a) j[a] = a;
    long total = 0;
    do {
        switch (k) {
        case KernelId::HoeffdingD:
            if constexpr (M == 5)
                total += ind3(u, j[0], j[1], j[4]) * ind3(u, j[2], j[3], j[4]) *
                         ind3(v, j[0], j[1], j[4]) * ind3(v, j[2], j[3], j[4]);
            break;
        case KernelId::BkrR:
            if constexpr (M == 6)
                total += ind3(u, j[0], j[1], j[4]) * ind3(u, j[2], j[3], j[4]) *
                         ind3(v, j[0], j[1], j[5]) * ind3(v, j[2], j[3], j[5]);
            break;
        case KernelId::TauStar:
            if constexpr (M == 4) total += tau_star_factor(u, j) * tau_star_factor(v, j);
            break;
        default: break;
        }
    } while (std::next_permutation(j.begin(), j.end()));
    return total;
}

} // namespace detail

/// Symmetric kernel value at the given points. pts.size() must equal the
/// kernel order. SpearmanHat is the symmetrisation of
/// 3 sign(u1-u2) sign(v1-v3), so its U-statistic is the dominating term of
/// Spearman's rho.
inline double eval_kernel(KernelId k, std::span<const PairPoint> pts) {
    const int m = kernel_order(k);
    if (static_cast<int>(pts.size()) != m)
        throw UsageError("kernel '" + std::string(kernel_name(k)) + "' takes " + std::to_string(m) +
                         " points, got " + std::to_string(pts.size()));
    using detail::sign;
    switch (k) {
    case KernelId::Covariance: return 0.5 * (pts[0].u - pts[1].u) * (pts[0].v - pts[1].v);
    case KernelId::KendallTau: return sign(pts[0].u - pts[1].u) * sign(pts[0].v - pts[1].v);
    case KernelId::SpearmanHat: {
        double s = 0.0;
        for (int a = 0; a < 3; ++a) {
            const int b = (a + 1) % 3;
            const int c = (a + 2) % 3;
            s += sign(pts[a].u - pts[b].u) * sign(pts[a].v - pts[c].v);
            s += sign(pts[a].u - pts[c].u) * sign(pts[a].v - pts[b].v);
        }
        return 0.5 * s;
    }
    default: break;
    }

    std::array<double, 6> u{};
    std::array<double, 6> v{};
    for (int a = 0; a < m; ++a) {
        u[a] = pts[a].u;
        v[a] = pts[a].v;
    }
    switch (k) {
    case KernelId::HoeffdingD:
        return static_cast<double>(detail::permutation_sum<5>(k, u.data(), v.data())) / 16.0;
    case KernelId::BkrR:
        return static_cast<double>(detail::permutation_sum<6>(k, u.data(), v.data())) / 32.0;
    case KernelId::TauStar:
        return static_cast<double>(detail::permutation_sum<4>(k, u.data(), v.data())) / 16.0;
    default: break;
    }
    return 0.0;
}

/// Upper bound on |eval_kernel| for the bounded rank kernels: the number of
/// summed orderings times the prefactor. Covariance is unbounded.
inline double kernel_magnitude_bound(KernelId k) noexcept {
    switch (k) {
    case KernelId::KendallTau: return 1.0;
    case KernelId::SpearmanHat: return 1.0;
    case KernelId::HoeffdingD: return 120.0 / 16.0;
    case KernelId::BkrR: return 720.0 / 32.0;
    case KernelId::TauStar: return 24.0 * 4.0 * 4.0 / 16.0;
    case KernelId::Covariance: break;
    }
    return std::numeric_limits<double>::infinity();
}

} // namespace reldep
