#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "reldep/kernels.hpp"

using namespace reldep;

namespace {

std::vector<PairPoint> random_points(std::mt19937_64& rng, int m, bool integer_grid) {
    std::normal_distribution<double> z;
    std::uniform_int_distribution<int> grid(0, 3);
    std::vector<PairPoint> pts(static_cast<std::size_t>(m));
    for (auto& p : pts) p = integer_grid ? PairPoint{double(grid(rng)), double(grid(rng))} : PairPoint{z(rng), z(rng)};
    return pts;
}

} // namespace

TEST_CASE("kernel orders", "[kernels]") {
    CHECK(kernel_order(KernelId::Covariance) == 2);
    CHECK(kernel_order(KernelId::KendallTau) == 2);
    CHECK(kernel_order(KernelId::SpearmanHat) == 3);
    CHECK(kernel_order(KernelId::TauStar) == 4);
    CHECK(kernel_order(KernelId::HoeffdingD) == 5);
    CHECK(kernel_order(KernelId::BkrR) == 6);
}

TEST_CASE("kendall and covariance kernels on small inputs", "[kernels]") {
    const std::vector<PairPoint> conc{{1, 1}, {2, 2}};
    const std::vector<PairPoint> disc{{1, 2}, {2, 1}};
    const std::vector<PairPoint> tie{{1, 1}, {1, 2}};
    CHECK(eval_kernel(KernelId::KendallTau, conc) == 1.0);
    CHECK(eval_kernel(KernelId::KendallTau, disc) == -1.0);
    CHECK(eval_kernel(KernelId::KendallTau, tie) == 0.0);
    CHECK(eval_kernel(KernelId::Covariance, std::vector<PairPoint>{{0, 0}, {2, 2}}) == 2.0);
}

TEST_CASE("hoeffding indicator arithmetic", "[kernels]") {
    const std::array<double, 3> z{1.0, 3.0, 2.0};
    CHECK(detail::ind3(z.data(), 0, 1, 2) == 1);
}

TEST_CASE("higher-order kernels match an independent enumeration", "[kernels]") {
    // Reference values from a separate exact-rational enumeration of the
    // indicator sums.
    auto pts = [](std::vector<double> u, std::vector<double> v) {
        std::vector<PairPoint> out;
        for (std::size_t k = 0; k < u.size(); ++k) out.push_back({u[k], v[k]});
        return out;
    };
    CHECK(eval_kernel(KernelId::TauStar, pts({1, 2, 3, 4}, {1, 2, 3, 4})) == 1.0);
    CHECK(eval_kernel(KernelId::TauStar, pts({1, 2, 3, 4}, {4, 3, 2, 1})) == 1.0);
    CHECK(eval_kernel(KernelId::HoeffdingD, pts({1, 2, 3, 4, 5}, {1, 2, 3, 4, 5})) == 1.0);
    CHECK(eval_kernel(KernelId::BkrR, pts({1, 2, 3, 4, 5, 6}, {1, 2, 3, 4, 5, 6})) == 1.0);
    CHECK(eval_kernel(KernelId::TauStar, pts({0.3, 1.2, -0.5, 2.0}, {1.0, -1.0, 0.5, 0.7})) == -0.5);
    CHECK(eval_kernel(KernelId::HoeffdingD, pts({0.3, 1.2, -0.5, 2.0, 0.1}, {1.0, -1.0, 0.5, 0.7, 0.2})) == 0.0);
    CHECK(eval_kernel(KernelId::BkrR, pts({0.3, 1.2, -0.5, 2.0, 0.1, 0.9}, {1.0, -1.0, 0.5, 0.7, 0.2, -0.3})) ==
          -0.25);
    CHECK(eval_kernel(KernelId::HoeffdingD, pts({1, 1, 2, 2, 3}, {1, 2, 1, 2, 3})) == 0.0);
}

TEST_CASE("spearman kernel is three times the symmetrised sign product", "[kernels]") {
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 200; ++rep) {
        const auto p = random_points(rng, 3, rep % 2 == 0);
        std::array<int, 3> o{0, 1, 2};
        double sum = 0.0;
        do {
            sum += detail::sign(p[o[0]].u - p[o[1]].u) * detail::sign(p[o[0]].v - p[o[2]].v);
        } while (std::next_permutation(o.begin(), o.end()));
        CHECK(eval_kernel(KernelId::SpearmanHat, p) == 3.0 * sum / 6.0);
    }
}

TEST_CASE("arity mismatch is a usage error", "[kernels]") {
    const std::vector<PairPoint> three{{1, 1}, {2, 2}, {3, 3}};
    CHECK_THROWS_AS(eval_kernel(KernelId::KendallTau, three), UsageError);
    CHECK_THROWS_AS(eval_kernel(KernelId::BkrR, three), UsageError);
}

TEST_CASE("kernels are exactly symmetric under point permutations", "[kernels][property]") {
    std::mt19937_64 rng(11);
    for (KernelId k : kAllKernels) {
        const int m = kernel_order(k);
        for (int rep = 0; rep < 40; ++rep) {
            auto pts = random_points(rng, m, rep % 3 == 0);
            const double base = eval_kernel(k, pts);
            for (int shuffle = 0; shuffle < 6; ++shuffle) {
                std::shuffle(pts.begin(), pts.end(), rng);
                CHECK(eval_kernel(k, pts) == base);
            }
        }
    }
}

TEST_CASE("rank kernels are bounded and invariant under monotone maps", "[kernels][property]") {
    std::mt19937_64 rng(13);
    for (KernelId k : kAllKernels) {
        if (!is_rank_kernel(k)) continue;
        const int m = kernel_order(k);
        for (int rep = 0; rep < 60; ++rep) {
            auto pts = random_points(rng, m, rep % 2 == 0);
            const double base = eval_kernel(k, pts);
            CHECK(std::abs(base) <= kernel_magnitude_bound(k));
            auto mapped = pts;
            for (auto& p : mapped) {
                p.u = std::exp(p.u) + 3.0;
                p.v = p.v * p.v * p.v - 10.0;
            }
            CHECK(eval_kernel(k, mapped) == base);
        }
    }
}

TEST_CASE("kendall and spearman kernels are sign equivariant", "[kernels][property]") {
    std::mt19937_64 rng(17);
    for (KernelId k : {KernelId::KendallTau, KernelId::SpearmanHat}) {
        for (int rep = 0; rep < 100; ++rep) {
            auto pts = random_points(rng, kernel_order(k), rep % 2 == 0);
            const double base = eval_kernel(k, pts);
            for (auto& p : pts) p.v = -p.v;
            CHECK(eval_kernel(k, pts) == -base);
        }
    }
}

TEST_CASE("kernel names round trip", "[kernels]") {
    for (KernelId k : kAllKernels) CHECK(parse_kernel(kernel_name(k)) == k);
    CHECK_THROWS_AS(parse_kernel("pearson"), UsageError);
}
