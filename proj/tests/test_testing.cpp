#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "reldep/datagen.hpp"
#include "reldep/testing.hpp"

using namespace reldep;
using Catch::Approx;

namespace {

UStatResult manual(std::vector<double> u, std::vector<double> sigma2, std::size_t n, std::size_t p) {
    UStatResult r;
    r.kernel = KernelId::KendallTau;
    r.n = n;
    r.p = p;
    r.u = std::move(u);
    r.sigma2 = std::move(sigma2);
    return r;
}

TestConfig boot_cfg(Variant v, Direction d, double delta) {
    TestConfig c;
    c.variant = v;
    c.direction = d;
    c.delta = delta;
    c.method = Method::Bootstrap;
    c.boot_reps = 50;
    c.seed = 99;
    return c;
}

} // namespace

TEST_CASE("gumbel quantile", "[testing]") {
    // 50-digit reference evaluations of -log(log(1/(1-alpha))).
    CHECK(std::abs(gumbel_quantile(0.5) - 0.36651292058166432701) <= 1e-12);
    CHECK(std::abs(gumbel_quantile(0.1) - 2.2503673273124452863) <= 1e-12);
    for (double a : {0.01, 0.05, 0.2, 0.7, 0.99})
        CHECK(std::abs(std::exp(-std::exp(-gumbel_quantile(a))) - (1 - a)) <= 1e-12);
    CHECK_THROWS_AS(gumbel_quantile(0.0), UsageError);
    CHECK_THROWS_AS(gumbel_quantile(1.0), UsageError);
}

TEST_CASE("norming constants", "[testing]") {
    const auto c2 = norming_constants(2);
    CHECK(std::abs(c2.a - 1.177410022515474691) <= 1e-12);
    CHECK(std::abs(c2.b - 0.25822669427980124702) <= 1e-12);
    const auto c4950 = norming_constants(4950);
    CHECK(std::abs(c4950.a - 4.1248376587600962179) <= 1e-12);
    CHECK(std::abs(c4950.b - 3.5585207779481247036) <= 1e-12);
    double prev = norming_constants(2).a;
    for (std::size_t d = 3; d < 5000; d += 7) {
        const double a = norming_constants(d).a;
        CHECK(a > prev);
        prev = a;
    }
    CHECK_THROWS_AS(norming_constants(1), UsageError);
}

TEST_CASE("normalized statistic", "[testing]") {
    CHECK(stat_normalized_sq(manual({0.2}, {0.0025}, 50, 2), 0.1) == Approx(3.0).epsilon(1e-14));
    CHECK(stat_normalized_sq(manual({0.1, -0.1, 0.1}, {0.01, 0.02, 0.03}, 50, 3), 0.1) == 0.0);
    CHECK_THROWS_AS(stat_normalized_sq(manual({0.2, 0.1, 0.0}, {0.01, 0.0, 0.01}, 50, 3), 0.1), NumericError);
    CHECK_THROWS_AS(stat_normalized_sq(manual({0.2}, {0.01}, 50, 2), 0.0), UsageError);

    // Duplicate evaluator on a seeded data set.
    std::mt19937_64 rng(1);
    const Sample s = oracle::random_sample(rng, 30, 8);
    const auto r = ustat_matrix(s, KernelId::KendallTau);
    double best = -1e300;
    for (std::size_t k = 0; k < r.d(); ++k)
        best = std::max(best, (r.u[k] * r.u[k] - 0.01) / (2 * std::sqrt(r.sigma2[k]) * 0.1));
    CHECK(std::abs(stat_normalized_sq(r, 0.1) - best) <= 1e-12);
}

TEST_CASE("non-normalized and absolute statistics", "[testing]") {
    CHECK(stat_nonnormalized_sq(std::vector<double>{0.3}, 0.1, 100) == Approx(0.8).epsilon(1e-14));
    CHECK(stat_nonnormalized_sq(std::vector<double>{0.3, -0.5}, 0.0, 100) == Approx(2.5).epsilon(1e-14));
    CHECK(stat_abs(std::vector<double>{0.3, -0.4}, 0.1, 100) == Approx(3.0).epsilon(1e-14));
    CHECK(stat_abs(std::vector<double>{0.3, -0.4}, 0.0, 100) == Approx(4.0).epsilon(1e-14));

    std::mt19937_64 rng(2);
    const Sample s = oracle::random_sample(rng, 25, 6);
    const auto u = ustat_vector(s, KernelId::KendallTau);
    Eigen::MatrixXd flipped = s.matrix();
    flipped.col(2) *= -1.0;
    CHECK(stat_abs(ustat_vector(Sample(flipped), KernelId::KendallTau), 0.1, 25) == stat_abs(u, 0.1, 25));

    // Both statistics attain their maximum at argmax |U|.
    const auto amax = std::max_element(u.begin(), u.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
    const double top = *amax;
    CHECK(stat_nonnormalized_sq(u, 0.05, 25) == std::sqrt(25.0) * (top * top - 0.0025));
    CHECK(stat_abs(u, 0.05, 25) == std::sqrt(25.0) * (std::abs(top) - 0.05));
}

TEST_CASE("decision boundary conventions", "[testing]") {
    CHECK_FALSE(rejects(1.5, 1.5, Direction::Relevant));
    CHECK(rejects(1.5 + 1e-12, 1.5, Direction::Relevant));
    CHECK_FALSE(rejects(1.5, 1.5, Direction::Classical));
    CHECK(rejects(1.5, 1.5, Direction::Interchanged));
}

TEST_CASE("asymptotic test assembles the Gumbel critical value", "[testing]") {
    TestConfig cfg;
    cfg.method = Method::Asymptotic;
    cfg.alpha = 0.1;
    cfg.delta = 0.1;
    std::vector<double> u(4950, 0.05), s2(4950, 0.01);
    u[17] = 0.3;
    const auto rep = asymptotic_test(manual(u, s2, 50, 100), cfg);
    CHECK(std::abs(rep.critical_value - (2.2503673273124452863 / 4.1248376587600962179 + 3.5585207779481247036)) <=
          1e-12);
    CHECK(rep.statistic == Approx((0.09 - 0.01) / (2 * 0.1 * 0.1)));
    CHECK_FALSE(rep.reject);
    REQUIRE(rep.exceedances.size() == 1);
    CHECK(rep.exceedances[0].u == 0.3);
    CHECK(vech_index(rep.exceedances[0].i, rep.exceedances[0].j, 100) == 18);
}

TEST_CASE("asymptotic test rejects monotonically in delta", "[testing][property]") {
    std::mt19937_64 rng(3);
    const Sample s = oracle::random_sample(rng, 40, 10);
    const auto r = ustat_matrix(s, KernelId::KendallTau);
    TestConfig cfg;
    cfg.method = Method::Asymptotic;
    bool rejected_larger = false;
    double prev_stat = -1e300;
    for (double delta = 0.5; delta >= 0.01; delta -= 0.01) {
        cfg.delta = delta;
        const auto rep = asymptotic_test(r, cfg);
        CHECK(rep.statistic >= prev_stat - 1e-12 * std::abs(prev_stat));
        prev_stat = rep.statistic;
        if (rejected_larger) CHECK(rep.reject);
        rejected_larger = rejected_larger || rep.reject;
    }
    CHECK(rejected_larger);
}

TEST_CASE("asymptotic test keeps its level when n dominates log d", "[testing][montecarlo]") {
    // With n = 400 and p = 5 the maximal |tau-hat| under independence stays
    // well below Delta, so the Gumbel test should essentially never reject.
    TestConfig cfg;
    cfg.method = Method::Asymptotic;
    int rejections = 0;
    for (int rep = 0; rep < 40; ++rep) {
        Engine rng = data_stream(5, rep);
        const Sample s = sample(Distribution{}, Eigen::MatrixXd::Identity(5, 5), 400, rng);
        rejections += run_full_test(s, KernelId::KendallTau, cfg).reject;
    }
    CHECK(rejections <= 1);
}

TEST_CASE("truncation of V-statistics", "[testing]") {
    const std::vector<double> v{0.05, -0.15, 0.2, -0.05, 0.1};
    CHECK(truncate_v(v, 0.1, Direction::Relevant) == std::vector<double>{0.05, 0.1, 0.1, -0.05, 0.1});
    CHECK(truncate_v(v, 0.1, Direction::Interchanged) == std::vector<double>{0.1, -0.15, 0.2, 0.1, 0.1});
    CHECK(truncate_v(v, 0.1, Direction::Relevant, true) == std::vector<double>{0.05, -0.1, 0.1, -0.05, 0.1});
    CHECK(truncate_v(v, 0.1, Direction::Interchanged, true) == std::vector<double>{0.1, -0.15, 0.2, -0.1, 0.1});
    for (double x : truncate_v(v, 0.07, Direction::Relevant)) CHECK(std::abs(x) <= 0.07);
}

TEST_CASE("resampling", "[testing]") {
    Eigen::MatrixXd one(1, 3);
    one << 1.5, -2.0, 7.0;
    Engine rng(1);
    CHECK(resample(Sample(one), rng) == Sample(one));

    Eigen::MatrixXd ten(10, 1);
    for (int r = 0; r < 10; ++r) ten(r, 0) = r;
    const Sample s(ten);
    Engine g(2);
    long hits = 0;
    const long draws = 100000;
    for (long b = 0; b < draws / 10; ++b) {
        const Sample star = resample(s, g);
        for (std::size_t r = 0; r < 10; ++r) hits += star(r, 0) == 0.0;
    }
    CHECK(std::abs(static_cast<double>(hits) / draws - 0.1) <= 0.005);

    Engine a = bootstrap_stream(3, 1, 4), b = bootstrap_stream(3, 1, 4);
    CHECK(resample(s, a) == resample(s, b));
}

TEST_CASE("configuration invariants", "[testing]") {
    std::mt19937_64 rng(4);
    const Sample s = oracle::random_sample(rng, 20, 4);
    TestConfig c;
    c.method = Method::Asymptotic;
    c.variant = Variant::Abs;
    CHECK_THROWS_AS(run_full_test(s, KernelId::KendallTau, c), UsageError);
    c = boot_cfg(Variant::NonNormalizedSq, Direction::Classical, 0.1);
    CHECK_THROWS_AS(run_full_test(s, KernelId::KendallTau, c), UsageError);
    c = boot_cfg(Variant::NormalizedSq, Direction::Classical, 0.0);
    CHECK_THROWS_AS(run_full_test(s, KernelId::KendallTau, c), UsageError);
    c = boot_cfg(Variant::Abs, Direction::Classical, 0.0);
    c.method = Method::Asymptotic;
    CHECK_THROWS_AS(run_full_test(s, KernelId::KendallTau, c), UsageError);
    c = boot_cfg(Variant::NormalizedSq, Direction::Relevant, 0.1);
    c.boot_reps = 19;
    CHECK_THROWS_AS(run_full_test(s, KernelId::KendallTau, c), UsageError);
    c.boot_reps = 20;
    c.alpha = 1.0;
    CHECK_THROWS_AS(run_full_test(s, KernelId::KendallTau, c), UsageError);
}

TEST_CASE("bootstrap test properties", "[testing][bootstrap]") {
    std::mt19937_64 rng(5);
    const Sample s = oracle::random_sample(rng, 30, 8);
    for (Variant v : {Variant::NormalizedSq, Variant::NonNormalizedSq, Variant::Abs})
        for (Direction d : {Direction::Relevant, Direction::Interchanged, Direction::Classical}) {
            if (d == Direction::Classical && v == Variant::NormalizedSq) continue;
            auto cfg = boot_cfg(v, d, d == Direction::Classical ? 0.0 : 0.1);
            const auto rep = bootstrap_test(s, KernelId::KendallTau, cfg);
            REQUIRE(rep.boot_draws.size() == 50);
            CHECK(std::is_sorted(rep.boot_draws.begin(), rep.boot_draws.end()));
            CHECK(rep.critical_value >= rep.boot_draws.front());
            CHECK(rep.critical_value <= rep.boot_draws.back());
            CHECK(rep.reject == rejects(rep.statistic, rep.critical_value, d));
            const std::size_t rank = d == Direction::Interchanged ? 5 : 45;
            CHECK(rep.critical_value == rep.boot_draws[rank - 1]);

            cfg.threads = 4;
            const auto again = bootstrap_test(s, KernelId::KendallTau, cfg);
            CHECK(again.boot_draws == rep.boot_draws);
            CHECK(again.statistic == rep.statistic);
            CHECK(again.reject == rep.reject);
        }
}

TEST_CASE("bootstrap statistics are nonincreasing in delta", "[testing][property]") {
    std::mt19937_64 rng(6);
    const Sample s = oracle::random_sample(rng, 30, 6);
    const auto r = ustat_matrix(s, KernelId::KendallTau);
    for (Variant v : {Variant::NormalizedSq, Variant::NonNormalizedSq, Variant::Abs}) {
        double prev = 1e300;
        for (double delta = 0.01; delta < 0.6; delta += 0.01) {
            const double t = observed_statistic(r, v, delta);
            CHECK(t <= prev);
            prev = t;
        }
    }
}

TEST_CASE("interchanged test certifies small dependence", "[testing][montecarlo]") {
    TestConfig cfg = boot_cfg(Variant::NormalizedSq, Direction::Interchanged, 0.1);
    int rejections = 0;
    const int reps = 30;
    for (int rep = 0; rep < reps; ++rep) {
        Engine rng = data_stream(8, rep);
        const Sample s = sample(Distribution{}, Eigen::MatrixXd::Identity(5, 5), 400, rng);
        rejections += run_full_test(s, KernelId::KendallTau, cfg, rep).reject;
    }
    CHECK(rejections >= 24);
}

TEST_CASE("bootstrap with a higher-order kernel", "[testing][bootstrap]") {
    std::mt19937_64 rng(7);
    const Sample s = oracle::random_sample(rng, 10, 3);
    auto cfg = boot_cfg(Variant::Abs, Direction::Relevant, 0.05);
    cfg.boot_reps = 20;
    const auto rep = bootstrap_test(s, KernelId::TauStar, cfg);
    CHECK(rep.boot_draws.size() == 20);
    UStatOptions tight;
    tight.enumeration_cap = 100;
    cfg.ustat = tight;
    CHECK_THROWS_AS(bootstrap_test(s, KernelId::TauStar, cfg), ResourceError);
}

TEST_CASE("normalized bootstrap sigma source", "[testing][bootstrap]") {
    std::mt19937_64 rng(9);
    const Sample s = oracle::random_sample(rng, 30, 6);
    auto cfg = boot_cfg(Variant::NormalizedSq, Direction::Relevant, 0.1);
    CHECK(cfg.boot_sigma == BootSigma::Resample);
    const auto restud = bootstrap_test(s, KernelId::KendallTau, cfg);
    cfg.boot_sigma = BootSigma::Original;
    const auto fixed = bootstrap_test(s, KernelId::KendallTau, cfg);
    CHECK(fixed.statistic == restud.statistic);
    CHECK(fixed.boot_draws != restud.boot_draws);

    // With the original sigma every draw is reproducible from the pieces.
    const auto r = ustat_matrix(s, KernelId::KendallTau);
    const auto v = vstat_vector(s, KernelId::KendallTau, r.u);
    const auto vt = truncate_v(v, 0.1, Direction::Relevant);
    std::vector<double> draws;
    for (std::uint64_t b = 0; b < 50; ++b) {
        Engine g = bootstrap_stream(cfg.seed, 0, b);
        const auto ustar = ustat_vector(resample(s, g), KernelId::KendallTau);
        draws.push_back(bootstrap_statistic(ustar, v, vt, r.sigma2, Variant::NormalizedSq, 0.1, 30));
    }
    std::sort(draws.begin(), draws.end());
    CHECK(draws == fixed.boot_draws);

    // The sigma source is irrelevant for the unnormalized variants.
    auto nv = boot_cfg(Variant::NonNormalizedSq, Direction::Relevant, 0.1);
    const auto a = bootstrap_test(s, KernelId::KendallTau, nv);
    nv.boot_sigma = BootSigma::Original;
    CHECK(bootstrap_test(s, KernelId::KendallTau, nv).boot_draws == a.boot_draws);

    CHECK(parse_boot_sigma(boot_sigma_name(BootSigma::Original)) == BootSigma::Original);
    CHECK_THROWS_AS(parse_boot_sigma("fixed"), UsageError);
}
