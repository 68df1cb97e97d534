#pragma once

// Tests of H0: max |d_ij| <= Delta (relevant), its interchanged form, and the
// classical Delta = 0 hypothesis. Statistics come in three variants: variance
// normalised squares, plain squares and absolute values.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/random/uniform_int_distribution.hpp>

#include "reldep/errors.hpp"
#include "reldep/kernels.hpp"
#include "reldep/parallel.hpp"
#include "reldep/rng.hpp"
#include "reldep/sample.hpp"
#include "reldep/ustat.hpp"

namespace reldep {

enum class Variant { NormalizedSq, NonNormalizedSq, Abs };
enum class Direction { Relevant, Interchanged, Classical };
enum class Method { Asymptotic, Bootstrap };
/// Which jackknife standard deviation divides the bootstrap draws of the
/// normalized statistic: one recomputed on every resample, or the fixed one
/// from the observed sample.
enum class BootSigma { Resample, Original };

inline std::string_view variant_name(Variant v) noexcept {
    switch (v) {
    case Variant::NormalizedSq: return "normalized";
    case Variant::NonNormalizedSq: return "nv";
    case Variant::Abs: return "abs";
    }
    return "?";
}

inline std::string_view direction_name(Direction d) noexcept {
    switch (d) {
    case Direction::Relevant: return "relevant";
    case Direction::Interchanged: return "interchanged";
    case Direction::Classical: return "classical";
    }
    return "?";
}

inline std::string_view method_name(Method m) noexcept {
    return m == Method::Asymptotic ? "asymptotic" : "bootstrap";
}

inline std::string_view boot_sigma_name(BootSigma b) noexcept {
    return b == BootSigma::Resample ? "resample" : "original";
}

inline BootSigma parse_boot_sigma(std::string_view s) {
    if (s == "resample") return BootSigma::Resample;
    if (s == "original") return BootSigma::Original;
    throw UsageError("unknown boot-sigma '" + std::string(s) + "' (expected resample or original)");
}

inline Variant parse_variant(std::string_view s) {
    for (Variant v : {Variant::NormalizedSq, Variant::NonNormalizedSq, Variant::Abs})
        if (variant_name(v) == s) return v;
    throw UsageError("unknown variant '" + std::string(s) + "' (expected normalized, nv or abs)");
}

inline Direction parse_direction(std::string_view s) {
    for (Direction d : {Direction::Relevant, Direction::Interchanged, Direction::Classical})
        if (direction_name(d) == s) return d;
    throw UsageError("unknown direction '" + std::string(s) + "' (expected relevant, interchanged or classical)");
}

inline Method parse_method(std::string_view s) {
    if (s == "asymptotic") return Method::Asymptotic;
    if (s == "bootstrap") return Method::Bootstrap;
    throw UsageError("unknown method '" + std::string(s) + "' (expected asymptotic or bootstrap)");
}

struct TestConfig {
    double delta = 0.1;
    double alpha = 0.1;
    Variant variant = Variant::NormalizedSq;
    Direction direction = Direction::Relevant;
    Method method = Method::Bootstrap;
    int boot_reps = 100;
    std::uint64_t seed = 0;
    /// Replace the unsigned +Delta truncation branch by sign(V_i) Delta.
    bool signed_truncation = false;
    /// Normalized variant only. With the fixed original sigma the draws miss
    /// the coupling between large |U_i| and small sigma_i that the observed
    /// statistic has, and the test over-rejects badly at n = 50.
    BootSigma boot_sigma = BootSigma::Resample;
    /// Workers for bootstrap draws; 1 keeps draws serial.
    int threads = 1;
    UStatOptions ustat{};
};

struct Exceedance {
    std::size_t i; // one-based
    std::size_t j;
    double u;
};

struct TestReport {
    double statistic = 0.0;
    double critical_value = 0.0;
    bool reject = false;
    double alpha = 0.0;
    double delta = 0.0;
    std::vector<Exceedance> exceedances;
    std::vector<double> boot_draws;  // sorted; empty for the asymptotic test
    std::optional<double> boot_pvalue; // informational only
};

inline void validate(const TestConfig& cfg) {
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw UsageError("alpha must lie in (0, 1)");
    if (!(cfg.delta >= 0.0) || !std::isfinite(cfg.delta)) throw UsageError("delta must be finite and >= 0");
    if (cfg.direction == Direction::Classical) {
        if (cfg.delta != 0.0) throw UsageError("the classical direction requires delta = 0");
        if (cfg.variant == Variant::NormalizedSq)
            throw UsageError("the classical direction requires the nv or abs variant");
        if (cfg.method != Method::Bootstrap) throw UsageError("the classical direction requires the bootstrap method");
    }
    if (cfg.method == Method::Asymptotic) {
        if (cfg.variant != Variant::NormalizedSq)
            throw UsageError("the asymptotic test requires the normalized variant");
        if (cfg.direction != Direction::Relevant)
            throw UsageError("the asymptotic test requires the relevant direction");
        if (!(cfg.delta > 0.0)) throw UsageError("the asymptotic test requires delta > 0");
    }
    if (cfg.variant == Variant::NormalizedSq && !(cfg.delta > 0.0))
        throw UsageError("the normalized variant requires delta > 0");
    if (cfg.method == Method::Bootstrap && cfg.boot_reps < 20)
        throw UsageError("bootstrap tests need at least 20 replications");
}

/// (1 - alpha) quantile of the standard Gumbel law exp(-exp(-x)).
inline double gumbel_quantile(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie in (0, 1)");
    return -std::log(-std::log1p(-alpha));
}

struct NormingConstants {
    double a;
    double b;
};

/// a_d = sqrt(2 log d), b_d = a_d - (log log d + log 4 pi) / (2 a_d).
inline NormingConstants norming_constants(std::size_t d) {
    if (d < 2) throw UsageError("norming constants need d >= 2");
    const double a = std::sqrt(2.0 * std::log(static_cast<double>(d)));
    const double b = a - (std::log(std::log(static_cast<double>(d))) + std::log(4.0 * std::numbers::pi)) / (2.0 * a);
    return {a, b};
}

/// Relevant and classical tests reject above the critical value, the
/// interchanged test at or below it. Ties never reject the relevant null.
constexpr bool rejects(double statistic, double critical_value, Direction direction) noexcept {
    return direction == Direction::Interchanged ? statistic <= critical_value : statistic > critical_value;
}

inline constexpr double kSigmaFloor = 1e-12;

/// max_i (U_i^2 - Delta^2) / (2 sigma_i Delta).
inline double stat_normalized_sq(const UStatResult& r, double delta) {
    if (!(delta > 0.0)) throw UsageError("normalized statistic requires delta > 0");
    if (r.sigma2.size() != r.u.size())
        throw UsageError("normalized statistic requires jackknife variances (n > kernel order)");
    std::vector<std::size_t> bad;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < r.u.size(); ++k) {
        const double sigma = std::sqrt(r.sigma2[k]);
        if (!(sigma >= kSigmaFloor)) {
            bad.push_back(k);
            continue;
        }
        best = std::max(best, (r.u[k] * r.u[k] - delta * delta) / (2.0 * sigma * delta));
    }
    if (!bad.empty()) {
        const PairGrid grid(r.p);
        std::string msg = "degenerate jackknife variance (sigma < 1e-12) at " + std::to_string(bad.size()) + " pair(s):";
        for (std::size_t t = 0; t < bad.size() && t < 10; ++t) {
            const auto [i, j] = grid.unindex(bad[t] + 1);
            msg += " (" + std::to_string(i) + "," + std::to_string(j) + ")";
        }
        if (bad.size() > 10) msg += " ...";
        throw NumericError(msg);
    }
    return best;
}

/// sqrt(n) max_i (U_i^2 - Delta^2).
inline double stat_nonnormalized_sq(std::span<const double> u, double delta, std::size_t n) {
    if (!(delta >= 0.0)) throw UsageError("delta must be >= 0");
    double best = -std::numeric_limits<double>::infinity();
    for (double x : u) best = std::max(best, x * x - delta * delta);
    return std::sqrt(static_cast<double>(n)) * best;
}

/// sqrt(n) (max_i |U_i| - Delta).
inline double stat_abs(std::span<const double> u, double delta, std::size_t n) {
    if (!(delta >= 0.0)) throw UsageError("delta must be >= 0");
    double best = -std::numeric_limits<double>::infinity();
    for (double x : u) best = std::max(best, std::abs(x) - delta);
    return std::sqrt(static_cast<double>(n)) * best;
}

inline double stat_nonnormalized_sq(const UStatResult& r, double delta) { return stat_nonnormalized_sq(r.u, delta, r.n); }
inline double stat_abs(const UStatResult& r, double delta) { return stat_abs(r.u, delta, r.n); }

inline double observed_statistic(const UStatResult& r, Variant variant, double delta) {
    switch (variant) {
    case Variant::NormalizedSq: return stat_normalized_sq(r, delta);
    case Variant::NonNormalizedSq: return stat_nonnormalized_sq(r, delta);
    case Variant::Abs: return stat_abs(r, delta);
    }
    return 0.0;
}

inline std::vector<Exceedance> exceedances(const UStatResult& r, double delta) {
    std::vector<Exceedance> out;
    const PairGrid grid(r.p);
    for (std::size_t k = 0; k < r.u.size(); ++k)
        if (std::abs(r.u[k]) > delta) {
            const auto [i, j] = grid.unindex(k + 1);
            out.push_back({i, j, r.u[k]});
        }
    return out;
}

/// Gumbel-calibrated test: reject when T > q_{1-alpha} / a_d + b_d.
inline TestReport asymptotic_test(const UStatResult& r, const TestConfig& cfg) {
    validate(cfg);
    if (cfg.method != Method::Asymptotic) throw UsageError("asymptotic_test called with a bootstrap configuration");
    const auto [a, b] = norming_constants(r.d());
    TestReport rep;
    rep.alpha = cfg.alpha;
    rep.delta = cfg.delta;
    rep.statistic = stat_normalized_sq(r, cfg.delta);
    rep.critical_value = gumbel_quantile(cfg.alpha) / a + b;
    rep.reject = rejects(rep.statistic, rep.critical_value, cfg.direction);
    rep.exceedances = exceedances(r, cfg.delta);
    return rep;
}

/// Relevant: V if |V| <= Delta, else Delta. Interchanged: V if |V| > Delta,
/// else Delta. With signed_truncation the constant branch is sign(V) Delta.
inline std::vector<double> truncate_v(std::span<const double> v, double delta, Direction direction,
                                      bool signed_truncation = false) {
    if (!(delta >= 0.0)) throw UsageError("delta must be >= 0");
    std::vector<double> out(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
        const bool keep = direction == Direction::Interchanged ? std::abs(v[k]) > delta : std::abs(v[k]) <= delta;
        const double fill = signed_truncation && v[k] < 0.0 ? -delta : delta;
        out[k] = keep ? v[k] : fill;
    }
    return out;
}

/// Draws n rows uniformly with replacement.
inline Sample resample(const Sample& s, Engine& rng) {
    const auto n = static_cast<Eigen::Index>(s.n());
    const auto p = static_cast<Eigen::Index>(s.p());
    Eigen::MatrixXd out(n, p);
    if (n == 0) return Sample(std::move(out));
    boost::random::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
    for (auto& r : rows) r = pick(rng);
    const auto& src = s.matrix();
    for (Eigen::Index c = 0; c < p; ++c)
        for (Eigen::Index r = 0; r < n; ++r) out(r, c) = src(rows[static_cast<std::size_t>(r)], c);
    return Sample(std::move(out));
}

/// Bootstrap analogue of the chosen statistic, centred at the truncated
/// V-statistics. sigma2 holds the jackknife variances chosen by the caller.
inline double bootstrap_statistic(std::span<const double> ustar, std::span<const double> v,
                                  std::span<const double> v_trunc, std::span<const double> sigma2, Variant variant,
                                  double delta, std::size_t n) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < ustar.size(); ++k) {
        const double c = ustar[k] - v[k] + v_trunc[k];
        double val = 0.0;
        switch (variant) {
        case Variant::NormalizedSq:
            val = (c * c - v_trunc[k] * v_trunc[k]) / (2.0 * std::sqrt(sigma2[k]) * delta);
            break;
        case Variant::NonNormalizedSq: val = c * c - v_trunc[k] * v_trunc[k]; break;
        case Variant::Abs: val = std::abs(c) - std::abs(v_trunc[k]); break;
        }
        best = std::max(best, val);
    }
    if (variant != Variant::NormalizedSq) best *= std::sqrt(static_cast<double>(n));
    return best;
}

/// Order statistic of rank ceil(level * B), one-based, from sorted draws.
inline double order_statistic(std::span<const double> sorted, double level) {
    const double B = static_cast<double>(sorted.size());
    auto rank = static_cast<std::size_t>(std::ceil(level * B - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

/// Resampling test. `rep` selects the random stream family so that Monte
/// Carlo replications get independent bootstrap draws.
inline TestReport bootstrap_test(const Sample& s, KernelId kernel, const TestConfig& cfg, std::uint64_t rep = 0) {
    validate(cfg);
    if (cfg.method != Method::Bootstrap) throw UsageError("bootstrap_test called with an asymptotic configuration");

    const bool normalized = cfg.variant == Variant::NormalizedSq;
    UStatResult r;
    if (normalized) {
        r = ustat_matrix(s, kernel, cfg.ustat);
    } else {
        r.kernel = kernel;
        r.n = s.n();
        r.p = s.p();
        r.u = ustat_vector(s, kernel, cfg.ustat);
    }

    TestReport out;
    out.alpha = cfg.alpha;
    out.delta = cfg.delta;
    out.statistic = observed_statistic(r, cfg.variant, cfg.delta);
    out.exceedances = exceedances(r, cfg.delta);

    const std::vector<double> v = vstat_vector(s, kernel, r.u, cfg.ustat);
    const Direction trunc_dir = cfg.direction == Direction::Interchanged ? Direction::Interchanged : Direction::Relevant;
    const std::vector<double> v_trunc = truncate_v(v, cfg.delta, trunc_dir, cfg.signed_truncation);

    const auto B = static_cast<std::size_t>(cfg.boot_reps);
    std::vector<double> draws(B);
    parallel_for(B, static_cast<unsigned>(std::max(1, cfg.threads)), [&](std::size_t b) {
        Engine rng = bootstrap_stream(cfg.seed, rep, b);
        const Sample star = resample(s, rng);
        if (normalized && cfg.boot_sigma == BootSigma::Resample) {
            UStatResult rs = ustat_matrix(star, kernel, cfg.ustat);
            // A resample can collapse a pair to (near) zero spread; fall back
            // to the observed sigma there rather than dividing by ~0.
            for (std::size_t k = 0; k < rs.sigma2.size(); ++k)
                if (!(std::sqrt(rs.sigma2[k]) >= kSigmaFloor)) rs.sigma2[k] = r.sigma2[k];
            draws[b] = bootstrap_statistic(rs.u, v, v_trunc, rs.sigma2, cfg.variant, cfg.delta, s.n());
            return;
        }
        const std::vector<double> ustar = ustat_vector(star, kernel, cfg.ustat);
        draws[b] = bootstrap_statistic(ustar, v, v_trunc, r.sigma2, cfg.variant, cfg.delta, s.n());
    });
    std::sort(draws.begin(), draws.end());

    std::size_t extreme = 0;
    if (cfg.direction == Direction::Interchanged) {
        out.critical_value = order_statistic(draws, cfg.alpha);
        for (double x : draws) extreme += x <= out.statistic;
    } else {
        out.critical_value = order_statistic(draws, 1.0 - cfg.alpha);
        for (double x : draws) extreme += x >= out.statistic;
    }
    out.reject = rejects(out.statistic, out.critical_value, cfg.direction);
    out.boot_pvalue = static_cast<double>(extreme) / static_cast<double>(B);
    out.boot_draws = std::move(draws);
    return out;
}

/// Validates cfg and dispatches on method.
inline TestReport run_full_test(const Sample& s, KernelId kernel, const TestConfig& cfg, std::uint64_t rep = 0) {
    validate(cfg);
    if (cfg.method == Method::Asymptotic) return asymptotic_test(ustat_matrix(s, kernel, cfg.ustat), cfg);
    return bootstrap_test(s, kernel, cfg, rep);
}

} // namespace reldep
