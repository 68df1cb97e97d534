#pragma once

// Simulation designs: equicorrelation (M1), a correlated leading block (M2)
// and a single correlated pair (M3), drawn from a multivariate normal or a
// multivariate t with the model matrix as scale matrix.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <boost/random/chi_squared_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

#include "reldep/errors.hpp"
#include "reldep/rng.hpp"
#include "reldep/sample.hpp"

namespace reldep {

enum class ModelTag { M1, M2, M3 };
enum class DistTag { Normal, StudentT };

struct CorrelationModel {
    ModelTag tag = ModelTag::M1;
    std::size_t p = 2;
    double rho = 0.0;
    std::pair<std::size_t, std::size_t> pair{1, 2}; // M3 only, one-based
};

struct Distribution {
    DistTag tag = DistTag::Normal;
    double dof = 3.0; // StudentT only
};

inline std::string model_name(ModelTag m) {
    switch (m) {
    case ModelTag::M1: return "m1";
    case ModelTag::M2: return "m2";
    case ModelTag::M3: return "m3";
    }
    return "?";
}

inline ModelTag parse_model(std::string_view s) {
    if (s == "m1") return ModelTag::M1;
    if (s == "m2") return ModelTag::M2;
    if (s == "m3") return ModelTag::M3;
    throw UsageError("unknown model '" + std::string(s) + "' (expected m1, m2 or m3)");
}

inline std::string dist_name(const Distribution& d) {
    if (d.tag == DistTag::Normal) return "normal";
    const double f = d.dof;
    if (f == std::floor(f)) return "t" + std::to_string(static_cast<long long>(f));
    return "t" + std::to_string(f);
}

/// "normal" or "t<dof>", e.g. "t3".
inline Distribution parse_distribution(std::string_view s) {
    if (s == "normal") return {DistTag::Normal, 3.0};
    if (s.size() > 1 && s.front() == 't') {
        try {
            std::size_t used = 0;
            const std::string rest(s.substr(1));
            const double f = std::stod(rest, &used);
            if (used == rest.size() && f > 0.0 && std::isfinite(f)) return {DistTag::StudentT, f};
        } catch (const std::exception&) {
        }
    }
    throw UsageError("unknown distribution '" + std::string(s) + "' (expected normal or t<dof>)");
}

/// Size of the correlated leading block in M2: floor(p / sqrt 2).
inline std::size_t m2_block_size(std::size_t p) noexcept {
    auto b = static_cast<std::size_t>(std::floor(static_cast<double>(p) / std::numbers::sqrt2));
    // Guard the floor against rounding at exact multiples.
    while ((b + 1) * (b + 1) * 2 <= p * p) ++b;
    while (b * b * 2 > p * p) --b;
    return b;
}

inline Eigen::MatrixXd model_matrix(const CorrelationModel& m) {
    const std::size_t p = m.p;
    if (p < 2) throw UsageError("model dimension p must be at least 2");
    const double rho = m.rho;
    if (!std::isfinite(rho) || std::abs(rho) >= 1.0)
        throw UsageError("model correlation rho = " + std::to_string(rho) + " must satisfy |rho| < 1");
    const auto P = static_cast<Eigen::Index>(p);
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(P, P);
    switch (m.tag) {
    case ModelTag::M1:
        if (rho <= -1.0 / static_cast<double>(p - 1))
            throw UsageError("M1 needs rho > -1/(p-1) for a valid correlation matrix");
        sigma.setConstant(rho);
        sigma.diagonal().setOnes();
        break;
    case ModelTag::M2: {
        const auto b = static_cast<Eigen::Index>(m2_block_size(p));
        for (Eigen::Index i = 0; i < b; ++i)
            for (Eigen::Index j = 0; j < b; ++j)
                if (i != j) sigma(i, j) = rho;
        break;
    }
    case ModelTag::M3: {
        const auto [i, j] = m.pair;
        if (i < 1 || j < 1 || i > p || j > p || i == j)
            throw UsageError("M3 pair must name two distinct components in 1..p");
        sigma(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j - 1)) = rho;
        sigma(static_cast<Eigen::Index>(j - 1), static_cast<Eigen::Index>(i - 1)) = rho;
        break;
    }
    }
    return sigma;
}

/// Lower Cholesky factor; retries once with 1e-10 I added to the diagonal.
inline Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& sigma) {
    if (sigma.rows() != sigma.cols()) throw UsageError("scale matrix must be square");
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    const Eigen::MatrixXd jittered =
        sigma + 1e-10 * Eigen::MatrixXd::Identity(sigma.rows(), sigma.cols());
    llt.compute(jittered);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    throw NumericError("scale matrix is not positive semidefinite (Cholesky failed after jitter)");
}

/// n i.i.d. rows. Normal: L z. StudentT: L z / sqrt(w / f), w ~ chi-square(f)
/// drawn per row; sigma is the scale matrix.
inline Sample sample_from_factor(const Distribution& dist, const Eigen::MatrixXd& chol, std::size_t n,
                                 Engine& rng) {
    const Eigen::Index p = chol.rows();
    const auto N = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd z(N, p);
    boost::random::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd scale = Eigen::VectorXd::Ones(N);
    if (dist.tag == DistTag::StudentT && !(dist.dof > 0.0))
        throw UsageError("t distribution needs dof > 0");
    boost::random::chi_squared_distribution<double> chi2(dist.tag == DistTag::StudentT ? dist.dof : 1.0);
    for (Eigen::Index r = 0; r < N; ++r) {
        for (Eigen::Index c = 0; c < p; ++c) z(r, c) = normal(rng);
        if (dist.tag == DistTag::StudentT) scale(r) = 1.0 / std::sqrt(chi2(rng) / dist.dof);
    }
    Eigen::MatrixXd x = z * chol.transpose();
    if (dist.tag == DistTag::StudentT) x = scale.asDiagonal() * x;
    return Sample(std::move(x));
}

inline Sample sample(const Distribution& dist, const Eigen::MatrixXd& sigma, std::size_t n, Engine& rng) {
    return sample_from_factor(dist, cholesky_factor(sigma), n, rng);
}

/// Kendall's tau of an elliptical pair with scale correlation rho: (2/pi) asin(rho).
inline double tau_from_rho(double rho) {
    if (!(std::abs(rho) <= 1.0)) throw UsageError("rho must lie in [-1, 1]");
    return 2.0 / std::numbers::pi * std::asin(rho);
}

inline double rho_from_tau(double tau) {
    if (!(std::abs(tau) <= 1.0)) throw UsageError("tau must lie in [-1, 1]");
    return std::sin(std::numbers::pi / 2.0 * tau);
}

} // namespace reldep
