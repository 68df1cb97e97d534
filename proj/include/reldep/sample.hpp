#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "reldep/errors.hpp"

namespace reldep {

/// n x p matrix of observations; rows are the i.i.d. vectors. Storage is
/// column-major so each coordinate is a contiguous span.
class Sample {
public:
    Sample() = default;

    explicit Sample(Eigen::MatrixXd data) : data_(std::move(data)) {
        for (Eigen::Index j = 0; j < data_.cols(); ++j)
            for (Eigen::Index i = 0; i < data_.rows(); ++i)
                if (!std::isfinite(data_(i, j)))
                    throw UsageError("sample entry (" + std::to_string(i + 1) + "," +
                                     std::to_string(j + 1) + ") is not finite");
    }

    [[nodiscard]] std::size_t n() const noexcept { return static_cast<std::size_t>(data_.rows()); }
    [[nodiscard]] std::size_t p() const noexcept { return static_cast<std::size_t>(data_.cols()); }

    /// Zero-based column view.
    [[nodiscard]] std::span<const double> col(std::size_t j) const noexcept {
        return {data_.data() + j * n(), n()};
    }

    [[nodiscard]] double operator()(std::size_t row, std::size_t col) const noexcept {
        return data_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
    }

    [[nodiscard]] const Eigen::MatrixXd& matrix() const noexcept { return data_; }

    friend bool operator==(const Sample& a, const Sample& b) {
        return a.data_.rows() == b.data_.rows() && a.data_.cols() == b.data_.cols() &&
               a.data_ == b.data_;
    }

private:
    Eigen::MatrixXd data_;
};

/// vech linearisation of the strict upper triangle, stacking columns:
/// (1,2), (1,3), (2,3), (1,4), ... All indices are one-based.
class PairGrid {
public:
    explicit PairGrid(std::size_t p) : p_(p) {
        if (p < 2) throw UsageError("pair grid needs p >= 2, got " + std::to_string(p));
    }

    [[nodiscard]] std::size_t p() const noexcept { return p_; }
    [[nodiscard]] std::size_t d() const noexcept { return p_ * (p_ - 1) / 2; }

    [[nodiscard]] std::size_t index(std::size_t i, std::size_t j) const {
        if (i < 1 || i >= j || j > p_)
            throw UsageError("pair (" + std::to_string(i) + "," + std::to_string(j) +
                             ") is not 1 <= i < j <= " + std::to_string(p_));
        return (j - 1) * (j - 2) / 2 + i;
    }

    [[nodiscard]] std::pair<std::size_t, std::size_t> unindex(std::size_t k) const {
        if (k < 1 || k > d())
            throw UsageError("vech index " + std::to_string(k) + " outside 1.." +
                             std::to_string(d()));
        // Largest j with (j-1)(j-2)/2 < k.
        auto j = static_cast<std::size_t>(
            std::floor((3.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(k - 1))) / 2.0));
        while ((j - 1) * (j - 2) / 2 >= k) --j;
        while (j * (j - 1) / 2 < k) ++j;
        return {k - (j - 1) * (j - 2) / 2, j};
    }

private:
    std::size_t p_;
};

inline std::size_t vech_index(std::size_t i, std::size_t j, std::size_t p) {
    return PairGrid(p).index(i, j);
}

inline std::pair<std::size_t, std::size_t> vech_unindex(std::size_t k, std::size_t p) {
    return PairGrid(p).unindex(k);
}

} // namespace reldep
