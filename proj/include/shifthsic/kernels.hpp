#pragma once

// Kernel functions, Gram matrices, centering and bandwidth selection.

#include "shifthsic/error.hpp"
#include "shifthsic/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace shifthsic {

enum class KernelFamily { gaussian, linear };

inline std::string to_string(KernelFamily family) {
    return family == KernelFamily::gaussian ? "gaussian" : "linear";
}

/// A kernel family plus its bandwidth. An empty bandwidth on a gaussian
/// kernel means "choose by the median heuristic from the data".
struct KernelSpec {
    KernelFamily family = KernelFamily::gaussian;
    std::optional<double> bandwidth;

    static KernelSpec gaussian(double sigma) { return {KernelFamily::gaussian, sigma}; }
    static KernelSpec median_heuristic() { return {KernelFamily::gaussian, std::nullopt}; }
    static KernelSpec linear() { return {KernelFamily::linear, std::nullopt}; }

    [[nodiscard]] bool needs_data() const noexcept {
        return family == KernelFamily::gaussian && !bandwidth;
    }

    void validate() const {
        if (family == KernelFamily::gaussian && bandwidth &&
            !(std::isfinite(*bandwidth) && *bandwidth > 0.0)) {
            throw Error(ErrorKind::InvalidInput, "gaussian bandwidth must be positive and finite");
        }
    }

    /// Kernel evaluation; requires an explicit bandwidth for the gaussian family.
    [[nodiscard]] double operator()(double a, double b) const {
        if (family == KernelFamily::linear) return a * b;
        if (!bandwidth) {
            throw Error(ErrorKind::InvalidInput, "kernel evaluation needs an explicit bandwidth");
        }
        const double d = a - b;
        return std::exp(-(d * d) / (2.0 * *bandwidth * *bandwidth));
    }

    friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

/// Dense symmetric n x n matrix stored row-major.
class GramMatrix {
public:
    GramMatrix() = default;
    explicit GramMatrix(std::size_t n, bool centered = false)
        : n_(n), values_(n * n, 0.0), centered_(centered) {}

    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    [[nodiscard]] bool centered() const noexcept { return centered_; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return values_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * n_ + j]; }

    [[nodiscard]] std::span<const double> row(std::size_t i) const noexcept {
        return {values_.data() + i * n_, n_};
    }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }

private:
    std::size_t n_ = 0;
    std::vector<double> values_;
    bool centered_ = false;
};

namespace detail {

inline void require_finite(std::span<const double> series) {
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (!std::isfinite(series[i])) {
            throw Error(ErrorKind::InvalidInput, "non-finite value at index " + std::to_string(i));
        }
    }
}

inline double lower_median(std::vector<double>& values) {
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
    std::nth_element(values.begin(), mid, values.end());
    return *mid;
}

}  // namespace detail

inline constexpr std::size_t kMedianExactLimit = 2000;
inline constexpr std::uint64_t kMedianDefaultSeed = 0x6d656469616eULL;

/// Lower median of |x_a - x_b| over a < b. Above kMedianExactLimit points the
/// median is taken over a seeded uniform subsample of that many points.
/// When more than half of the distances are zero (heavily tied data) the
/// median of the nonzero distances is returned instead.
inline double median_heuristic(std::span<const double> series,
                               std::uint64_t seed = kMedianDefaultSeed) {
    if (series.size() < 2) {
        throw Error(ErrorKind::InvalidInput, "median heuristic needs at least 2 points");
    }
    detail::require_finite(series);

    std::vector<double> points(series.begin(), series.end());
    if (points.size() > kMedianExactLimit) {
        Rng rng(seed);
        // partial Fisher-Yates: the first kMedianExactLimit slots are a uniform subsample
        for (std::size_t i = 0; i < kMedianExactLimit; ++i) {
            const auto j = i + static_cast<std::size_t>(rng.below(points.size() - i));
            std::swap(points[i], points[j]);
        }
        points.resize(kMedianExactLimit);
    }

    const std::size_t m = points.size();
    std::vector<double> distances;
    distances.reserve(m * (m - 1) / 2);
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = a + 1; b < m; ++b) distances.push_back(std::abs(points[a] - points[b]));
    }

    double sigma = detail::lower_median(distances);
    if (sigma == 0.0) {
        std::erase(distances, 0.0);
        if (distances.empty()) {
            throw Error(ErrorKind::DegenerateSeries,
                        "all pairwise distances are zero; supply an explicit bandwidth");
        }
        sigma = detail::lower_median(distances);
    }
    return sigma;
}

/// Returns spec with any data-dependent bandwidth fixed from `series`.
inline KernelSpec resolve(const KernelSpec& spec, std::span<const double> series) {
    spec.validate();
    if (!spec.needs_data()) return spec;
    return KernelSpec::gaussian(median_heuristic(series));
}

/// Uncentered Gram matrix K_ab = k(x_a, x_b).
inline GramMatrix gram(std::span<const double> series, const KernelSpec& spec) {
    if (series.empty()) throw Error(ErrorKind::InvalidInput, "gram of an empty series");
    detail::require_finite(series);
    const KernelSpec k = resolve(spec, series);

    const std::size_t n = series.size();
    GramMatrix g(n);
    for (std::size_t a = 0; a < n; ++a) {
        g(a, a) = k(series[a], series[a]);
        for (std::size_t b = a + 1; b < n; ++b) {
            const double v = k(series[a], series[b]);
            g(a, b) = v;
            g(b, a) = v;
        }
    }
    return g;
}

/// H g H with H = I - 11'/n, computed by subtracting row and column means
/// and adding back the grand mean.
inline GramMatrix center(const GramMatrix& g) {
    const std::size_t n = g.size();
    std::vector<double> row_mean(n, 0.0);
    std::vector<double> col_mean(n, 0.0);
    double grand = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            row_mean[i] += g(i, j);
            col_mean[j] += g(i, j);
        }
    }
    const auto dn = static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        grand += row_mean[i];
        row_mean[i] /= dn;
        col_mean[i] /= dn;
    }
    grand /= dn * dn;

    GramMatrix out(n, true);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) out(i, j) = g(i, j) - row_mean[i] - col_mean[j] + grand;
    }
    return out;
}

}  // namespace shifthsic
