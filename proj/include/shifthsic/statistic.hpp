#pragma once

// HSIC V-statistic, the symmetric core h, and the brute-force O(n^4) path
// used to cross-check it.

#include "shifthsic/error.hpp"
#include "shifthsic/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace shifthsic {

/// Two aligned real series (x_t, y_t), t = 0..n-1.
struct SeriesPair {
    std::vector<double> x;
    std::vector<double> y;
    std::optional<std::string> x_label;
    std::optional<std::string> y_label;

    [[nodiscard]] std::size_t size() const noexcept { return x.size(); }

    void validate() const {
        if (x.size() != y.size()) {
            throw Error(ErrorKind::InvalidInput, "series lengths differ (" + std::to_string(x.size()) +
                                                     " vs " + std::to_string(y.size()) + ")");
        }
        if (x.empty()) throw Error(ErrorKind::InvalidInput, "empty series pair");
        detail::require_finite(x);
        detail::require_finite(y);
    }
};

struct Point {
    double x;
    double y;
};

/// Biased HSIC estimate. `raw` keeps the unclamped value; `value` is raw
/// clamped at zero so roundoff never produces a negative statistic.
struct HsicValue {
    double value = 0.0;
    std::size_t n = 0;
    double raw = 0.0;

    static HsicValue from_raw(double raw, std::size_t n) { return {std::max(raw, 0.0), n, raw}; }
};

namespace detail {

/// Sum of a[i]*b[i] with four interleaved accumulators. Every statistic in the
/// library goes through this routine so equal inputs give bit-equal outputs.
inline double dot(const double* a, const double* b, std::size_t n) noexcept {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

/// Correctly rounded sum of `values` (Shewchuk's non-overlapping partials,
/// as in Python's math.fsum). Exactly cancelling terms sum to exactly zero.
template <std::size_t N>
double exact_sum(const std::array<double, N>& values) noexcept {
    std::array<double, N + 1> partials{};
    std::size_t count = 0;
    for (double x : values) {
        std::size_t i = 0;
        for (std::size_t j = 0; j < count; ++j) {
            double y = partials[j];
            if (std::abs(x) < std::abs(y)) std::swap(x, y);
            const double hi = x + y;
            const double lo = y - (hi - x);
            if (lo != 0.0) partials[i++] = lo;
            x = hi;
        }
        partials[i] = x;
        count = i + 1;
    }
    double total = 0.0;
    for (std::size_t j = count; j-- > 0;) total += partials[j];
    return total;
}

inline void require_min_size(const SeriesPair& pair, std::size_t min_n) {
    pair.validate();
    if (pair.size() < min_n) {
        throw Error(ErrorKind::InvalidInput,
                    "need at least " + std::to_string(min_n) + " observations, got " +
                        std::to_string(pair.size()));
    }
}

}  // namespace detail

/// n^-2 * sum_ab (HKH)_ab (HLH)_ab from two centered Gram matrices.
inline HsicValue hsic_from_centered(const GramMatrix& kc, const GramMatrix& lc) {
    const std::size_t n = kc.size();
    double total = 0.0;
    for (std::size_t a = 0; a < n; ++a) total += detail::dot(kc.row(a).data(), lc.row(a).data(), n);
    const double nn = static_cast<double>(n) * static_cast<double>(n);
    return HsicValue::from_raw(total / nn, n);
}

/// V(h, Z) = n^-2 tr(HKHL). Median-heuristic bandwidths are resolved per series.
inline HsicValue hsic_v(const SeriesPair& pair, const KernelSpec& kx, const KernelSpec& ky) {
    detail::require_min_size(pair, 2);
    return hsic_from_centered(center(gram(pair.x, kx)), center(gram(pair.y, ky)));
}

/// h(z1..z4) = 1/4! sum over S4 of k(x_p1,x_p2)[l(y_p1,y_p2) + l(y_p3,y_p4) - 2 l(y_p2,y_p3)],
/// evaluated term by term over all 24 orderings.
inline double core_h(Point z1, Point z2, Point z3, Point z4, const KernelSpec& kx,
                     const KernelSpec& ky) {
    if (kx.needs_data() || ky.needs_data()) {
        throw Error(ErrorKind::InvalidInput, "core_h needs explicit bandwidths");
    }
    kx.validate();
    ky.validate();
    const std::array<Point, 4> z{z1, z2, z3, z4};
    std::array<int, 4> p{0, 1, 2, 3};
    std::array<double, 24> terms{};
    std::size_t t = 0;
    do {
        const Point& a = z[p[0]];
        const Point& b = z[p[1]];
        const Point& c = z[p[2]];
        const Point& d = z[p[3]];
        // l12 + l34 - 2 l23, grouped so that terms which cancel mathematically
        // also cancel bit for bit
        const double l23 = ky(b.y, c.y);
        terms[t++] = kx(a.x, b.x) * ((ky(a.y, b.y) - l23) + (ky(c.y, d.y) - l23));
    } while (std::next_permutation(p.begin(), p.end()));
    return detail::exact_sum(terms) / 24.0;
}

inline constexpr std::size_t kBruteForceLimit = 14;

/// n^-4 * sum of core_h over all n^4 ordered index quadruples.
inline HsicValue hsic_v_bruteforce(const SeriesPair& pair, const KernelSpec& kx,
                                   const KernelSpec& ky) {
    detail::require_min_size(pair, 1);
    const std::size_t n = pair.size();
    if (n > kBruteForceLimit) {
        throw Error(ErrorKind::TooLarge, "brute-force HSIC is limited to n <= " +
                                             std::to_string(kBruteForceLimit));
    }
    const KernelSpec rx = resolve(kx, pair.x);
    const KernelSpec ry = resolve(ky, pair.y);
    std::vector<Point> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = {pair.x[i], pair.y[i]};

    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t l = 0; l < n; ++l) sum += core_h(z[i], z[j], z[k], z[l], rx, ry);
    const double n4 = std::pow(static_cast<double>(n), 4);
    return HsicValue::from_raw(sum / n4, n);
}

/// Empirical s(z_a, z_b) = (HKH)_ab * (HLH)_ab.
inline double s_kernel_empirical(const GramMatrix& kc, const GramMatrix& lc, std::size_t a,
                                 std::size_t b) {
    return kc(a, b) * lc(a, b);
}

inline double s_kernel_empirical(const SeriesPair& pair, std::size_t a, std::size_t b,
                                 const KernelSpec& kx, const KernelSpec& ky) {
    detail::require_min_size(pair, 2);
    if (a >= pair.size() || b >= pair.size()) {
        throw Error(ErrorKind::InvalidInput, "index out of range");
    }
    return s_kernel_empirical(center(gram(pair.x, kx)), center(gram(pair.y, ky)), a, b);
}

/// Pearson correlation; zero variance on either side is DegenerateSeries.
inline double pearson(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n != y.size() || n < 2) throw Error(ErrorKind::InvalidInput, "pearson needs two equal series");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw Error(ErrorKind::DegenerateSeries, "zero-variance series");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace shifthsic
