#pragma once

// Null distributions for the HSIC statistic: circular shifts of one series
// (valid under serial dependence) and random permutations (valid only for
// i.i.d. data, kept as the baseline). Also the add-one p-value and an
// absolute-correlation test that reuses the same resampling.

#include "shifthsic/error.hpp"
#include "shifthsic/kernels.hpp"
#include "shifthsic/parallel.hpp"
#include "shifthsic/random.hpp"
#include "shifthsic/statistic.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace shifthsic {

enum class NullKind { shift, permutation };

inline std::string to_string(NullKind kind) {
    return kind == NullKind::shift ? "shift" : "permutation";
}

inline constexpr std::size_t kMinPermutationResamples = 100;
inline constexpr std::size_t kDefaultPermutationResamples = 200;

struct NullMethod {
    NullKind kind = NullKind::shift;
    std::size_t shift_lo = 0;  // A
    std::size_t shift_hi = 0;  // B, inclusive
    std::size_t resamples = kDefaultPermutationResamples;
    std::uint64_t seed = 0;

    static NullMethod shift(std::size_t lo, std::size_t hi) {
        return {NullKind::shift, lo, hi, 0, 0};
    }

    /// A = max(20, ceil(0.1 n)), B = ceil(0.5 n). Short series where that
    /// would give A > B fall back to A = max(1, ceil(0.1 n)).
    static NullMethod default_shift(std::size_t n) {
        const auto tenth = static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(n)));
        const auto half = static_cast<std::size_t>(std::ceil(0.5 * static_cast<double>(n)));
        std::size_t lo = std::max<std::size_t>(20, tenth);
        if (lo > half) lo = std::max<std::size_t>(1, tenth);
        return shift(lo, half);
    }

    static NullMethod permutation(std::size_t resamples, std::uint64_t seed) {
        return {NullKind::permutation, 0, 0, resamples, seed};
    }

    [[nodiscard]] std::size_t sample_count() const noexcept {
        return kind == NullKind::shift ? shift_hi - shift_lo + 1 : resamples;
    }

    void validate(std::size_t n) const {
        if (kind == NullKind::shift) {
            if (shift_lo < 1 || shift_lo > shift_hi || shift_hi >= n) {
                throw Error(ErrorKind::InvalidShift,
                            "shift range must satisfy 1 <= A <= B < n (A=" + std::to_string(shift_lo) +
                                ", B=" + std::to_string(shift_hi) + ", n=" + std::to_string(n) + ")");
            }
        } else if (resamples < kMinPermutationResamples) {
            throw Error(ErrorKind::InvalidInput, "permutation null needs at least " +
                                                     std::to_string(kMinPermutationResamples) +
                                                     " resamples");
        }
    }
};

enum class TestStatistic { hsic, correlation };

inline std::string to_string(TestStatistic s) {
    return s == TestStatistic::hsic ? "hsic" : "correlation";
}

struct TestResult {
    TestStatistic test = TestStatistic::hsic;
    HsicValue statistic;
    std::vector<double> null_samples;
    double p_value = 1.0;
    NullMethod method;
    /// Kernels with data-dependent bandwidths already resolved (hsic only).
    KernelSpec kernel_x;
    KernelSpec kernel_y;
    std::size_t n = 0;
};

/// (1 + #{null >= statistic}) / (1 + m).
inline double p_value(double statistic, std::span<const double> null_samples) {
    if (null_samples.empty()) throw Error(ErrorKind::InvalidInput, "empty null sample");
    const auto exceed = std::count_if(null_samples.begin(), null_samples.end(),
                                      [statistic](double v) { return v >= statistic; });
    return (1.0 + static_cast<double>(exceed)) / (1.0 + static_cast<double>(null_samples.size()));
}

/// y rotated left by c: y'_t = y_{(t + c) mod n}.
inline SeriesPair shifted_pair(const SeriesPair& pair, std::size_t c) {
    pair.validate();
    if (c >= pair.size()) {
        throw Error(ErrorKind::InvalidShift,
                    "shift " + std::to_string(c) + " out of range for n=" + std::to_string(pair.size()));
    }
    SeriesPair out = pair;
    std::rotate(out.y.begin(), out.y.begin() + static_cast<std::ptrdiff_t>(c), out.y.end());
    return out;
}

/// HSIC of (x, y rotated by c) from centered Gram matrices, without rebuilding L.
inline double rotated_statistic(const GramMatrix& kc, const GramMatrix& lc, std::size_t c) {
    const std::size_t n = kc.size();
    std::vector<double> buf(n);
    double total = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
        const auto row = lc.row((a + c) % n);
        std::copy(row.begin() + static_cast<std::ptrdiff_t>(c), row.end(), buf.begin());
        std::copy(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(c),
                  buf.begin() + static_cast<std::ptrdiff_t>(n - c));
        total += detail::dot(kc.row(a).data(), buf.data(), n);
    }
    const double nn = static_cast<double>(n) * static_cast<double>(n);
    return HsicValue::from_raw(total / nn, n).value;
}

/// HSIC of (x, y_perm) where y_perm[a] = y[perm[a]], from centered Gram matrices.
inline double permuted_statistic(const GramMatrix& kc, const GramMatrix& lc,
                                 std::span<const std::size_t> perm) {
    const std::size_t n = kc.size();
    std::vector<double> buf(n);
    double total = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
        const auto row = lc.row(perm[a]);
        for (std::size_t b = 0; b < n; ++b) buf[b] = row[perm[b]];
        total += detail::dot(kc.row(a).data(), buf.data(), n);
    }
    const double nn = static_cast<double>(n) * static_cast<double>(n);
    return HsicValue::from_raw(total / nn, n).value;
}

/// Permutation r of a permutation null with master seed `seed`.
inline std::vector<std::size_t> null_permutation(std::size_t n, std::uint64_t seed, std::size_t r) {
    Rng rng(hash64(seed, {static_cast<std::uint64_t>(r)}));
    return rng.permutation(n);
}

inline std::vector<double> shift_null(const GramMatrix& kc, const GramMatrix& lc, std::size_t lo,
                                      std::size_t hi, std::size_t threads = 1) {
    NullMethod::shift(lo, hi).validate(kc.size());
    std::vector<double> out(hi - lo + 1);
    parallel_for(out.size(), threads, [&](std::size_t i) { out[i] = rotated_statistic(kc, lc, lo + i); });
    return out;
}

/// [hsic_v(shifted_pair(pair, k)) for k = lo..hi]. Both Gram matrices are built once.
inline std::vector<double> shift_null(const SeriesPair& pair, const KernelSpec& kx,
                                      const KernelSpec& ky, std::size_t lo, std::size_t hi,
                                      std::size_t threads = 1) {
    detail::require_min_size(pair, 2);
    NullMethod::shift(lo, hi).validate(pair.size());
    return shift_null(center(gram(pair.x, kx)), center(gram(pair.y, ky)), lo, hi, threads);
}

inline std::vector<double> permutation_null(const GramMatrix& kc, const GramMatrix& lc,
                                            std::size_t resamples, std::uint64_t seed,
                                            std::size_t threads = 1) {
    if (resamples < 1) throw Error(ErrorKind::InvalidInput, "resamples must be positive");
    std::vector<double> out(resamples);
    parallel_for(resamples, threads, [&](std::size_t r) {
        const auto perm = null_permutation(kc.size(), seed, r);
        out[r] = permuted_statistic(kc, lc, perm);
    });
    return out;
}

/// HSIC on (x, pi_r(y)) for r = 0..resamples-1; pi_r is drawn from the
/// substream hash64(seed, r), so the result does not depend on `threads`.
inline std::vector<double> permutation_null(const SeriesPair& pair, const KernelSpec& kx,
                                            const KernelSpec& ky, std::size_t resamples,
                                            std::uint64_t seed, std::size_t threads = 1) {
    detail::require_min_size(pair, 2);
    return permutation_null(center(gram(pair.x, kx)), center(gram(pair.y, ky)), resamples, seed,
                            threads);
}

/// HSIC statistic plus its null sample and p-value.
inline TestResult hsic_test(const SeriesPair& pair, const KernelSpec& kx, const KernelSpec& ky,
                            const NullMethod& method, std::size_t threads = 1) {
    detail::require_min_size(pair, 2);
    method.validate(pair.size());
    const KernelSpec rx = resolve(kx, pair.x);
    const KernelSpec ry = resolve(ky, pair.y);
    const GramMatrix kc = center(gram(pair.x, rx));
    const GramMatrix lc = center(gram(pair.y, ry));

    TestResult result;
    result.test = TestStatistic::hsic;
    result.statistic = hsic_from_centered(kc, lc);
    result.null_samples = method.kind == NullKind::shift
                              ? shift_null(kc, lc, method.shift_lo, method.shift_hi, threads)
                              : permutation_null(kc, lc, method.resamples, method.seed, threads);
    result.p_value = p_value(result.statistic.value, result.null_samples);
    result.method = method;
    result.kernel_x = rx;
    result.kernel_y = ry;
    result.n = pair.size();
    return result;
}

/// |Pearson correlation| with a null built by the same shift or permutation
/// resampling as the HSIC test.
inline TestResult correlation_test(const SeriesPair& pair, const NullMethod& method,
                                   std::size_t threads = 1) {
    detail::require_min_size(pair, 3);
    method.validate(pair.size());
    const std::size_t n = pair.size();
    const double observed = std::abs(pearson(pair.x, pair.y));

    std::vector<double> null(method.sample_count());
    parallel_for(null.size(), threads, [&](std::size_t i) {
        std::vector<double> y(n);
        if (method.kind == NullKind::shift) {
            const std::size_t c = method.shift_lo + i;
            for (std::size_t t = 0; t < n; ++t) y[t] = pair.y[(t + c) % n];
        } else {
            const auto perm = null_permutation(n, method.seed, i);
            for (std::size_t t = 0; t < n; ++t) y[t] = pair.y[perm[t]];
        }
        null[i] = std::abs(pearson(pair.x, y));
    });

    TestResult result;
    result.test = TestStatistic::correlation;
    result.statistic = {observed, n, observed};
    result.p_value = p_value(observed, null);
    result.null_samples = std::move(null);
    result.method = method;
    result.kernel_x = KernelSpec::linear();
    result.kernel_y = KernelSpec::linear();
    result.n = n;
    return result;
}

}  // namespace shifthsic
