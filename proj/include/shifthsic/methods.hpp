#pragma once

// Named test methods used by the analysis and experiment layers.

#include "shifthsic/error.hpp"
#include "shifthsic/kernels.hpp"
#include "shifthsic/nulldist.hpp"
#include "shifthsic/statistic.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

namespace shifthsic {

enum class TestMethod {
    shift_hsic,      // HSIC, circular-shift null
    bootstrap_hsic,  // HSIC, permutation null
    correlation,     // |Pearson r|, circular-shift null
};

inline std::string to_string(TestMethod m) {
    switch (m) {
        case TestMethod::shift_hsic: return "shift_hsic";
        case TestMethod::bootstrap_hsic: return "bootstrap_hsic";
        case TestMethod::correlation: return "correlation";
    }
    return "unknown";
}

inline TestMethod parse_test_method(std::string_view name) {
    if (name == "shift_hsic" || name == "shift") return TestMethod::shift_hsic;
    if (name == "bootstrap_hsic" || name == "permutation" || name == "bootstrap") {
        return TestMethod::bootstrap_hsic;
    }
    if (name == "correlation") return TestMethod::correlation;
    throw Error(ErrorKind::InvalidInput, "unknown method '" + std::string(name) + "'");
}

struct TestOptions {
    KernelSpec kernel_x = KernelSpec::median_heuristic();
    KernelSpec kernel_y = KernelSpec::median_heuristic();
    /// Shift range (A, B); empty means NullMethod::default_shift(n).
    std::optional<std::pair<std::size_t, std::size_t>> shift_range;
    std::size_t resamples = kDefaultPermutationResamples;
    std::uint64_t seed = 0;
    std::size_t threads = 1;

    [[nodiscard]] NullMethod shift_method(std::size_t n) const {
        return shift_range ? NullMethod::shift(shift_range->first, shift_range->second)
                           : NullMethod::default_shift(n);
    }
};

inline TestResult run_test(const SeriesPair& pair, TestMethod method, const TestOptions& opts) {
    switch (method) {
        case TestMethod::shift_hsic:
            return hsic_test(pair, opts.kernel_x, opts.kernel_y, opts.shift_method(pair.size()), opts.threads);
        case TestMethod::bootstrap_hsic:
            return hsic_test(pair, opts.kernel_x, opts.kernel_y,
                             NullMethod::permutation(opts.resamples, opts.seed), opts.threads);
        case TestMethod::correlation:
            return correlation_test(pair, opts.shift_method(pair.size()), opts.threads);
    }
    throw Error(ErrorKind::InvalidInput, "unknown method");
}

}  // namespace shifthsic
