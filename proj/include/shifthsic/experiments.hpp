#pragma once

// Batch harness for the synthetic power and false-positive studies.
//
// Dataset seeds are derived as hash64(master_seed, grid_index, repetition);
// the permutation-null seed of a dataset is hash64(dataset_seed, 1). Both
// derivations are part of the report's reproducibility contract.

#include "shifthsic/error.hpp"
#include "shifthsic/io.hpp"
#include "shifthsic/methods.hpp"
#include "shifthsic/parallel.hpp"
#include "shifthsic/random.hpp"
#include "shifthsic/synth.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace shifthsic {

enum class ExperimentDesign {
    tp_vs_extinction,  // dependent pairs, grid over extinction rate p
    fp_vs_ar,          // independent pairs, grid over AR coefficient a
};

inline std::string to_string(ExperimentDesign d) {
    return d == ExperimentDesign::tp_vs_extinction ? "tp_vs_extinction" : "fp_vs_ar";
}

struct ExperimentSpec {
    ExperimentDesign design = ExperimentDesign::fp_vs_ar;
    std::vector<double> grid;
    std::size_t n = 600;
    std::size_t repetitions = 100;
    double alpha = 0.05;
    std::vector<TestMethod> methods;
    std::uint64_t master_seed = 0;
    /// Worker count; 0 means one per logical core. Never affects results.
    std::size_t parallelism = 1;

    // Process parameters held fixed across the grid.
    double ar_coeff = 0.2;
    double extinction_rate = 0.5;
    double radius = 1.0;
    std::size_t burn_in = 1000;

    std::optional<std::pair<std::size_t, std::size_t>> shift_range;
    std::size_t resamples = kDefaultPermutationResamples;

    static ExperimentSpec tp_default() {
        ExperimentSpec s;
        s.design = ExperimentDesign::tp_vs_extinction;
        s.grid = {0.0, 0.5, 0.9, 0.9987};
        s.methods = {TestMethod::shift_hsic, TestMethod::bootstrap_hsic, TestMethod::correlation};
        return s;
    }

    static ExperimentSpec fp_default() {
        ExperimentSpec s;
        s.design = ExperimentDesign::fp_vs_ar;
        s.grid = {0.1, 0.3, 0.5, 0.7, 0.9};
        s.methods = {TestMethod::shift_hsic, TestMethod::bootstrap_hsic};
        return s;
    }

    /// Sample size 1200 with 300 repetitions per grid point.
    void use_paper_scale() {
        n = 1200;
        repetitions = 300;
    }

    [[nodiscard]] ProcessConfig process(std::size_t grid_index, std::uint64_t seed) const {
        ProcessConfig cfg;
        cfg.ar_coeff = ar_coeff;
        cfg.extinction_rate = extinction_rate;
        cfg.radius = radius;
        cfg.length = n;
        cfg.burn_in = burn_in;
        cfg.seed = seed;
        if (design == ExperimentDesign::tp_vs_extinction) {
            cfg.extinction_rate = grid[grid_index];
            cfg.coupling = Coupling::dependent;
        } else {
            cfg.ar_coeff = grid[grid_index];
            cfg.coupling = Coupling::independent;
        }
        return cfg;
    }

    void validate() const {
        auto bad = [](const std::string& field, const std::string& why) {
            throw Error(ErrorKind::InvalidSpec, "field '" + field + "': " + why);
        };
        if (repetitions < 1) bad("repetitions", "must be at least 1");
        if (grid.empty()) bad("grid", "must not be empty");
        if (!(alpha > 0.0 && alpha < 1.0)) bad("alpha", "must lie in (0, 1)");
        if (methods.empty()) bad("methods", "must not be empty");
        if (n < 10) bad("n", "must be at least 10");
        for (std::size_t g = 0; g < grid.size(); ++g) {
            try {
                process(g, 0).validate();
            } catch (const Error& e) {
                bad("grid", e.what());
            }
        }
        if (shift_range) {
            try {
                NullMethod::shift(shift_range->first, shift_range->second).validate(n);
            } catch (const Error& e) {
                bad("shift_range", e.what());
            }
        }
        if (resamples < kMinPermutationResamples) bad("resamples", "must be at least 100");
    }
};

inline std::uint64_t dataset_seed(std::uint64_t master, std::size_t grid_index, std::size_t repetition) {
    return hash64(master, {grid_index, repetition});
}

struct ExperimentCell {
    double grid_value = 0.0;
    std::string method;
    std::size_t rejections = 0;
    std::size_t repetitions = 0;

    [[nodiscard]] double rate() const {
        return repetitions == 0 ? 0.0 : static_cast<double>(rejections) / static_cast<double>(repetitions);
    }
    [[nodiscard]] double standard_error() const {
        if (repetitions == 0) return 0.0;
        const double r = rate();
        return std::sqrt(r * (1.0 - r) / static_cast<double>(repetitions));
    }
};

struct ExperimentReport {
    ExperimentSpec spec;
    std::vector<ExperimentCell> cells;  // grid-major, then method order
    bool complete = true;
    std::vector<double> wall_clock_seconds;  // per grid point; not serialized

    [[nodiscard]] const ExperimentCell& cell(std::size_t grid_index, TestMethod method) const {
        for (std::size_t m = 0; m < spec.methods.size(); ++m) {
            if (spec.methods[m] == method) return cells.at(grid_index * spec.methods.size() + m);
        }
        throw Error(ErrorKind::InvalidInput, "method not in report: " + to_string(method));
    }
};

/// Runs every (grid point, repetition) dataset through every method. Setting
/// *cancel stops scheduling new datasets; the report then covers the
/// datasets finished so far and is marked incomplete.
inline ExperimentReport run_experiment(const ExperimentSpec& spec, const std::atomic<bool>* cancel = nullptr) {
    spec.validate();
    const std::size_t methods = spec.methods.size();
    const std::size_t jobs = spec.grid.size() * spec.repetitions;
    // 0 = not run, 1 = accepted, 2 = rejected
    std::vector<unsigned char> outcome(jobs * methods, 0);
    std::vector<double> seconds(jobs, 0.0);

    parallel_for(jobs, spec.parallelism, [&](std::size_t job) {
        if (cancel && cancel->load(std::memory_order_relaxed)) return;
        const auto started = std::chrono::steady_clock::now();
        const std::size_t g = job / spec.repetitions;
        const std::size_t r = job % spec.repetitions;
        const std::uint64_t seed = dataset_seed(spec.master_seed, g, r);
        const SeriesPair pair = simulate_pair(spec.process(g, seed));

        TestOptions opts;
        opts.shift_range = spec.shift_range;
        opts.resamples = spec.resamples;
        opts.seed = hash64(seed, {1});
        for (std::size_t m = 0; m < methods; ++m) {
            const double p = run_test(pair, spec.methods[m], opts).p_value;
            outcome[job * methods + m] = p <= spec.alpha ? 2 : 1;
        }
        seconds[job] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    });

    ExperimentReport report;
    report.spec = spec;
    report.wall_clock_seconds.assign(spec.grid.size(), 0.0);
    for (std::size_t g = 0; g < spec.grid.size(); ++g) {
        for (std::size_t m = 0; m < methods; ++m) {
            ExperimentCell cell{spec.grid[g], to_string(spec.methods[m]), 0, 0};
            for (std::size_t r = 0; r < spec.repetitions; ++r) {
                const unsigned char o = outcome[(g * spec.repetitions + r) * methods + m];
                if (o == 0) {
                    report.complete = false;
                    continue;
                }
                ++cell.repetitions;
                if (o == 2) ++cell.rejections;
            }
            report.cells.push_back(std::move(cell));
        }
        for (std::size_t r = 0; r < spec.repetitions; ++r) {
            report.wall_clock_seconds[g] += seconds[g * spec.repetitions + r];
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json spec_to_json(const ExperimentSpec& s) {
    nlohmann::json methods = nlohmann::json::array();
    for (auto m : s.methods) methods.push_back(to_string(m));
    nlohmann::json j = {{"design", to_string(s.design)},
                        {"grid", s.grid},
                        {"n", s.n},
                        {"repetitions", s.repetitions},
                        {"alpha", s.alpha},
                        {"methods", methods},
                        {"master_seed", s.master_seed},
                        {"ar_coeff", s.ar_coeff},
                        {"extinction_rate", s.extinction_rate},
                        {"radius", s.radius},
                        {"burn_in", s.burn_in},
                        {"resamples", s.resamples}};
    if (s.shift_range) j["shift_range"] = {s.shift_range->first, s.shift_range->second};
    return j;
}

/// Parses a spec file. Missing fields take the design's defaults; every
/// problem is reported as InvalidSpec naming the offending field.
/// `parallelism` is accepted but is a run setting, not part of the echo.
inline ExperimentSpec spec_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorKind::InvalidSpec, "spec must be a JSON object");
    static const std::vector<std::string> known = {
        "design", "grid",   "n",         "repetitions", "alpha",  "methods",     "master_seed",
        "ar_coeff", "extinction_rate", "radius", "burn_in", "resamples", "shift_range", "parallelism"};
    for (const auto& [key, value] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw Error(ErrorKind::InvalidSpec, "field '" + key + "': unknown field");
        }
    }
    if (!j.contains("design")) throw Error(ErrorKind::InvalidSpec, "field 'design': missing");

    std::string field;
    try {
        field = "design";
        const auto design = j.at("design").get<std::string>();
        ExperimentSpec s;
        if (design == "tp_vs_extinction") {
            s = ExperimentSpec::tp_default();
        } else if (design == "fp_vs_ar") {
            s = ExperimentSpec::fp_default();
        } else {
            throw Error(ErrorKind::InvalidSpec, "field 'design': unknown design '" + design + "'");
        }
        auto read = [&](const char* name, auto& target) {
            field = name;
            if (j.contains(name)) target = j.at(name).get<std::decay_t<decltype(target)>>();
        };
        read("grid", s.grid);
        read("n", s.n);
        read("repetitions", s.repetitions);
        read("alpha", s.alpha);
        read("master_seed", s.master_seed);
        read("parallelism", s.parallelism);
        read("ar_coeff", s.ar_coeff);
        read("extinction_rate", s.extinction_rate);
        read("radius", s.radius);
        read("burn_in", s.burn_in);
        read("resamples", s.resamples);
        field = "methods";
        if (j.contains("methods")) {
            s.methods.clear();
            for (const auto& m : j.at("methods")) s.methods.push_back(parse_test_method(m.get<std::string>()));
        }
        field = "shift_range";
        if (j.contains("shift_range")) {
            const auto range = j.at("shift_range").get<std::vector<std::size_t>>();
            if (range.size() != 2) throw Error(ErrorKind::InvalidSpec, "field 'shift_range': expected [A, B]");
            s.shift_range = std::pair{range[0], range[1]};
        }
        s.validate();
        return s;
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::InvalidSpec) throw;
        throw Error(ErrorKind::InvalidSpec, "field '" + field + "': " + e.what());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidSpec, "field '" + field + "': " + e.what());
    }
}

inline void write_report_csv(std::ostream& out, const ExperimentReport& report) {
    out << "grid_value,method,rejections,repetitions,rate,stderr\n";
    for (const auto& c : report.cells) {
        out << format_double(c.grid_value) << ',' << c.method << ',' << c.rejections << ',' << c.repetitions
            << ',' << format_double(c.rate()) << ',' << format_double(c.standard_error()) << '\n';
    }
}

inline nlohmann::json report_to_json(const ExperimentReport& report) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : report.cells) {
        cells.push_back({{"grid_value", c.grid_value},
                         {"method", c.method},
                         {"rejections", c.rejections},
                         {"repetitions", c.repetitions},
                         {"rate", c.rate()},
                         {"stderr", c.standard_error()}});
    }
    return {{"spec", spec_to_json(report.spec)}, {"complete", report.complete}, {"cells", cells}};
}

inline ExperimentReport report_from_json(const nlohmann::json& j) {
    ExperimentReport report;
    report.spec = spec_from_json(j.at("spec"));
    report.complete = j.at("complete").get<bool>();
    for (const auto& c : j.at("cells")) {
        report.cells.push_back({c.at("grid_value").get<double>(), c.at("method").get<std::string>(),
                                c.at("rejections").get<std::size_t>(), c.at("repetitions").get<std::size_t>()});
    }
    return report;
}

}  // namespace shifthsic
