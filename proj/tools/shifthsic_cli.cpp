// shifthsic command-line interface.
//
// Exit codes: 0 independence not rejected (or success), 10 rejected,
// 2 usage / invalid arguments, 3 data errors, 4 internal errors.

#include "shifthsic/shifthsic.hpp"

#include "CLI11.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace shifthsic;

namespace {

constexpr int kExitAccept = 0;
constexpr int kExitReject = 10;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;

std::atomic<bool> g_interrupted{false};

extern "C" void on_sigint(int) { g_interrupted.store(true); }

void log(const char* level, const std::string& message) { std::cerr << level << ": " << message << '\n'; }

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidInput:
        case ErrorKind::InvalidShift:
        case ErrorKind::NonStationary:
        case ErrorKind::InvalidSpec:
        case ErrorKind::TooLarge:
        case ErrorKind::Io:
            return kExitUsage;
        case ErrorKind::DegenerateSeries:
        case ErrorKind::ParseError:
        case ErrorKind::OrderError:
        case ErrorKind::EmptyInput:
        case ErrorKind::TooShort:
        case ErrorKind::NoOverlap:
        case ErrorKind::SingularDesign:
            return kExitData;
        case ErrorKind::GeneratorStall:
            return kExitInternal;
    }
    return kExitInternal;
}

struct GlobalOptions {
    std::uint64_t seed = 0;
    std::size_t threads = 0;
    std::string kernel = "gaussian";
    std::string bandwidth = "median";
    std::string output = "-";
    std::string format;

    [[nodiscard]] KernelSpec kernel_spec() const {
        if (kernel == "linear") return KernelSpec::linear();
        if (kernel != "gaussian") throw Error(ErrorKind::InvalidInput, "unknown kernel '" + kernel + "'");
        if (bandwidth == "median") return KernelSpec::median_heuristic();
        double sigma = 0.0;
        if (!parse_number(bandwidth, sigma)) {
            throw Error(ErrorKind::InvalidInput, "bandwidth must be a number or 'median'");
        }
        KernelSpec spec = KernelSpec::gaussian(sigma);
        spec.validate();
        return spec;
    }

    [[nodiscard]] std::string format_or(const std::string& fallback) const {
        const std::string f = format.empty() ? fallback : format;
        if (f != "csv" && f != "json") throw Error(ErrorKind::InvalidInput, "format must be csv or json");
        return f;
    }
};

/// Writes to --output, or stdout for "-".
template <typename WriteFn>
void emit(const std::string& output, WriteFn&& write) {
    if (output == "-") {
        write(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream out(output);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + output);
    write(out);
    if (!out) throw Error(ErrorKind::Io, "write failed for " + output);
}

void require_file(const std::string& path) {
    if (!fs::exists(path)) throw Error(ErrorKind::Io, "no such file: " + path);
}

nlohmann::json kernel_json(const KernelSpec& k) {
    nlohmann::json j = {{"family", to_string(k.family)}};
    if (k.bandwidth) j["bandwidth"] = *k.bandwidth;
    return j;
}

nlohmann::json method_json(const NullMethod& m) {
    nlohmann::json j = {{"kind", to_string(m.kind)}};
    if (m.kind == NullKind::shift) {
        j["shift_lo"] = m.shift_lo;
        j["shift_hi"] = m.shift_hi;
    } else {
        j["resamples"] = m.resamples;
        j["seed"] = m.seed;
    }
    return j;
}

nlohmann::json test_result_json(const TestResult& r, double alpha) {
    return {{"test", to_string(r.test)},
            {"statistic", r.statistic.value},
            {"raw_statistic", r.statistic.raw},
            {"n", r.n},
            {"p_value", r.p_value},
            {"alpha", alpha},
            {"reject", r.p_value <= alpha},
            {"method", method_json(r.method)},
            {"kernel_x", kernel_json(r.kernel_x)},
            {"kernel_y", kernel_json(r.kernel_y)},
            {"null_samples", r.null_samples}};
}

std::vector<std::string> unique_names(const std::vector<std::string>& paths) {
    std::vector<std::string> names;
    for (const auto& p : paths) {
        std::string base = fs::path(p).stem().string();
        std::string name = base;
        for (int k = 2; std::find(names.begin(), names.end(), name) != names.end(); ++k) {
            name = base + "_" + std::to_string(k);
        }
        names.push_back(name);
    }
    return names;
}

SeriesPair difference_pair(const SeriesPair& pair) {
    if (pair.size() < 2) throw Error(ErrorKind::TooShort, "difference needs at least 2 values");
    SeriesPair out = pair;
    out.x.clear();
    out.y.clear();
    for (std::size_t t = 0; t + 1 < pair.size(); ++t) {
        out.x.push_back(pair.x[t + 1] - pair.x[t]);
        out.y.push_back(pair.y[t + 1] - pair.y[t]);
    }
    return out;
}

GapPolicy parse_gap_policy(const std::string& s) {
    if (s == "carry_forward") return GapPolicy::carry_forward;
    if (s == "drop") return GapPolicy::drop;
    throw Error(ErrorKind::InvalidInput, "gap policy must be carry_forward or drop");
}

/// Loads two tick files and turns them into one aligned pair, optionally
/// granulated (interval > 0) and differenced.
SeriesPair load_aligned(const std::string& x_path, const std::string& y_path, std::int64_t interval,
                        bool differenced, GapPolicy policy) {
    require_file(x_path);
    require_file(y_path);
    const TickSeries x = load_csv(x_path);
    const TickSeries y = load_csv(y_path);
    if (interval > 0) {
        RegularSeries gx = granulate(x, interval, policy);
        RegularSeries gy = granulate(y, interval, policy);
        if (differenced) {
            gx = difference(gx);
            gy = difference(gy);
        }
        return align(gx, gy).pair;
    }
    SeriesPair pair = inner_join(x, y).pair;
    return differenced ? difference_pair(pair) : pair;
}

// ---------------------------------------------------------------------------

struct TestArgs {
    std::string x, y, paired;
    std::string method = "shift";
    std::string statistic = "hsic";
    std::optional<std::size_t> shift_lo, shift_hi;
    std::size_t resamples = kDefaultPermutationResamples;
    double alpha = 0.05;
};

int cmd_test(const GlobalOptions& g, const TestArgs& a) {
    if (!(a.alpha > 0.0 && a.alpha < 1.0)) throw Error(ErrorKind::InvalidInput, "alpha must lie in (0, 1)");
    if (a.paired.empty() == (a.x.empty() || a.y.empty())) {
        throw Error(ErrorKind::InvalidInput, "give either --paired or both --x and --y");
    }
    if (a.shift_lo.has_value() != a.shift_hi.has_value()) {
        throw Error(ErrorKind::InvalidInput, "--shift-lo and --shift-hi go together");
    }
    const KernelSpec kernel = g.kernel_spec();
    const std::string format = g.format_or("json");

    SeriesPair pair;
    if (!a.paired.empty()) {
        require_file(a.paired);
        pair = load_pair_csv(a.paired).pair;
    } else {
        pair = load_aligned(a.x, a.y, 0, false, GapPolicy::carry_forward);
    }
    pair.validate();

    NullMethod method;
    if (a.method == "shift") {
        method = a.shift_lo ? NullMethod::shift(*a.shift_lo, *a.shift_hi) : NullMethod::default_shift(pair.size());
    } else if (a.method == "permutation") {
        method = NullMethod::permutation(a.resamples, g.seed);
    } else {
        throw Error(ErrorKind::InvalidInput, "method must be shift or permutation");
    }
    method.validate(pair.size());

    TestResult result;
    if (a.statistic == "hsic") {
        result = hsic_test(pair, kernel, kernel, method, g.threads);
    } else if (a.statistic == "correlation") {
        result = correlation_test(pair, method, g.threads);
    } else {
        throw Error(ErrorKind::InvalidInput, "statistic must be hsic or correlation");
    }

    emit(g.output, [&](std::ostream& out) {
        if (format == "json") {
            out << test_result_json(result, a.alpha).dump(2) << '\n';
        } else {
            out << "test,statistic,p_value,n,null_samples,reject\n"
                << to_string(result.test) << ',' << format_double(result.statistic.value) << ','
                << format_double(result.p_value) << ',' << result.n << ',' << result.null_samples.size() << ','
                << (result.p_value <= a.alpha ? "true" : "false") << '\n';
        }
    });
    return result.p_value <= a.alpha ? kExitReject : kExitAccept;
}

struct SimulateArgs {
    std::string design = "dependent";
    double a = 0.2;
    double p = 0.5;
    double r = 1.0;
    std::size_t n = 600;
    std::size_t burn_in = 1000;
};

int cmd_simulate(const GlobalOptions& g, const SimulateArgs& s) {
    ProcessConfig cfg;
    if (s.design == "dependent") {
        cfg.coupling = Coupling::dependent;
    } else if (s.design == "independent") {
        cfg.coupling = Coupling::independent;
    } else {
        throw Error(ErrorKind::InvalidInput, "design must be dependent or independent");
    }
    cfg.ar_coeff = s.a;
    cfg.extinction_rate = s.p;
    cfg.radius = s.r;
    cfg.length = s.n;
    cfg.burn_in = s.burn_in;
    cfg.seed = g.seed;
    const std::string format = g.format_or("csv");
    const SeriesPair pair = simulate_pair(cfg);

    emit(g.output, [&](std::ostream& out) {
        if (format == "json") {
            const nlohmann::json j = {{"config",
                                       {{"design", to_string(cfg.coupling)},
                                        {"a", cfg.ar_coeff},
                                        {"p", cfg.extinction_rate},
                                        {"r", cfg.radius},
                                        {"n", cfg.length},
                                        {"burn_in", cfg.burn_in},
                                        {"seed", cfg.seed}}},
                                      {"x", pair.x},
                                      {"y", pair.y}};
            out << j.dump(2) << '\n';
        } else {
            AlignedPair aligned{pair, {}};
            for (std::size_t t = 0; t < pair.size(); ++t) aligned.timestamps.push_back(static_cast<std::int64_t>(t));
            write_pair_csv(out, aligned);
        }
    });
    return kExitAccept;
}

struct ExperimentArgs {
    std::string spec;
    bool paper_scale = false;
};

int cmd_experiment(const GlobalOptions& g, const ExperimentArgs& a, bool threads_given) {
    require_file(a.spec);
    std::ifstream in(a.spec);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidSpec, std::string("spec is not valid JSON: ") + e.what());
    }
    ExperimentSpec spec = spec_from_json(j);
    if (a.paper_scale) spec.use_paper_scale();
    if (threads_given) spec.parallelism = g.threads;
    spec.validate();
    const std::string format = g.format_or("csv");

    log("INFO", "running " + to_string(spec.design) + ": " + std::to_string(spec.grid.size()) + " grid points x " +
                    std::to_string(spec.repetitions) + " repetitions, n=" + std::to_string(spec.n));
    std::signal(SIGINT, on_sigint);
    const ExperimentReport report = run_experiment(spec, &g_interrupted);
    std::signal(SIGINT, SIG_DFL);
    for (std::size_t i = 0; i < spec.grid.size(); ++i) {
        log("INFO", "grid " + format_double(spec.grid[i]) + ": " + format_double(report.wall_clock_seconds[i]) +
                        " s");
    }

    emit(g.output, [&](std::ostream& out) {
        if (format == "json") {
            out << report_to_json(report).dump(2) << '\n';
        } else {
            write_report_csv(out, report);
        }
    });
    if (!report.complete) {
        log("WARN", "interrupted; partial report written");
        return kExitInternal;
    }
    return kExitAccept;
}

struct ScanArgs {
    std::string x, y;
    std::size_t max_reg_lag = 6;
    std::size_t max_scan_lag = 30;
    std::vector<std::string> methods{"shift_hsic", "bootstrap_hsic"};
    std::int64_t granulate = 0;
    bool difference = false;
    bool intercept = false;
    std::string gap_policy = "carry_forward";
    std::optional<std::size_t> shift_lo, shift_hi;
    std::size_t resamples = kDefaultPermutationResamples;
};

int cmd_scan(const GlobalOptions& g, const ScanArgs& a) {
    if (a.shift_lo.has_value() != a.shift_hi.has_value()) {
        throw Error(ErrorKind::InvalidInput, "--shift-lo and --shift-hi go together");
    }
    std::vector<TestMethod> methods;
    for (const auto& m : a.methods) methods.push_back(parse_test_method(m));
    const std::string format = g.format_or("csv");

    const SeriesPair pair = load_aligned(a.x, a.y, a.granulate, a.difference, parse_gap_policy(a.gap_policy));
    if (4 * a.max_scan_lag >= pair.size()) {
        throw Error(ErrorKind::InvalidInput, "--max-scan-lag must be below n/4 (n=" + std::to_string(pair.size()) + ")");
    }
    const LagFit fit = ols_lag_fit(pair, a.max_reg_lag, a.intercept);
    std::string coeffs;
    for (std::size_t i = 0; i < fit.coefficients.size(); ++i) {
        coeffs += (i ? " " : "") + std::string("a") + std::to_string(i) + "=" + format_double(fit.coefficients[i]);
    }
    log("INFO", "lag regression: " + coeffs);

    TestOptions opts;
    opts.kernel_x = opts.kernel_y = g.kernel_spec();
    if (a.shift_lo) opts.shift_range = std::pair{*a.shift_lo, *a.shift_hi};
    opts.resamples = a.resamples;
    opts.seed = g.seed;
    opts.threads = g.threads;
    const LagScanResult scan = lag_scan(fit, pair.x, a.max_scan_lag, methods, opts);

    emit(g.output, [&](std::ostream& out) {
        if (format == "json") {
            out << lag_scan_json(scan).dump(2) << '\n';
        } else {
            write_lag_scan_csv(out, scan);
        }
    });
    return kExitAccept;
}

struct GraphArgs {
    std::vector<std::string> inputs;
    double alpha = 0.05;
    std::int64_t granulate = 120000;
    bool difference = false;
    std::string gap_policy = "carry_forward";
    std::string method = "shift_hsic";
    std::optional<std::size_t> shift_lo, shift_hi;
    std::size_t resamples = kDefaultPermutationResamples;
};

int cmd_graph(const GlobalOptions& g, const GraphArgs& a) {
    if (a.inputs.size() < 2) throw Error(ErrorKind::InvalidInput, "need at least two --inputs");
    if (a.shift_lo.has_value() != a.shift_hi.has_value()) {
        throw Error(ErrorKind::InvalidInput, "--shift-lo and --shift-hi go together");
    }
    const TestMethod method = parse_test_method(a.method);
    const GapPolicy policy = parse_gap_policy(a.gap_policy);
    for (const auto& p : a.inputs) require_file(p);

    TestOptions opts;
    opts.kernel_x = opts.kernel_y = g.kernel_spec();
    if (a.shift_lo) opts.shift_range = std::pair{*a.shift_lo, *a.shift_hi};
    opts.resamples = a.resamples;
    opts.seed = g.seed;
    opts.threads = g.threads;

    const std::vector<std::string> names = unique_names(a.inputs);
    std::vector<TickSeries> ticks;
    for (std::size_t i = 0; i < a.inputs.size(); ++i) {
        ticks.push_back(load_csv(a.inputs[i]));
        ticks.back().name = names[i];
    }

    std::function<SeriesPair(std::size_t, std::size_t)> pair_of;
    std::vector<RegularSeries> regular;
    if (a.granulate > 0) {
        for (const auto& t : ticks) {
            RegularSeries r = granulate(t, a.granulate, policy);
            regular.push_back(a.difference ? difference(r) : std::move(r));
        }
        pair_of = [&](std::size_t i, std::size_t j) { return align(regular[i], regular[j]).pair; };
    } else {
        pair_of = [&](std::size_t i, std::size_t j) {
            SeriesPair p = inner_join(ticks[i], ticks[j]).pair;
            return a.difference ? difference_pair(p) : p;
        };
    }

    const DependenceGraph primary = dependence_graph(names, pair_of, method, a.alpha, opts);
    const DependenceGraph baseline = dependence_graph(names, pair_of, TestMethod::correlation, a.alpha, opts);
    log("INFO", to_string(method) + " edges: " + std::to_string(primary.edges.size()) +
                    ", correlation edges: " + std::to_string(baseline.edges.size()));

    const nlohmann::json j = {{"graphs", {graph_json(primary), graph_json(baseline)}}};
    if (g.output == "-") {
        if (g.format_or("json") == "json") {
            std::cout << j.dump(2) << '\n';
        } else {
            write_dot(std::cout, primary);
            write_dot(std::cout, baseline);
        }
        return kExitAccept;
    }
    emit(g.output + ".json", [&](std::ostream& out) { out << j.dump(2) << '\n'; });
    emit(g.output + "." + primary.name + ".dot", [&](std::ostream& out) { write_dot(out, primary); });
    emit(g.output + "." + baseline.name + ".dot", [&](std::ostream& out) { write_dot(out, baseline); });
    return kExitAccept;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Shift-HSIC independence testing for pairs of time series"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    auto* threads_opt = app.add_option("--threads", g.threads, "Worker threads (0 = all cores)");
    app.add_option("--seed", g.seed, "Master random seed");
    app.add_option("--kernel", g.kernel, "Kernel family")->check(CLI::IsMember({"gaussian", "linear"}));
    app.add_option("--bandwidth", g.bandwidth, "Gaussian bandwidth or 'median'");
    app.add_option("--output", g.output, "Output path ('-' for stdout; a prefix for graph)");
    app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}));

    TestArgs test;
    auto* test_cmd = app.add_subcommand("test", "Test independence of two series");
    test_cmd->add_option("--x", test.x, "CSV timestamp_ms,price for x");
    test_cmd->add_option("--y", test.y, "CSV timestamp_ms,price for y");
    test_cmd->add_option("--paired", test.paired, "CSV timestamp_ms,x,y");
    test_cmd->add_option("--method", test.method, "shift or permutation");
    test_cmd->add_option("--statistic", test.statistic, "hsic or correlation");
    test_cmd->add_option("--shift-lo", test.shift_lo, "Smallest shift A");
    test_cmd->add_option("--shift-hi", test.shift_hi, "Largest shift B");
    test_cmd->add_option("--resamples", test.resamples, "Permutations for the permutation null");
    test_cmd->add_option("--alpha", test.alpha, "Significance level");

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Simulate an AR(1) pair with Extinct Gaussian innovations");
    sim_cmd->add_option("--design", sim.design, "dependent or independent");
    sim_cmd->add_option("--a", sim.a, "AR coefficient");
    sim_cmd->add_option("--p", sim.p, "Extinction rate");
    sim_cmd->add_option("--r", sim.r, "Extinction radius");
    sim_cmd->add_option("--n", sim.n, "Length");
    sim_cmd->add_option("--burn-in", sim.burn_in, "Discarded initial steps");

    ExperimentArgs exp;
    auto* exp_cmd = app.add_subcommand("experiment", "Run a rejection-rate experiment from a JSON spec");
    exp_cmd->add_option("--spec", exp.spec, "Experiment spec file")->required();
    exp_cmd->add_flag("--paper-scale", exp.paper_scale, "Use n=1200 and 300 repetitions");

    ScanArgs scan;
    auto* scan_cmd = app.add_subcommand("scan", "Residual lag scan after a distributed-lag fit of y on x");
    scan_cmd->add_option("--x", scan.x, "Explanatory series CSV")->required();
    scan_cmd->add_option("--y", scan.y, "Response series CSV")->required();
    scan_cmd->add_option("--max-reg-lag", scan.max_reg_lag, "Regression lags 0..q");
    scan_cmd->add_option("--max-scan-lag", scan.max_scan_lag, "Scan lags 0..L");
    scan_cmd->add_option("--method", scan.methods, "shift_hsic, bootstrap_hsic, correlation")->delimiter(',');
    scan_cmd->add_option("--granulate", scan.granulate, "Granulation interval in ms (0 = none)");
    scan_cmd->add_flag("--difference", scan.difference, "Difference the series first");
    scan_cmd->add_flag("--intercept", scan.intercept, "Fit an intercept");
    scan_cmd->add_option("--gap-policy", scan.gap_policy, "carry_forward or drop");
    scan_cmd->add_option("--shift-lo", scan.shift_lo, "Smallest shift A");
    scan_cmd->add_option("--shift-hi", scan.shift_hi, "Largest shift B");
    scan_cmd->add_option("--resamples", scan.resamples, "Permutations for bootstrap_hsic");

    GraphArgs graph;
    auto* graph_cmd = app.add_subcommand("graph", "Pairwise dependence graph over several series");
    graph_cmd->add_option("--inputs", graph.inputs, "Series CSV files")->required();
    graph_cmd->add_option("--alpha", graph.alpha, "Edge threshold on p-values");
    graph_cmd->add_option("--granulate", graph.granulate, "Granulation interval in ms (0 = none)");
    graph_cmd->add_flag("--difference", graph.difference, "Difference the series first");
    graph_cmd->add_option("--gap-policy", graph.gap_policy, "carry_forward or drop");
    graph_cmd->add_option("--method", graph.method, "shift_hsic or bootstrap_hsic");
    graph_cmd->add_option("--shift-lo", graph.shift_lo, "Smallest shift A");
    graph_cmd->add_option("--shift-hi", graph.shift_hi, "Largest shift B");
    graph_cmd->add_option("--resamples", graph.resamples, "Permutations for bootstrap_hsic");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*test_cmd) return cmd_test(g, test);
        if (*sim_cmd) return cmd_simulate(g, sim);
        if (*exp_cmd) return cmd_experiment(g, exp, threads_opt->count() > 0);
        if (*scan_cmd) return cmd_scan(g, scan);
        if (*graph_cmd) return cmd_graph(g, graph);
    } catch (const Error& e) {
        log("ERROR", e.what());
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        log("ERROR", e.what());
        return kExitInternal;
    }
    return kExitUsage;
}
