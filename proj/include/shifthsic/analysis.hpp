#pragma once

// Studies built on the pairwise test: residual lag scans after a linear
// distributed-lag fit, serial-dependence diagnostics and dependence graphs.

#include "shifthsic/error.hpp"
#include "shifthsic/io.hpp"
#include "shifthsic/ingest.hpp"
#include "shifthsic/methods.hpp"
#include "shifthsic/parallel.hpp"
#include "shifthsic/random.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace shifthsic {

/// Residuals with |r| below this fraction of max |y| are rounding noise of an
/// exact fit and are stored as 0.
inline constexpr double kResidualZeroTolerance = 1e-12;

/// y_t ~ a_0 x_t + ... + a_q x_{t-q} (+ c). Residuals cover t = q..n-1.
struct LagFit {
    std::vector<double> coefficients;
    std::optional<double> intercept;
    std::vector<double> residuals;
    std::size_t max_lag = 0;
};

inline LagFit ols_lag_fit(const SeriesPair& pair, std::size_t max_lag, bool with_intercept = false) {
    pair.validate();
    const std::size_t n = pair.size();
    if (n <= max_lag + 2) {
        throw Error(ErrorKind::InvalidInput, "lag fit needs n > max_lag + 2");
    }
    const auto rows = static_cast<Eigen::Index>(n - max_lag);
    const auto cols = static_cast<Eigen::Index>(max_lag + 1 + (with_intercept ? 1 : 0));
    Eigen::MatrixXd design(rows, cols);
    Eigen::VectorXd target(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto t = static_cast<std::size_t>(i) + max_lag;
        for (std::size_t j = 0; j <= max_lag; ++j) design(i, static_cast<Eigen::Index>(j)) = pair.x[t - j];
        if (with_intercept) design(i, cols - 1) = 1.0;
        target(i) = pair.y[t];
    }

    const Eigen::MatrixXd gram = design.transpose() * design;
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gram);
    if (qr.rank() < cols) throw Error(ErrorKind::SingularDesign, "lag regression design is rank deficient");
    const Eigen::VectorXd beta = qr.solve(design.transpose() * target);
    Eigen::VectorXd resid = target - design * beta;
    const double floor = kResidualZeroTolerance * target.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (std::abs(resid(i)) <= floor) resid(i) = 0.0;
    }

    LagFit fit;
    fit.max_lag = max_lag;
    fit.coefficients.assign(beta.data(), beta.data() + max_lag + 1);
    if (with_intercept) fit.intercept = beta(cols - 1);
    fit.residuals.assign(resid.data(), resid.data() + rows);
    return fit;
}

struct LagScanResult {
    std::vector<std::size_t> lags;
    std::vector<TestMethod> methods;
    /// p_values[lag index][method index]; statistics likewise.
    std::vector<std::vector<double>> p_values;
    std::vector<std::vector<double>> statistics;
    std::vector<double> coefficients;

    /// Lags expected at or below `level` under independence.
    [[nodiscard]] double expected_exceedances(double level) const {
        return level * static_cast<double>(lags.size());
    }

    [[nodiscard]] std::size_t count_at_or_below(std::size_t method_index, double level) const {
        return static_cast<std::size_t>(std::count_if(p_values.begin(), p_values.end(), [&](const auto& row) {
            return row[method_index] <= level;
        }));
    }

    /// Lag with the smallest p-value; ties go to the larger statistic.
    [[nodiscard]] std::size_t most_significant_lag(std::size_t method_index) const {
        std::size_t best = 0;
        for (std::size_t i = 1; i < lags.size(); ++i) {
            const double p = p_values[i][method_index];
            const double bp = p_values[best][method_index];
            if (p < bp || (p == bp && statistics[i][method_index] > statistics[best][method_index])) best = i;
        }
        return lags[best];
    }
};

/// Tests residual R_t against x_{t-k} for k = 0..max_lag, where residuals[i]
/// belongs to time t = residual_offset + i. At lag k the sample is
/// t = max(k, residual_offset)..n-1 for every method.
inline LagScanResult lag_scan(std::span<const double> residuals, std::span<const double> x,
                              std::size_t residual_offset, std::size_t max_lag,
                              const std::vector<TestMethod>& methods, const TestOptions& opts) {
    const std::size_t n = x.size();
    if (residuals.size() + residual_offset != n) {
        throw Error(ErrorKind::InvalidInput, "residuals do not line up with x");
    }
    if (4 * max_lag >= n) throw Error(ErrorKind::InvalidInput, "max scan lag must be below n/4");
    if (methods.empty()) throw Error(ErrorKind::InvalidInput, "no test methods requested");

    LagScanResult out;
    out.methods = methods;
    for (std::size_t k = 0; k <= max_lag; ++k) out.lags.push_back(k);
    out.p_values.assign(out.lags.size(), std::vector<double>(methods.size()));
    out.statistics = out.p_values;

    const std::size_t jobs = out.lags.size() * methods.size();
    parallel_for(jobs, opts.threads, [&](std::size_t job) {
        const std::size_t li = job / methods.size();
        const std::size_t mi = job % methods.size();
        const std::size_t k = out.lags[li];
        SeriesPair pair;
        for (std::size_t t = std::max(k, residual_offset); t < n; ++t) {
            pair.x.push_back(residuals[t - residual_offset]);
            pair.y.push_back(x[t - k]);
        }
        TestOptions local = opts;
        local.threads = 1;
        local.seed = hash64(opts.seed, {k});
        const TestResult r = run_test(pair, methods[mi], local);
        out.p_values[li][mi] = r.p_value;
        out.statistics[li][mi] = r.statistic.value;
    });
    return out;
}

inline LagScanResult lag_scan(const LagFit& fit, std::span<const double> x, std::size_t max_lag,
                              const std::vector<TestMethod>& methods, const TestOptions& opts) {
    LagScanResult out = lag_scan(fit.residuals, x, fit.max_lag, max_lag, methods, opts);
    out.coefficients = fit.coefficients;
    return out;
}

inline void write_lag_scan_csv(std::ostream& out, const LagScanResult& scan) {
    out << "lag,method,p_value\n";
    for (std::size_t i = 0; i < scan.lags.size(); ++i) {
        for (std::size_t m = 0; m < scan.methods.size(); ++m) {
            out << scan.lags[i] << ',' << to_string(scan.methods[m]) << ','
                << format_double(scan.p_values[i][m]) << '\n';
        }
    }
}

inline nlohmann::json lag_scan_json(const LagScanResult& scan) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < scan.lags.size(); ++i) {
        for (std::size_t m = 0; m < scan.methods.size(); ++m) {
            rows.push_back({{"lag", scan.lags[i]},
                            {"method", to_string(scan.methods[m])},
                            {"statistic", scan.statistics[i][m]},
                            {"p_value", scan.p_values[i][m]}});
        }
    }
    return {{"coefficients", scan.coefficients}, {"results", rows}};
}

/// HSIC (or correlation) between X_t and X_{t+m} for each lag m, with the
/// method's own null. Advisory only: a quick check that serial dependence
/// dies out before the shift range starts.
inline std::vector<double> serial_dependence_check(std::span<const double> series,
                                                   const std::vector<std::size_t>& lags,
                                                   TestMethod method, const TestOptions& opts) {
    const std::size_t n = series.size();
    std::vector<double> out(lags.size());
    for (std::size_t lag : lags) {
        if (lag == 0 || 4 * lag >= n) throw Error(ErrorKind::InvalidInput, "serial lags must lie in [1, n/4)");
    }
    parallel_for(lags.size(), opts.threads, [&](std::size_t i) {
        SeriesPair pair;
        pair.x.assign(series.begin(), series.end() - static_cast<std::ptrdiff_t>(lags[i]));
        pair.y.assign(series.begin() + static_cast<std::ptrdiff_t>(lags[i]), series.end());
        TestOptions local = opts;
        local.threads = 1;
        local.seed = hash64(opts.seed, {lags[i]});
        out[i] = run_test(pair, method, local).p_value;
    });
    return out;
}

struct GraphEdge {
    std::size_t source;
    std::size_t target;
    double p_value;
};

/// Undirected graph with an edge wherever the pairwise test has p <= alpha.
/// `tests` keeps every evaluated pair, edges are the significant subset.
struct DependenceGraph {
    std::string name;
    std::vector<std::string> nodes;
    TestMethod method = TestMethod::shift_hsic;
    double alpha = 0.05;
    std::vector<GraphEdge> tests;
    std::vector<GraphEdge> edges;

    [[nodiscard]] double p_value(std::size_t i, std::size_t j) const {
        if (i > j) std::swap(i, j);
        for (const auto& t : tests) {
            if (t.source == i && t.target == j) return t.p_value;
        }
        throw Error(ErrorKind::InvalidInput, "no test between the requested nodes");
    }
};

/// Runs `method` once per unordered pair i < j; pair_of(i, j) supplies the
/// aligned data with x from node i and y from node j.
inline DependenceGraph dependence_graph(const std::vector<std::string>& names,
                                        const std::function<SeriesPair(std::size_t, std::size_t)>& pair_of,
                                        TestMethod method, double alpha, const TestOptions& opts) {
    if (names.size() < 2) throw Error(ErrorKind::InvalidInput, "dependence graph needs at least 2 series");
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::InvalidInput, "alpha must lie in (0, 1)");

    DependenceGraph g;
    g.name = to_string(method);
    g.nodes = names;
    g.method = method;
    g.alpha = alpha;
    for (std::size_t i = 0; i < names.size(); ++i)
        for (std::size_t j = i + 1; j < names.size(); ++j) g.tests.push_back({i, j, 1.0});

    parallel_for(g.tests.size(), opts.threads, [&](std::size_t e) {
        auto& t = g.tests[e];
        TestOptions local = opts;
        local.threads = 1;
        local.seed = hash64(opts.seed, {t.source, t.target});
        t.p_value = run_test(pair_of(t.source, t.target), method, local).p_value;
    });
    for (const auto& t : g.tests) {
        if (t.p_value <= alpha) g.edges.push_back(t);
    }
    return g;
}

struct NamedSeries {
    std::string name;
    std::vector<double> values;
};

/// Index-aligned series of equal length.
inline DependenceGraph dependence_graph(const std::vector<NamedSeries>& series, TestMethod method,
                                        double alpha, const TestOptions& opts) {
    std::vector<std::string> names;
    for (const auto& s : series) {
        if (s.values.size() != series.front().values.size()) {
            throw Error(ErrorKind::InvalidInput, "series " + s.name + " has a different length");
        }
        names.push_back(s.name);
    }
    return dependence_graph(
        names,
        [&](std::size_t i, std::size_t j) {
            return SeriesPair{series[i].values, series[j].values, series[i].name, series[j].name};
        },
        method, alpha, opts);
}

/// Regular series, each pair aligned on its own common grid.
inline DependenceGraph dependence_graph(const std::vector<RegularSeries>& series, TestMethod method,
                                        double alpha, const TestOptions& opts) {
    std::vector<std::string> names;
    for (const auto& s : series) names.push_back(s.name);
    return dependence_graph(
        names, [&](std::size_t i, std::size_t j) { return align(series[i], series[j]).pair; }, method,
        alpha, opts);
}

namespace detail {

inline std::string dot_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

}  // namespace detail

inline void write_dot(std::ostream& out, const DependenceGraph& g) {
    out << "graph " << detail::dot_quote(g.name) << " {\n";
    for (const auto& node : g.nodes) out << "  " << detail::dot_quote(node) << ";\n";
    for (const auto& e : g.edges) {
        out << "  " << detail::dot_quote(g.nodes[e.source]) << " -- " << detail::dot_quote(g.nodes[e.target])
            << " [label=\"" << format_double(e.p_value) << "\"];\n";
    }
    out << "}\n";
}

inline nlohmann::json graph_json(const DependenceGraph& g) {
    auto edge_list = [&](const std::vector<GraphEdge>& edges) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& e : edges) {
            arr.push_back({{"source", g.nodes[e.source]}, {"target", g.nodes[e.target]}, {"p_value", e.p_value}});
        }
        return arr;
    };
    return {{"name", g.name},   {"method", to_string(g.method)}, {"alpha", g.alpha},
            {"nodes", g.nodes}, {"edges", edge_list(g.edges)},    {"tests", edge_list(g.tests)}};
}

}  // namespace shifthsic
