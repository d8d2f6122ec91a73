// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Tolerances and run sizes are fixed here; the experiment runs use master seed 1.

#include "shifthsic/shifthsic.hpp"

#include "test_support.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <thread>

using namespace shifthsic;
namespace st = shifthsic::testing;

namespace {

constexpr std::uint64_t kMasterSeed = 1;

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, const std::function<Outcome()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o{false, ""};
    try {
        o = fn();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("%s [%d] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string rates(const ExperimentReport& r, TestMethod m) {
    std::string s;
    for (std::size_t g = 0; g < r.spec.grid.size(); ++g) {
        const auto& c = r.cell(g, m);
        s += fmt("%s%g:%.2f", g ? " " : "", c.grid_value, c.rate());
    }
    return s;
}

const KernelSpec kx = KernelSpec::gaussian(0.8);
const KernelSpec ky = KernelSpec::gaussian(1.2);

}  // namespace

int main() {
    const std::size_t cores = std::max(1u, std::thread::hardware_concurrency());
    std::printf("acceptance: master seed %llu, %zu worker threads\n",
                static_cast<unsigned long long>(kMasterSeed), cores);

    criterion(1, "trace formula vs quadruple sum", [] {
        const auto t0 = std::chrono::steady_clock::now();
        double worst = 0.0;
        Rng rng(101);
        for (std::uint64_t i = 0; i < 50; ++i) {
            const std::size_t n = 4 + rng.below(9);
            const SeriesPair pair = st::random_pair(n, 1000 + i);
            const KernelSpec m = KernelSpec::median_heuristic();
            worst = std::max(worst, std::abs(hsic_v(pair, m, m).value - hsic_v_bruteforce(pair, m, m).value));
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return Outcome{worst <= 1e-9 && secs < 10.0,
                       fmt("50 pairs n in 4..12, max |diff| %.3g (tol 1e-9), %.2f s (limit 10 s)", worst, secs)};
    });

    criterion(2, "core_h symmetry and repeated-point zero", [] {
        Rng rng(202);
        double worst = 0.0;
        std::size_t nonzero = 0;
        for (int i = 0; i < 100; ++i) {
            std::array<Point, 4> z{};
            for (auto& p : z) p = {rng.normal(), rng.normal()};
            const double base = core_h(z[0], z[1], z[2], z[3], kx, ky);
            std::array<int, 4> idx{0, 1, 2, 3};
            do {
                worst = std::max(worst, std::abs(core_h(z[idx[0]], z[idx[1]], z[idx[2]], z[idx[3]], kx, ky) - base));
            } while (std::next_permutation(idx.begin(), idx.end()));
            if (core_h(z[0], z[0], z[0], z[1], kx, ky) != 0.0) ++nonzero;
        }
        return Outcome{worst <= 1e-12 && nonzero == 0,
                       fmt("100 instances, max ordering diff %.3g (tol 1e-12), %zu nonzero h(z,z,z,z')", worst,
                           nonzero)};
    });

    criterion(3, "first-order component vanishes under independence", [] {
        // Z* ~ independent N(0,1) x N(0,1); mean of h(z, Z2, Z3, Z4) over 1e5 draws.
        constexpr std::size_t draws = 100000;
        Rng zr(303);
        double worst_z = 0.0;
        std::size_t ok = 0;
        for (int k = 0; k < 10; ++k) {
            const Point z{zr.normal(), zr.normal()};
            Rng rng(hash64(304, {static_cast<std::uint64_t>(k)}));
            double mean = 0.0, m2 = 0.0;
            for (std::size_t i = 0; i < draws; ++i) {
                const Point a{rng.normal(), rng.normal()}, b{rng.normal(), rng.normal()}, c{rng.normal(), rng.normal()};
                const double h = core_h(z, a, b, c, kx, ky);
                const double d = h - mean;
                mean += d / static_cast<double>(i + 1);
                m2 += d * (h - mean);
            }
            const double se = std::sqrt(m2 / static_cast<double>(draws - 1) / draws);
            const double zscore = std::abs(mean) / se;
            worst_z = std::max(worst_z, zscore);
            if (zscore <= 4.0) ++ok;
        }
        return Outcome{ok == 10, fmt("10 fixed z, 1e5 draws each, max |mean|/se %.2f (limit 4)", worst_z)};
    });

    ExperimentSpec fp = ExperimentSpec::fp_default();
    fp.master_seed = kMasterSeed;
    fp.parallelism = cores;
    std::optional<ExperimentReport> fp_report;

    criterion(4, "shift-HSIC false positive rate vs AR coefficient", [&] {
        fp_report = run_experiment(fp);
        bool pass = true;
        for (std::size_t g = 0; g < fp.grid.size(); ++g) {
            const double r = fp_report->cell(g, TestMethod::shift_hsic).rate();
            pass = pass && r >= 0.01 && r <= 0.11;
        }
        return Outcome{pass, fmt("n=600, 100 reps, rates %s (band [0.01, 0.11])",
                                 rates(*fp_report, TestMethod::shift_hsic).c_str())};
    });

    criterion(5, "bootstrap-HSIC false positives grow with AR coefficient", [&] {
        if (!fp_report) return Outcome{false, "fp run unavailable"};
        const double lo = fp_report->cell(0, TestMethod::bootstrap_hsic).rate();
        const double hi = fp_report->cell(fp.grid.size() - 1, TestMethod::bootstrap_hsic).rate();
        return Outcome{hi > 0.15 && hi > lo,
                       fmt("rates %s; a=0.9 rate %.2f must exceed 0.15 and a=0.1 rate %.2f",
                           rates(*fp_report, TestMethod::bootstrap_hsic).c_str(), hi, lo)};
    });

    criterion(6, "power on extinct Gaussian innovations vs correlation", [&] {
        ExperimentSpec tp = ExperimentSpec::tp_default();
        tp.methods = {TestMethod::shift_hsic, TestMethod::correlation};
        tp.master_seed = kMasterSeed;
        tp.parallelism = cores;
        const ExperimentReport r = run_experiment(tp);
        const std::size_t last = tp.grid.size() - 1;
        const double shift = r.cell(last, TestMethod::shift_hsic).rate();
        const double corr = r.cell(last, TestMethod::correlation).rate();
        bool monotone = true;
        for (std::size_t g = 0; g + 1 < tp.grid.size(); ++g) {
            const auto& a = r.cell(g, TestMethod::shift_hsic);
            const auto& b = r.cell(g + 1, TestMethod::shift_hsic);
            const double se = std::hypot(a.standard_error(), b.standard_error());
            monotone = monotone && b.rate() >= a.rate() - 2.0 * se;
        }
        return Outcome{shift >= 0.9 && corr <= 0.15 && monotone,
                       fmt("shift %s; correlation %s; at p=0.9987 shift %.2f (>= 0.9), correlation %.2f (<= 0.15), "
                           "non-decreasing within 2 SE: %s",
                           rates(r, TestMethod::shift_hsic).c_str(), rates(r, TestMethod::correlation).c_str(), shift,
                           corr, monotone ? "yes" : "no")};
    });

    criterion(7, "shift-HSIC p-values uniform under independence", [&] {
        constexpr std::size_t datasets = 500;
        std::vector<double> ps(datasets);
        const KernelSpec m = KernelSpec::median_heuristic();
        parallel_for(datasets, cores, [&](std::size_t i) {
            const SeriesPair pair = st::random_pair(300, hash64(kMasterSeed, {7, i}));
            ps[i] = hsic_test(pair, m, m, NullMethod::default_shift(300)).p_value;
        });
        const double d = st::ks_uniform_statistic(ps);
        const double crit = st::ks_critical_001(datasets);
        return Outcome{d < crit, fmt("500 datasets n=300, KS D = %.4f (critical %.4f at level 0.01)", d, crit)};
    });

    criterion(8, "extinct Gaussian and AR(1) generator", [] {
        constexpr std::size_t draws = 100000;
        const double rn = std::sqrt(static_cast<double>(draws));
        std::vector<std::string> notes;
        bool pass = true;

        Rng rng(801);
        double se = 0, sh = 0, see = 0, shh = 0, seh = 0;
        for (std::size_t i = 0; i < draws; ++i) {
            const Innovation e = extinct_gaussian(0.0, 1.0, rng);
            se += e.eps;
            sh += e.eta;
            see += e.eps * e.eps;
            shh += e.eta * e.eta;
            seh += e.eps * e.eta;
        }
        const double n = draws;
        const double me = se / n, mh = sh / n;
        const double ve = see / n - me * me, vh = shh / n - mh * mh, c = seh / n - me * mh;
        const double worst = std::max({std::abs(me) * rn, std::abs(mh) * rn, std::abs(ve - 1.0) * rn / std::sqrt(2.0),
                                       std::abs(vh - 1.0) * rn / std::sqrt(2.0), std::abs(c) * rn});
        pass = pass && worst <= 4.0;
        notes.push_back(fmt("p=0 moments max %.2f SE", worst));

        Rng rng2(802);
        std::size_t inside = 0;
        for (std::size_t i = 0; i < draws; ++i) {
            const Innovation e = extinct_gaussian(0.5, 1.0, rng2);
            if (e.eps * e.eps + e.eta * e.eta <= 1.0) ++inside;
        }
        const double q = 1.0 - std::exp(-0.5);
        const double expect = 0.5 * q / (0.5 * q + (1.0 - q));
        const double freq = static_cast<double>(inside) / n;
        const double z = std::abs(freq - expect) / std::sqrt(expect * (1.0 - expect) / n);
        pass = pass && z <= 4.0;
        notes.push_back(fmt("inside-ball %.4f vs %.4f (%.2f SE)", freq, expect, z));

        ProcessConfig cfg;
        cfg.extinction_rate = 0.0;
        cfg.length = 100000;
        cfg.seed = 803;
        const SeriesPair pair = simulate_pair(cfg);
        double mean = 0.0;
        for (double v : pair.x) mean += v / static_cast<double>(pair.size());
        double var = 0.0;
        for (double v : pair.x) var += (v - mean) * (v - mean) / static_cast<double>(pair.size() - 1);
        const double target = 1.0 / (1.0 - 0.04);
        const double rel = std::abs(var / target - 1.0);
        pass = pass && rel <= 0.03;
        notes.push_back(fmt("AR(0.2) variance %.4f vs %.4f (%.2f%%, limit 3%%)", var, target, 100.0 * rel));
        return Outcome{pass, notes[0] + "; " + notes[1] + "; " + notes[2]};
    });

    criterion(9, "experiment reports are reproducible", [&] {
        bool pass = true;
        std::string detail;
        for (ExperimentSpec s : {ExperimentSpec::tp_default(), ExperimentSpec::fp_default()}) {
            s.n = 200;
            s.repetitions = 20;
            s.master_seed = kMasterSeed;
            auto bytes = [](const ExperimentReport& r) {
                std::ostringstream out;
                write_report_csv(out, r);
                return out.str() + report_to_json(r).dump(2);
            };
            s.parallelism = 1;
            const std::string a = bytes(run_experiment(s));
            const std::string b = bytes(run_experiment(s));
            s.parallelism = 8;
            const std::string c = bytes(run_experiment(s));
            const bool same = a == b && a == c;
            pass = pass && same;
            detail += fmt("%s%s: %s", detail.empty() ? "" : "; ", to_string(s.design).c_str(),
                          same ? "identical (twice at 1 thread, once at 8)" : "differs");
        }
        return Outcome{pass, detail};
    });

    criterion(10, "second-order component equals s/6", [] {
        const st::DiscreteProduct dist{{-1.0, 0.3, 2.0}, {0.2, 0.5, 0.3}, {0.0, 1.5, -0.7}, {0.6, 0.1, 0.3}};
        const auto supp = dist.support();
        // theta = E h; g1(z) = E h(z, ., ., .); g2(z1, z2) = E h(z1, z2, ., .).
        std::vector<double> g1(supp.size(), 0.0);
        double theta = 0.0;
        for (std::size_t i = 0; i < supp.size(); ++i) {
            for (const auto& [b, pb] : supp)
                for (const auto& [c, pc] : supp)
                    for (const auto& [d, pd] : supp) g1[i] += pb * pc * pd * core_h(supp[i].first, b, c, d, kx, ky);
            theta += supp[i].second * g1[i];
        }
        double worst = 0.0;
        for (std::size_t i = 0; i < supp.size(); ++i) {
            for (std::size_t j = 0; j < supp.size(); ++j) {
                const Point z1 = supp[i].first, z2 = supp[j].first;
                double g2 = 0.0;
                for (const auto& [c, pc] : supp)
                    for (const auto& [d, pd] : supp) g2 += pc * pd * core_h(z1, z2, c, d, kx, ky);
                const double h2 = g2 - (g1[i] - theta) - (g1[j] - theta) - theta;
                const double s = st::centered_kernel(kx, z1.x, z2.x, dist.x_atoms, dist.x_probs) *
                                 st::centered_kernel(ky, z1.y, z2.y, dist.y_atoms, dist.y_probs);
                worst = std::max(worst, std::abs(h2 - s / 6.0));
            }
        }
        return Outcome{worst <= 1e-10, fmt("81 pairs on a 3x3 product support, max |h2 - s/6| %.3g (tol 1e-10)", worst)};
    });

    std::printf("%s: %d of 10 criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
