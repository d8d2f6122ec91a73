#include "shifthsic/experiments.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace shifthsic;

namespace {

ExperimentSpec small_spec() {
    ExperimentSpec s = ExperimentSpec::fp_default();
    s.grid = {0.2, 0.8};
    s.n = 120;
    s.repetitions = 6;
    s.burn_in = 100;
    s.resamples = 100;
    s.master_seed = 17;
    return s;
}

std::string csv_of(const ExperimentReport& r) {
    std::ostringstream out;
    write_report_csv(out, r);
    return out.str();
}

std::string spec_error(const std::string& text) {
    try {
        (void)spec_from_json(nlohmann::json::parse(text));
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidSpec);
        return e.what();
    }
    ADD_FAILURE() << "accepted " << text;
    return {};
}

}  // namespace

TEST(RunExperiment, OneCellPerMethod) {
    ExperimentSpec s = ExperimentSpec::tp_default();
    s.grid = {0.9};
    s.repetitions = 1;
    s.n = 80;
    s.burn_in = 50;
    s.resamples = 100;
    const ExperimentReport r = run_experiment(s);
    ASSERT_EQ(r.cells.size(), 3u);
    EXPECT_TRUE(r.complete);
    EXPECT_EQ(r.cells[0].method, "shift_hsic");
    EXPECT_EQ(r.cells[1].method, "bootstrap_hsic");
    EXPECT_EQ(r.cells[2].method, "correlation");
    for (const auto& c : r.cells) {
        EXPECT_EQ(c.repetitions, 1u);
        EXPECT_LE(c.rejections, 1u);
        EXPECT_EQ(c.grid_value, 0.9);
    }
}

TEST(RunExperiment, CellsMatchIndividualRuns) {
    const ExperimentSpec s = small_spec();
    const ExperimentReport report = run_experiment(s);
    for (std::size_t g = 0; g < s.grid.size(); ++g) {
        std::size_t shift_rejections = 0, boot_rejections = 0;
        for (std::size_t r = 0; r < s.repetitions; ++r) {
            const std::uint64_t seed = dataset_seed(s.master_seed, g, r);
            EXPECT_EQ(seed, hash64(s.master_seed, {g, r}));
            const SeriesPair pair = simulate_pair(s.process(g, seed));
            TestOptions opts;
            opts.resamples = s.resamples;
            opts.seed = hash64(seed, {1});
            if (run_test(pair, TestMethod::shift_hsic, opts).p_value <= s.alpha) ++shift_rejections;
            if (run_test(pair, TestMethod::bootstrap_hsic, opts).p_value <= s.alpha) ++boot_rejections;
        }
        EXPECT_EQ(report.cell(g, TestMethod::shift_hsic).rejections, shift_rejections);
        EXPECT_EQ(report.cell(g, TestMethod::bootstrap_hsic).rejections, boot_rejections);
    }
}

TEST(RunExperiment, DesignsSweepTheRightParameter) {
    ExperimentSpec tp = ExperimentSpec::tp_default();
    const ProcessConfig a = tp.process(2, 5);
    EXPECT_EQ(a.extinction_rate, 0.9);
    EXPECT_EQ(a.ar_coeff, 0.2);
    EXPECT_EQ(a.coupling, Coupling::dependent);
    const ExperimentSpec fp = ExperimentSpec::fp_default();
    const ProcessConfig b = fp.process(4, 5);
    EXPECT_EQ(b.ar_coeff, 0.9);
    EXPECT_EQ(b.extinction_rate, 0.5);
    EXPECT_EQ(b.radius, 1.0);
    EXPECT_EQ(b.coupling, Coupling::independent);
}

TEST(RunExperiment, ParallelismDoesNotChangeReport) {
    ExperimentSpec s = small_spec();
    const std::string one = csv_of(run_experiment(s));
    EXPECT_EQ(one, csv_of(run_experiment(s)));
    s.parallelism = 4;
    EXPECT_EQ(one, csv_of(run_experiment(s)));
    EXPECT_EQ(report_to_json(run_experiment(s)).dump(), report_to_json(run_experiment(small_spec())).dump());
}

TEST(RunExperiment, CancelledRunIsIncomplete) {
    const std::atomic<bool> cancel{true};
    const ExperimentReport r = run_experiment(small_spec(), &cancel);
    EXPECT_FALSE(r.complete);
    ASSERT_EQ(r.cells.size(), 4u);
    for (const auto& c : r.cells) EXPECT_EQ(c.repetitions, 0u);
    EXPECT_EQ(r.cells[0].rate(), 0.0);
}

TEST(RunExperiment, InvalidSpecRejected) {
    ExperimentSpec s = small_spec();
    s.grid = {1.0};
    try {
        (void)run_experiment(s);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidSpec);
        EXPECT_NE(std::string(e.what()).find("'grid'"), std::string::npos);
    }
}

TEST(Report, CsvHeaderAndRateColumn) {
    const ExperimentReport r = run_experiment(small_spec());
    const std::string csv = csv_of(r);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "grid_value,method,rejections,repetitions,rate,stderr");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::stringstream ls(line);
        for (std::string part; std::getline(ls, part, ',');) f.push_back(part);
        ASSERT_EQ(f.size(), 6u);
        const double rej = std::stod(f[2]), reps = std::stod(f[3]), rate = std::stod(f[4]), se = std::stod(f[5]);
        EXPECT_EQ(rate, rej / reps);
        EXPECT_DOUBLE_EQ(se, std::sqrt(rate * (1.0 - rate) / reps));
        EXPECT_GE(rate, 0.0);
        EXPECT_LE(rate, 1.0);
        ++rows;
    }
    EXPECT_EQ(rows, 4u);
}

TEST(Report, EmptyReportIsHeaderOnly) {
    EXPECT_EQ(csv_of(ExperimentReport{}), "grid_value,method,rejections,repetitions,rate,stderr\n");
}

TEST(Report, JsonRoundTripIsByteIdentical) {
    ExperimentSpec s = small_spec();
    s.shift_range = std::pair<std::size_t, std::size_t>{12, 60};
    s.alpha = 0.1;
    s.grid = {0.1, 1.0 / 3.0};
    const std::string first = report_to_json(run_experiment(s)).dump(2);
    const std::string second = report_to_json(report_from_json(nlohmann::json::parse(first))).dump(2);
    EXPECT_EQ(first, second);
}

TEST(Report, WallClockIsRecordedButNotSerialized) {
    const ExperimentReport r = run_experiment(small_spec());
    ASSERT_EQ(r.wall_clock_seconds.size(), 2u);
    EXPECT_GT(r.wall_clock_seconds[0], 0.0);
    EXPECT_FALSE(report_to_json(r).contains("wall_clock_seconds"));
}

TEST(SpecJson, DefaultsPerDesign) {
    const ExperimentSpec tp = spec_from_json(nlohmann::json::parse(R"({"design":"tp_vs_extinction"})"));
    EXPECT_EQ(tp.grid, (std::vector<double>{0.0, 0.5, 0.9, 0.9987}));
    EXPECT_EQ(tp.methods.size(), 3u);
    EXPECT_EQ(tp.n, 600u);
    EXPECT_EQ(tp.repetitions, 100u);
    EXPECT_EQ(tp.alpha, 0.05);
    const ExperimentSpec fp = spec_from_json(nlohmann::json::parse(R"({"design":"fp_vs_ar","methods":["shift"]})"));
    EXPECT_EQ(fp.grid.size(), 5u);
    ASSERT_EQ(fp.methods.size(), 1u);
    EXPECT_EQ(fp.methods[0], TestMethod::shift_hsic);
}

TEST(SpecJson, LargeScalePreset) {
    ExperimentSpec s = ExperimentSpec::tp_default();
    s.use_paper_scale();
    EXPECT_EQ(s.n, 1200u);
    EXPECT_EQ(s.repetitions, 300u);
}

TEST(SpecJson, ErrorsNameTheField) {
    EXPECT_NE(spec_error(R"({"grid":[0.1]})").find("'design'"), std::string::npos);
    EXPECT_NE(spec_error(R"({"design":"nope"})").find("'design'"), std::string::npos);
    EXPECT_NE(spec_error(R"({"design":"fp_vs_ar","repetitions":"ten"})").find("'repetitions'"), std::string::npos);
    EXPECT_NE(spec_error(R"({"design":"fp_vs_ar","repetitions":0})").find("'repetitions'"), std::string::npos);
    EXPECT_NE(spec_error(R"({"design":"fp_vs_ar","alpha":1.5})").find("'alpha'"), std::string::npos);
    EXPECT_NE(spec_error(R"({"design":"fp_vs_ar","grid":[]})").find("'grid'"), std::string::npos);
    EXPECT_NE(spec_error(R"({"design":"fp_vs_ar","grid":[1.2]})").find("'grid'"), std::string::npos);
    EXPECT_NE(spec_error(R"({"design":"fp_vs_ar","methods":["kcsd"]})").find("'methods'"), std::string::npos);
    EXPECT_NE(spec_error(R"({"design":"fp_vs_ar","shift_range":[0,10]})").find("'shift_range'"), std::string::npos);
    EXPECT_NE(spec_error(R"({"design":"fp_vs_ar","shift_range":[5]})").find("'shift_range'"), std::string::npos);
    EXPECT_NE(spec_error(R"({"design":"fp_vs_ar","resamples":10})").find("'resamples'"), std::string::npos);
    EXPECT_NE(spec_error(R"({"design":"fp_vs_ar","colour":1})").find("'colour'"), std::string::npos);
    EXPECT_NE(spec_error(R"([1,2])").find("object"), std::string::npos);
}

TEST(SpecJson, ParallelismIsNotEchoed) {
    const ExperimentSpec s = spec_from_json(nlohmann::json::parse(R"({"design":"fp_vs_ar","parallelism":8})"));
    EXPECT_EQ(s.parallelism, 8u);
    EXPECT_FALSE(spec_to_json(s).contains("parallelism"));
}

TEST(Cell, RateAndStandardError) {
    const ExperimentCell c{0.5, "shift_hsic", 5, 100};
    EXPECT_DOUBLE_EQ(c.rate(), 0.05);
    EXPECT_DOUBLE_EQ(c.standard_error(), std::sqrt(0.05 * 0.95 / 100.0));
    const ExperimentCell empty{0.5, "shift_hsic", 0, 0};
    EXPECT_EQ(empty.rate(), 0.0);
    EXPECT_EQ(empty.standard_error(), 0.0);
}
