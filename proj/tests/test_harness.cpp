#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "grassbot/frame_io.hpp"
#include "grassbot/harness.hpp"
#include "grassbot/trace_io.hpp"

using namespace grassbot;
namespace fs = std::filesystem;

namespace {

ScenarioConfig scenario(const std::string& name) {
    return load_scenario(std::string(GRASSBOT_SOURCE_DIR) + "/scenarios/" + name + ".scn");
}

std::string csv_of(const EpisodeTrace& t) {
    std::ostringstream a;
    write_trace_csv(a, t);
    write_events_csv(a, t);
    return a.str();
}

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("grassbot_test_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST(Episode, ZeroGarbagePlannedRunTerminates) {
    ScenarioConfig cfg = scenario("small");
    cfg.garbage_count = 0;
    cfg.distractor_count = 0;
    const EpisodeTrace t = run_episode(cfg, kUnlimitedBudget);
    EXPECT_TRUE(t.completed);
    EXPECT_EQ(t.initial_garbage, 0);
    EXPECT_LT(t.ticks.back().t, kSafetyCap);
    EXPECT_GT(t.ticks.size(), 10u);
}

TEST(Episode, BottleAheadIsPickedQuickly) {
    const ScenarioConfig cfg = scenario("one_bottle");
    const EpisodeTrace t = run_episode(cfg, 60.0);
    EXPECT_TRUE(t.completed);
    EXPECT_EQ(t.picked(), 1);
    EXPECT_LE(t.completion_time, 60.0);
    ASSERT_GE(t.count(EventKind::pickup_success), 1u);
    const auto it = std::find_if(t.events.begin(), t.events.end(), [](const EventRecord& e) {
        return e.kind == EventKind::pickup_success;
    });
    EXPECT_EQ(it->object_id, 1);
    // The robot is halted for a whole attempt before the success is logged.
    int halted = 0;
    for (const auto& r : t.ticks) halted += r.mode == NavMode::pickup;
    EXPECT_GE(halted, 14);
}

TEST(Episode, ReplayIsByteIdentical) {
    ScenarioConfig cfg = scenario("small");
    for (auto mode : {CoverageStrategy::planned, CoverageStrategy::random}) {
        cfg.mode = mode;
        cfg.seed = 3;
        const EpisodeTrace a = run_episode(cfg, 900.0);
        const EpisodeTrace b = run_episode(cfg, 900.0);
        EXPECT_EQ(csv_of(a), csv_of(b));
        cfg.seed = 4;
        EXPECT_NE(csv_of(run_episode(cfg, 900.0)), csv_of(a));
    }
}

TEST(Episode, GarbageIsConservedEveryTick) {
    ScenarioConfig cfg = scenario("lshape");
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        for (auto mode : {CoverageStrategy::planned, CoverageStrategy::random}) {
            cfg.seed = seed;
            cfg.mode = mode;
            const EpisodeTrace t = run_episode(cfg, 1800.0);
            EXPECT_EQ(t.initial_garbage, 15);
            int prev = t.initial_garbage;
            for (const auto& r : t.ticks) {
                ASSERT_EQ(r.picked + r.failed + r.remaining, t.initial_garbage);
                ASSERT_LE(r.remaining, prev);
                prev = r.remaining;
            }
            EXPECT_NO_THROW(check_trace(t));
        }
    }
}

TEST(Episode, BudgetAndConfigErrors) {
    ScenarioConfig cfg = scenario("small");
    EXPECT_THROW(run_episode(cfg, 0.0), ConfigError);
    const EpisodeTrace t = run_episode(cfg, 5.0);
    EXPECT_LE(t.ticks.back().t, 5.0 + 1e-9);
    EXPECT_EQ(t.ticks.size(), 51u);
    cfg.dt = -1.0;
    EXPECT_THROW(run_episode(cfg, 10.0), ConfigError);
}

TEST(CheckTrace, DetectsBrokenBookkeeping) {
    EpisodeTrace t;
    t.initial_garbage = 2;
    t.ticks.push_back({});
    t.ticks.back().remaining = 2;
    t.ticks.push_back(t.ticks.back());
    t.ticks.back().t = 0.1;
    EXPECT_NO_THROW(check_trace(t));
    t.ticks.back().remaining = 1;
    EXPECT_THROW(check_trace(t), InvariantViolation);
    t.ticks.back().picked = 1;
    EXPECT_THROW(check_trace(t), InvariantViolation);  // no success event
    t.events.push_back({0.1, EventKind::pickup_success, 1});
    EXPECT_NO_THROW(check_trace(t));
    t.ticks.back().t = 0.0;
    EXPECT_THROW(check_trace(t), InvariantViolation);
}

TEST(Experiment, StructureAndInsufficientFlag) {
    ExperimentSpec spec;
    spec.base = scenario("small");
    spec.garbage_counts = {2, 4};
    spec.seeds = {1, 2};
    spec.budget = 1200.0;
    spec.sample_period = 60.0;
    const ExperimentReport rep = run_experiment(spec);
    EXPECT_TRUE(rep.insufficient);
    EXPECT_EQ(rep.episodes.size(), 8u);
    EXPECT_EQ(rep.cells.size(), 4u);
    ASSERT_EQ(rep.comparisons.size(), 2u);
    for (const auto& c : rep.cells) {
        EXPECT_EQ(c.episodes, 2);
        ASSERT_FALSE(c.mean_remaining_curve.empty());
        EXPECT_DOUBLE_EQ(c.mean_remaining_curve.front(), c.garbage);
        for (std::size_t k = 1; k < c.mean_remaining_curve.size(); ++k) {
            EXPECT_LE(c.mean_remaining_curve[k], c.mean_remaining_curve[k - 1]);
        }
    }
    for (const auto& m : rep.comparisons) {
        EXPECT_EQ(m.pairs, 2);
        EXPECT_NEAR(m.ratio, m.random_mean / m.planned_mean, 1e-12);
    }

    spec.seeds.clear();
    EXPECT_THROW(run_experiment(spec), ConfigError);
}

TEST(Experiment, ThreadCountDoesNotChangeResults) {
    ExperimentSpec spec;
    spec.base = scenario("small");
    spec.garbage_counts = {3};
    spec.seeds = {1, 2, 3};
    spec.budget = 900.0;
    spec.sample_period = 60.0;
    const std::string one = to_json(run_experiment(spec)).dump();
    spec.threads = 3;
    EXPECT_EQ(to_json(run_experiment(spec)).dump(), one);
}

TEST(Experiment, AggregateOnHandMadeEpisodes) {
    auto ep = [](int g, CoverageStrategy m, std::uint64_t seed, double t, std::vector<int> curve) {
        EpisodeSummary e;
        e.garbage = g;
        e.mode = m;
        e.seed = seed;
        e.completion_time = t;
        e.completed = true;
        e.remaining_curve = std::move(curve);
        return e;
    };
    std::vector<EpisodeSummary> eps{
        ep(5, CoverageStrategy::planned, 1, 100, {5, 0}),
        ep(5, CoverageStrategy::planned, 2, 300, {5, 3, 0}),
        ep(5, CoverageStrategy::random, 1, 200, {5, 2, 1, 0}),
        ep(5, CoverageStrategy::random, 2, 250, {5, 4, 0}),
    };
    const ExperimentReport r = aggregate(eps, "x", 1000.0, 60.0, 2);
    ASSERT_EQ(r.comparisons.size(), 1u);
    EXPECT_DOUBLE_EQ(r.comparisons[0].planned_mean, 200.0);
    EXPECT_DOUBLE_EQ(r.comparisons[0].random_mean, 225.0);
    EXPECT_DOUBLE_EQ(r.comparisons[0].ratio, 1.125);
    EXPECT_DOUBLE_EQ(r.comparisons[0].planned_win_fraction, 0.5);
    ASSERT_EQ(r.cells.size(), 2u);
    const std::vector<double> random_curve{5, 3, 0.5, 0};
    EXPECT_EQ(r.cells[0].mean_remaining_curve, std::vector<double>({5, 1.5, 0}));
    EXPECT_EQ(r.cells[1].mean_remaining_curve, random_curve);
}

TEST(SampleRemaining, HoldsLastValue) {
    EpisodeTrace t;
    t.initial_garbage = 3;
    for (int k = 0; k <= 25; ++k) {
        TickRecord r;
        r.t = k;
        r.remaining = k < 7 ? 3 : (k < 15 ? 2 : 0);
        r.picked = 3 - r.remaining;
        t.ticks.push_back(r);
    }
    EXPECT_EQ(sample_remaining(t, 10.0), std::vector<int>({3, 2, 0, 0}));
}

TEST(TraceIo, CsvRoundTrip) {
    ScenarioConfig cfg = scenario("small");
    const EpisodeTrace t = run_episode(cfg, 300.0);
    std::stringstream tick_csv, ev_csv;
    write_trace_csv(tick_csv, t);
    write_events_csv(ev_csv, t);
    const auto ticks = read_trace_csv(tick_csv);
    const auto events = read_events_csv(ev_csv);
    ASSERT_EQ(ticks.size(), t.ticks.size());
    for (std::size_t i = 0; i < ticks.size(); ++i) {
        ASSERT_EQ(ticks[i].t, t.ticks[i].t);
        ASSERT_EQ(ticks[i].truth, t.ticks[i].truth);
        ASSERT_EQ(ticks[i].estimate, t.ticks[i].estimate);
        ASSERT_EQ(ticks[i].dead_reckoning, t.ticks[i].dead_reckoning);
        ASSERT_EQ(ticks[i].mode, t.ticks[i].mode);
        ASSERT_EQ(ticks[i].v, t.ticks[i].v);
        ASSERT_EQ(ticks[i].remaining, t.ticks[i].remaining);
    }
    EXPECT_EQ(events, t.events);

    std::istringstream bad("nope\n");
    EXPECT_THROW(read_trace_csv(bad), FormatError);
}

TEST(TraceIo, ReportJsonAndCurveRoundTrip) {
    ExperimentSpec spec;
    spec.base = scenario("small");
    spec.garbage_counts = {2};
    spec.seeds = {1};
    spec.budget = 600.0;
    spec.sample_period = 60.0;
    const ExperimentReport rep = run_experiment(spec);
    const nlohmann::json j = to_json(rep);
    const ExperimentReport back = report_from_json(j);
    EXPECT_EQ(to_json(back).dump(), j.dump());
    EXPECT_TRUE(back.insufficient);

    const fs::path dir = scratch_dir("report");
    fs::create_directories(dir);
    std::ofstream(dir / "report.json") << j.dump(2);
    EXPECT_EQ(to_json(load_report(dir / "report.json")).dump(), j.dump());

    std::stringstream curve;
    write_curve(curve, rep.cells[0], rep.sample_period);
    const auto pts = read_curve(curve);
    ASSERT_EQ(pts.size(), rep.cells[0].mean_remaining_curve.size());
    for (std::size_t k = 0; k < pts.size(); ++k) {
        EXPECT_DOUBLE_EQ(pts[k].first, k * 1.0);
        EXPECT_DOUBLE_EQ(pts[k].second, rep.cells[0].mean_remaining_curve[k]);
    }
    EXPECT_EQ(curve_filename(rep.cells[0]), "curve_planned_g2.dat");
    fs::remove_all(dir);
}

TEST(TraceIo, WriteTraceFiles) {
    const EpisodeTrace t = run_episode(scenario("one_bottle"), 30.0);
    const fs::path dir = scratch_dir("files") / "nested";
    const auto [tp, ep] = write_trace_files(dir, t, trace_stem(t));
    EXPECT_TRUE(fs::exists(tp));
    EXPECT_TRUE(fs::exists(ep));
    EXPECT_EQ(tp.filename(), "one_bottle_planned_seed1_trace.csv");
    EXPECT_NE(summary_line(t).find("pickups=1"), std::string::npos);
    fs::remove_all(dir.parent_path());
}

TEST(FrameIo, RoundTripAndErrors) {
    SegmentationFrame f;
    f.ground_contour = {{0.5, 479}, {639, 479}, {400.25, 240}};
    f.object_boxes = {{3, 10, 20, 30, 40}};
    std::stringstream s;
    write_frame(s, f);
    const SegmentationFrame g = parse_frame(s);
    EXPECT_EQ(g.ground_contour, f.ground_contour);
    EXPECT_EQ(g.object_boxes, f.object_boxes);

    std::istringstream bad("vertex 1 2\nbox 1 30 20 10 40\n");
    try {
        parse_frame(bad);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.field(), "line 2");
    }
}
