#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "grassbot/camera.hpp"
#include "grassbot/localization.hpp"
#include "grassbot/navigation.hpp"
#include "grassbot/perception.hpp"
#include "grassbot/rng.hpp"
#include "grassbot/scenario.hpp"
#include "grassbot/world.hpp"

namespace grassbot {

// A runtime invariant failed inside the episode loop.
class InvariantViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

inline constexpr double kUnlimitedBudget = std::numeric_limits<double>::infinity();
// Simulated-time cap applied when the budget is unlimited.
inline constexpr double kSafetyCap = 24.0 * 3600.0;

struct TickRecord {
    double t = 0.0;
    Pose2D truth;
    Pose2D estimate;
    Pose2D dead_reckoning;
    NavMode mode = NavMode::coverage;
    double v = 0.0;
    double omega = 0.0;
    int picked = 0;
    int failed = 0;
    int remaining = 0;
};

struct EventRecord {
    double t = 0.0;
    EventKind kind = EventKind::avoid;
    std::optional<ObjectId> object_id;
    friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

struct EpisodeTrace {
    std::string scenario;
    std::uint64_t seed = 0;
    CoverageStrategy mode = CoverageStrategy::planned;
    double dt = 0.1;
    double budget = 0.0;
    int initial_garbage = 0;
    std::vector<TickRecord> ticks;
    std::vector<EventRecord> events;

    bool completed = false;       // remaining reached zero
    double completion_time = 0.0; // first t with remaining = 0, else the end time
    double rmse_ekf = 0.0;
    double rmse_dead_reckoning = 0.0;

    int picked() const { return ticks.empty() ? 0 : ticks.back().picked; }
    int failed() const { return ticks.empty() ? 0 : ticks.back().failed; }
    int remaining() const { return ticks.empty() ? initial_garbage : ticks.back().remaining; }
    std::size_t count(EventKind k) const {
        return static_cast<std::size_t>(std::count_if(
            events.begin(), events.end(), [k](const EventRecord& e) { return e.kind == k; }));
    }
};

// Checks the bookkeeping invariants over a whole trace.
inline void check_trace(const EpisodeTrace& trace) {
    double prev_t = -std::numeric_limits<double>::infinity();
    int prev_remaining = trace.initial_garbage;
    for (const auto& r : trace.ticks) {
        if (!(r.t > prev_t)) throw InvariantViolation("trace time is not strictly increasing");
        if (r.picked + r.remaining + r.failed != trace.initial_garbage) {
            throw InvariantViolation("garbage count not conserved at t=" + std::to_string(r.t));
        }
        if (r.remaining > prev_remaining) {
            throw InvariantViolation("remaining garbage increased at t=" + std::to_string(r.t));
        }
        if (r.picked < 0 || r.failed < 0 || r.remaining < 0) {
            throw InvariantViolation("negative garbage count");
        }
        prev_t = r.t;
        prev_remaining = r.remaining;
    }
    if (static_cast<std::size_t>(trace.picked()) > trace.count(EventKind::pickup_success)) {
        throw InvariantViolation("more garbage counted than pickup successes logged");
    }
}

// Closed loop at fixed dt. Per tick: estimate, perceive from the true pose,
// navigate, move, log events, then feed odometry and GPS to the filter.
inline EpisodeTrace run_episode(const ScenarioConfig& config, double budget) {
    validate(config);
    if (!(budget > 0.0)) throw ConfigError("budget", "must be positive");

    World world = build_world(config);
    const CameraModel cam = config.camera();
    const GroundHomography hom = build_homography(cam);
    const NavigationConfig nav_cfg = config.navigation();
    Navigator navigator(world.grid, cam, hom, config.classifier, nav_cfg);
    Localizer localizer(config.start, config.noise, make_stream(config.seed, Stream::odometry),
                        make_stream(config.seed, Stream::gps));
    Rng ultrasonic_rng = make_stream(config.seed, Stream::ultrasonic);
    NavRngs rngs{make_stream(config.seed, Stream::navigation),
                 make_stream(config.seed, Stream::classifier),
                 make_stream(config.seed, Stream::pickup)};

    EpisodeTrace trace;
    trace.scenario = config.name;
    trace.seed = config.seed;
    trace.mode = config.mode;
    trace.dt = config.dt;
    trace.budget = budget;
    for (const auto& o : world.objects) trace.initial_garbage += is_garbage_class(o.true_class);

    int picked = 0;
    int failed = 0;
    int remaining = trace.initial_garbage;
    std::set<ObjectId> failed_ids;
    const double horizon = std::isfinite(budget) ? budget : kSafetyCap;
    const auto max_ticks = static_cast<std::int64_t>(std::llround(horizon / config.dt));

    double se_ekf = 0.0;
    double se_dr = 0.0;
    auto record = [&](double t, Twist cmd) {
        TickRecord r;
        r.t = t;
        r.truth = world.robot.pose;
        r.estimate = localizer.estimate();
        r.dead_reckoning = localizer.dead_reckoning();
        r.mode = navigator.state().mode;
        r.v = cmd.v;
        r.omega = cmd.omega;
        r.picked = picked;
        r.failed = failed;
        r.remaining = remaining;
        if (picked + failed + remaining != trace.initial_garbage) {
            throw InvariantViolation("garbage count not conserved at t=" + std::to_string(t));
        }
        if (!std::isfinite(r.truth.x) || !std::isfinite(r.truth.y) || !std::isfinite(r.estimate.x) ||
            !std::isfinite(r.estimate.y)) {
            throw InvariantViolation("non-finite pose at t=" + std::to_string(t));
        }
        const Vec2 e1 = r.estimate.position() - r.truth.position();
        const Vec2 e2 = r.dead_reckoning.position() - r.truth.position();
        se_ekf += dot(e1, e1);
        se_dr += dot(e2, e2);
        trace.ticks.push_back(r);
    };
    record(0.0, {});

    bool bumped = false;
    for (std::int64_t k = 1; k <= max_ticks; ++k) {
        if (remaining == 0 && trace.initial_garbage > 0) break;
        if (trace.initial_garbage == 0 && config.mode == CoverageStrategy::planned &&
            navigator.state().sweeps_completed >= 1) {
            break;
        }
        const double t = static_cast<double>(k) * config.dt;
        const Pose2D est = localizer.estimate();
        const SegmentationFrame frame = render_segmentation(world, world.robot.pose, cam, hom);
        const double range = ultrasonic_range(world, world.robot.pose, ultrasonic_rng);
        const Percept percept{&frame, range, bumped};
        NavOutput out = navigator.step(world, est, percept, rngs);

        for (const auto& ev : out.events) {
            trace.events.push_back({t, ev.kind, ev.object_id});
            if (!ev.object_id) continue;
            WorldObject* obj = world.find(*ev.object_id);
            if (!obj) continue;
            if (ev.kind == EventKind::pickup_success) {
                if (obj->picked) throw InvariantViolation("object picked twice");
                obj->picked = true;
                ++world.robot.carried_count;
                if (is_garbage_class(obj->true_class)) {
                    if (failed_ids.contains(obj->id)) {
                        throw InvariantViolation("abandoned object picked up");
                    }
                    --remaining;
                    ++picked;
                }
            } else if (ev.kind == EventKind::avoid && !obj->picked &&
                       is_garbage_class(obj->true_class) && !failed_ids.contains(obj->id)) {
                failed_ids.insert(obj->id);
                ++failed;
                --remaining;
            }
        }

        const Twist cmd = clamp_twist(out.command, config.v_max, config.omega_max);
        const auto blocker = advance_robot(world, cmd, config.dt);
        bumped = blocker.has_value();
        if (blocker) trace.events.push_back({t, EventKind::collision, *blocker});
        const Twist executed{blocker ? 0.0 : cmd.v, cmd.omega};
        localizer.step(executed, config.dt, t, world.robot.pose);
        record(t, cmd);
        if (picked > trace.initial_garbage) throw InvariantViolation("picked exceeds initial garbage");
    }

    const auto n = static_cast<double>(trace.ticks.size());
    trace.rmse_ekf = std::sqrt(se_ekf / n);
    trace.rmse_dead_reckoning = std::sqrt(se_dr / n);
    trace.completed = trace.initial_garbage > 0 ? remaining == 0
                                                : navigator.state().sweeps_completed >= 1;
    trace.completion_time = trace.ticks.back().t;
    if (trace.initial_garbage > 0 && !trace.completed && std::isfinite(budget)) {
        trace.completion_time = budget;
    }
    check_trace(trace);
    return trace;
}

// ---------------------------------------------------------------------------
// Experiments

struct EpisodeSummary {
    int garbage = 0;
    CoverageStrategy mode = CoverageStrategy::planned;
    std::uint64_t seed = 0;
    double completion_time = 0.0;
    bool completed = false;
    int picked = 0;
    int failed = 0;
    std::vector<int> remaining_curve;  // at t = 0, period, 2 period, ...
    double rmse_ekf = 0.0;
    double rmse_dead_reckoning = 0.0;
};

struct CellSummary {
    int garbage = 0;
    CoverageStrategy mode = CoverageStrategy::planned;
    int episodes = 0;
    int completed = 0;
    double mean_completion_time = 0.0;
    std::vector<double> mean_remaining_curve;
};

struct ModeComparison {
    int garbage = 0;
    double planned_mean = 0.0;
    double random_mean = 0.0;
    double ratio = 0.0;               // random / planned
    double planned_win_fraction = 0.0;  // paired seeds where planned finishes first
    int pairs = 0;
};

struct ExperimentReport {
    std::string scenario;
    double budget = 0.0;
    double sample_period = 600.0;
    bool insufficient = false;  // fewer than 20 seeds
    std::vector<EpisodeSummary> episodes;
    std::vector<CellSummary> cells;
    std::vector<ModeComparison> comparisons;
};

struct ExperimentSpec {
    ScenarioConfig base;
    std::vector<int> garbage_counts{20, 50};
    std::vector<CoverageStrategy> modes{CoverageStrategy::planned, CoverageStrategy::random};
    std::vector<std::uint64_t> seeds;
    double budget = kUnlimitedBudget;
    double sample_period = 600.0;
    int threads = 1;
};

inline constexpr std::size_t kMinSeedsForAggregate = 20;

// Remaining garbage at each multiple of `period`, holding the last value.
inline std::vector<int> sample_remaining(const EpisodeTrace& trace, double period) {
    std::vector<int> out;
    const double end = trace.ticks.back().t;
    std::size_t i = 0;
    for (int k = 0;; ++k) {
        const double t = k * period;
        while (i + 1 < trace.ticks.size() && trace.ticks[i + 1].t <= t + 1e-9) ++i;
        out.push_back(trace.ticks[i].remaining);
        if (t >= end) break;
    }
    return out;
}

inline EpisodeSummary summarize(const EpisodeTrace& trace, int garbage, double period) {
    EpisodeSummary s;
    s.garbage = garbage;
    s.mode = trace.mode;
    s.seed = trace.seed;
    s.completion_time = trace.completion_time;
    s.completed = trace.completed;
    s.picked = trace.picked();
    s.failed = trace.failed();
    s.remaining_curve = sample_remaining(trace, period);
    s.rmse_ekf = trace.rmse_ekf;
    s.rmse_dead_reckoning = trace.rmse_dead_reckoning;
    return s;
}

// Runs `jobs` indices on up to `threads` workers. Each job owns its state.
template <class Fn>
void parallel_for(std::size_t jobs, int threads, Fn fn) {
    const auto workers = static_cast<std::size_t>(std::max(1, threads));
    if (workers == 1 || jobs <= 1) {
        for (std::size_t i = 0; i < jobs; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, jobs); ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < jobs; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

inline ExperimentReport aggregate(std::vector<EpisodeSummary> episodes, const std::string& scenario,
                                  double budget, double period, std::size_t seed_count) {
    std::sort(episodes.begin(), episodes.end(), [](const EpisodeSummary& a, const EpisodeSummary& b) {
        if (a.garbage != b.garbage) return a.garbage < b.garbage;
        if (a.mode != b.mode) return a.mode < b.mode;
        return a.seed < b.seed;
    });
    ExperimentReport rep;
    rep.scenario = scenario;
    rep.budget = budget;
    rep.sample_period = period;
    rep.insufficient = seed_count < kMinSeedsForAggregate;

    std::map<std::pair<int, CoverageStrategy>, std::vector<const EpisodeSummary*>> groups;
    for (const auto& e : episodes) groups[{e.garbage, e.mode}].push_back(&e);
    for (const auto& [key, group] : groups) {
        CellSummary c;
        c.garbage = key.first;
        c.mode = key.second;
        c.episodes = static_cast<int>(group.size());
        std::size_t len = 0;
        for (const auto* e : group) {
            c.completed += e->completed;
            c.mean_completion_time += e->completion_time;
            len = std::max(len, e->remaining_curve.size());
        }
        c.mean_completion_time /= static_cast<double>(group.size());
        c.mean_remaining_curve.assign(len, 0.0);
        for (const auto* e : group) {
            for (std::size_t k = 0; k < len; ++k) {
                const int v = k < e->remaining_curve.size() ? e->remaining_curve[k]
                                                            : e->remaining_curve.back();
                c.mean_remaining_curve[k] += v;
            }
        }
        for (double& v : c.mean_remaining_curve) v /= static_cast<double>(group.size());
        rep.cells.push_back(std::move(c));
    }

    std::set<int> counts;
    for (const auto& e : episodes) counts.insert(e.garbage);
    for (int g : counts) {
        const auto pit = groups.find({g, CoverageStrategy::planned});
        const auto rit = groups.find({g, CoverageStrategy::random});
        if (pit == groups.end() || rit == groups.end()) continue;
        ModeComparison m;
        m.garbage = g;
        std::map<std::uint64_t, double> planned_by_seed;
        for (const auto* e : pit->second) {
            m.planned_mean += e->completion_time;
            planned_by_seed[e->seed] = e->completion_time;
        }
        m.planned_mean /= static_cast<double>(pit->second.size());
        int wins = 0;
        for (const auto* e : rit->second) {
            m.random_mean += e->completion_time;
            const auto it = planned_by_seed.find(e->seed);
            if (it == planned_by_seed.end()) continue;
            ++m.pairs;
            wins += it->second < e->completion_time;
        }
        m.random_mean /= static_cast<double>(rit->second.size());
        m.ratio = m.planned_mean > 0.0 ? m.random_mean / m.planned_mean : 0.0;
        m.planned_win_fraction = m.pairs > 0 ? static_cast<double>(wins) / m.pairs : 0.0;
        rep.comparisons.push_back(m);
    }
    rep.episodes = std::move(episodes);
    return rep;
}

// Every (garbage count, mode, seed) cell, optionally on several threads.
// `on_trace`, if given, sees each full trace (called from worker threads).
template <class OnTrace>
ExperimentReport run_experiment(const ExperimentSpec& spec, OnTrace on_trace) {
    if (spec.seeds.empty()) throw ConfigError("seeds", "at least one seed is required");
    if (spec.garbage_counts.empty()) throw ConfigError("garbage.count", "no garbage counts given");
    if (!(spec.sample_period > 0.0)) throw ConfigError("sample_period", "must be positive");
    struct Job {
        int garbage;
        CoverageStrategy mode;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (int g : spec.garbage_counts) {
        for (CoverageStrategy m : spec.modes) {
            for (std::uint64_t s : spec.seeds) jobs.push_back({g, m, s});
        }
    }
    {
        ScenarioConfig probe = spec.base;
        probe.objects.clear();
        probe.garbage_count = spec.garbage_counts.front();
        validate(probe);
    }
    std::vector<EpisodeSummary> results(jobs.size());
    parallel_for(jobs.size(), spec.threads, [&](std::size_t i) {
        ScenarioConfig cfg = spec.base;
        cfg.objects.clear();
        cfg.garbage_count = jobs[i].garbage;
        cfg.mode = jobs[i].mode;
        cfg.seed = jobs[i].seed;
        const EpisodeTrace trace = run_episode(cfg, spec.budget);
        on_trace(trace, jobs[i].garbage);
        results[i] = summarize(trace, jobs[i].garbage, spec.sample_period);
    });
    return aggregate(std::move(results), spec.base.name, spec.budget, spec.sample_period,
                     spec.seeds.size());
}

inline ExperimentReport run_experiment(const ExperimentSpec& spec) {
    return run_experiment(spec, [](const EpisodeTrace&, int) {});
}

}  // namespace grassbot
