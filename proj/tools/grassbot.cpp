// grassbot: run episodes and experiments, and poke at single frames.
//
// Exit codes: 0 ok, 2 bad configuration or arguments, 3 invariant violation,
// 4 no feasible direction, 1 anything else.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "grassbot/grassbot.hpp"

namespace fs = std::filesystem;
using namespace grassbot;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInvariant = 3;
constexpr int kExitNoDirection = 4;

struct Options {
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::string mode;
    std::optional<double> budget;
    std::string out = "grassbot_out";
    // experiment
    int seeds = 20;
    std::vector<int> counts{20, 50};
    int threads = 1;
    double sample_period = 600.0;
    // direction / track
    std::string frame;
    std::vector<int> box;
};

ScenarioConfig load_with_overrides(const Options& o) {
    ScenarioConfig cfg = load_scenario(o.scenario);
    if (o.seed) cfg.seed = *o.seed;
    if (!o.mode.empty()) {
        const auto m = parse_strategy(o.mode);
        if (!m) throw ConfigError("--mode", "expected 'planned' or 'random'");
        cfg.mode = *m;
    }
    return cfg;
}

double budget_of(const Options& o) {
    if (!o.budget) return kUnlimitedBudget;
    if (!(*o.budget > 0.0)) throw ConfigError("--budget", "must be positive");
    return *o.budget;
}

int cmd_run(const Options& o) {
    const ScenarioConfig cfg = load_with_overrides(o);
    const EpisodeTrace trace = run_episode(cfg, budget_of(o));
    const std::string stem = trace_stem(trace);
    const auto [tp, ep] = write_trace_files(o.out, trace, stem);
    const std::string line = summary_line(trace);
    std::ofstream(fs::path(o.out) / (stem + "_summary.txt")) << line << '\n';
    std::cout << line << '\n' << "trace: " << tp.string() << '\n' << "events: " << ep.string() << '\n';
    return kExitOk;
}

int cmd_experiment(const Options& o) {
    if (o.seeds < 1) throw ConfigError("--seeds", "must be at least 1");
    ExperimentSpec spec;
    spec.base = load_with_overrides(o);
    spec.garbage_counts = o.counts;
    if (!o.mode.empty()) spec.modes = {spec.base.mode};
    for (int i = 0; i < o.seeds; ++i) spec.seeds.push_back(*o.seed + static_cast<std::uint64_t>(i));
    spec.budget = budget_of(o);
    spec.sample_period = o.sample_period;
    spec.threads = o.threads;

    const ExperimentReport rep = run_experiment(spec);
    fs::create_directories(o.out);
    const fs::path report_path = fs::path(o.out) / "report.json";
    std::ofstream(report_path) << to_json(rep).dump(2) << '\n';
    for (const auto& c : rep.cells) {
        std::ofstream curve(fs::path(o.out) / curve_filename(c));
        write_curve(curve, c, rep.sample_period);
    }

    std::printf("%-8s %-8s %9s %12s\n", "garbage", "mode", "episodes", "mean_min");
    for (const auto& c : rep.cells) {
        std::printf("%-8d %-8s %9d %12.2f\n", c.garbage, std::string(to_string(c.mode)).c_str(),
                    c.episodes, c.mean_completion_time / 60.0);
    }
    for (const auto& m : rep.comparisons) {
        std::printf("garbage=%d random/planned=%.3f planned_wins=%.2f (%d pairs)\n", m.garbage,
                    m.ratio, m.planned_win_fraction, m.pairs);
    }
    if (rep.insufficient) {
        std::printf("note: %zu seed(s) is insufficient for aggregate claims (need %zu)\n",
                    spec.seeds.size(), kMinSeedsForAggregate);
    }
    std::printf("report: %s\n", report_path.string().c_str());
    return kExitOk;
}

CameraModel camera_for(const Options& o) {
    if (o.scenario.empty()) return CameraModel::standard();
    return load_scenario(o.scenario).camera();
}

int cmd_direction(const Options& o) {
    const SegmentationFrame frame = load_frame(o.frame);
    const CameraModel cam = camera_for(o);
    const GroundHomography hom = build_homography(cam);
    try {
        const DirectionResult d = find_optimal_direction(frame, hom, cam);
        std::printf("cent_set %zu\n", d.cent.size());
        for (const auto& p : d.cent) std::printf("  %d %d\n", p.u, p.v);
        std::printf("rho_px %.6f\ntheta_deg %.6f\n", d.line.rho, d.line.theta * 180.0 / kPi);
        std::printf("heading_deg %.6f\n", d.heading * 180.0 / kPi);
    } catch (const NavigationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNoDirection;
    } catch (const GeometryError& e) {
        std::fprintf(stderr, "error: no feasible direction (%s)\n", e.what());
        return kExitNoDirection;
    }
    return kExitOk;
}

int cmd_track(const Options& o) {
    const CameraModel cam = camera_for(o);
    ServoLimits limits;
    if (!o.scenario.empty()) {
        const ScenarioConfig cfg = load_scenario(o.scenario);
        limits.v_max = cfg.v_max;
        limits.omega_max = cfg.omega_max;
    }
    ObjectBox box;
    if (!o.box.empty()) {
        if (o.box.size() != 4) throw ConfigError("--box", "expected u_tl v_tl u_br v_br");
        box = {0, o.box[0], o.box[1], o.box[2], o.box[3]};
    } else if (!o.frame.empty()) {
        const auto picked = select_closest_object(load_frame(o.frame), cam);
        if (!picked) throw ConfigError("--frame", "frame has no object boxes");
        box = *picked;
    } else {
        throw ConfigError("--box", "give --box or --frame");
    }
    if (box.u_tl > box.u_br || box.v_tl > box.v_br || box.v_br >= cam.height || box.v_tl < 0) {
        throw ConfigError("--box", "box corners out of order or outside the image");
    }
    const PixelOffset off = compute_offsets(box, cam);
    const TrackerCommand cmd = tracking_command(off, limits, cam);
    const PixelPoint c = locate_garbage(box);
    std::printf("object %d\ncenter %d %d\ndu %d\ndv %d\nv_mps %.17g\nomega_radps %.17g\narrived %s\n",
                box.object_id, c.u, c.v, off.du, off.dv, cmd.v, cmd.omega,
                cmd.arrived ? "true" : "false");
    return kExitOk;
}

int cmd_validate(const Options& o) {
    const ScenarioConfig cfg = load_with_overrides(o);
    validate(cfg);
    const auto objects = resolve_objects(cfg);
    std::printf("ok: %s, %zu objects (%d garbage), mode %s\n", cfg.name.c_str(), objects.size(),
                garbage_total(objects), std::string(to_string(cfg.mode)).c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"grass-field garbage collection robot simulator"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub, bool need_scenario, bool need_seed) {
        auto* s = sub->add_option("--scenario", o.scenario, "scenario file");
        if (need_scenario) s->required()->check(CLI::ExistingFile);
        auto* seed = sub->add_option("--seed", o.seed, "random seed");
        if (need_seed) seed->required();
        sub->add_option("--mode", o.mode, "coverage mode: planned or random");
        sub->add_option("--budget", o.budget, "simulated time budget in seconds (default: unlimited)");
        sub->add_option("--out", o.out, "output directory")->envname("GRASSBOT_OUT");
    };

    auto* run = app.add_subcommand("run", "run one episode and write its trace");
    add_common(run, true, true);

    auto* exp = app.add_subcommand("experiment", "planned vs random over garbage counts and seeds");
    add_common(exp, true, true);
    exp->add_option("--seeds", o.seeds, "number of consecutive seeds starting at --seed");
    exp->add_option("--counts", o.counts, "garbage counts")->delimiter(',');
    exp->add_option("--threads", o.threads, "worker threads");
    exp->add_option("--sample-period", o.sample_period, "remaining-garbage sampling period, s");

    auto* dir = app.add_subcommand("direction", "heading from one segmentation frame");
    dir->add_option("frame", o.frame, "frame file")->required()->check(CLI::ExistingFile);
    dir->add_option("--scenario", o.scenario, "scenario file supplying the camera");

    auto* track = app.add_subcommand("track", "servo offsets and command for one box");
    track->add_option("--box", o.box, "u_tl v_tl u_br v_br")->expected(4);
    track->add_option("--frame", o.frame, "frame file; the closest box is used");
    track->add_option("--scenario", o.scenario, "scenario file supplying camera and limits");

    auto* val = app.add_subcommand("validate", "check a scenario file");
    add_common(val, true, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*run) return cmd_run(o);
        if (*exp) return cmd_experiment(o);
        if (*dir) return cmd_direction(o);
        if (*track) return cmd_track(o);
        if (*val) return cmd_validate(o);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const InvariantViolation& e) {
        std::fprintf(stderr, "invariant violated: %s\n", e.what());
        return kExitInvariant;
    } catch (const NavigationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNoDirection;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitOther;
    }
    return kExitOther;
}
