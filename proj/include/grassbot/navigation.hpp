#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "grassbot/camera.hpp"
#include "grassbot/geometry.hpp"
#include "grassbot/perception.hpp"
#include "grassbot/rng.hpp"
#include "grassbot/tracker.hpp"
#include "grassbot/world.hpp"

namespace grassbot {

class NavigationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Optimal direction from the ground contour

// One pixel run [first, last] in an image row.
struct PixelRun {
    int first = 0;
    int last = 0;
    int extent() const { return last - first; }
};

namespace detail {

// Runs of pixels inside `contour` on row v, using the same crossing rule as
// point_in_polygon so both agree pixel for pixel.
inline void contour_row_runs(std::span<const Vec2> contour, double v, int width,
                             std::vector<double>& xs, std::vector<PixelRun>& runs) {
    xs.clear();
    runs.clear();
    const std::size_t n = contour.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2 a = contour[i];
        const Vec2 b = contour[j];
        if ((a.y > v) != (b.y > v)) xs.push_back((b.x - a.x) * (v - a.y) / (b.y - a.y) + a.x);
    }
    std::sort(xs.begin(), xs.end());
    // Pixel u is inside iff xs[2k] <= u < xs[2k+1] for some k.
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
        const double lo = std::max(std::ceil(xs[k]), 0.0);
        const double hi = std::min(std::ceil(xs[k + 1]) - 1.0, static_cast<double>(width - 1));
        if (lo > hi) continue;
        const int first = static_cast<int>(lo);
        const int last = static_cast<int>(hi);
        if (!runs.empty() && runs.back().last + 1 >= first) {
            runs.back().last = std::max(runs.back().last, last);
        } else {
            runs.push_back({first, last});
        }
    }
}

inline void subtract_interval(std::vector<PixelRun>& runs, int lo, int hi,
                              std::vector<PixelRun>& scratch) {
    scratch.clear();
    for (const auto& r : runs) {
        if (hi < r.first || lo > r.last) {
            scratch.push_back(r);
            continue;
        }
        if (r.first < lo) scratch.push_back({r.first, lo - 1});
        if (r.last > hi) scratch.push_back({hi + 1, r.last});
    }
    runs.swap(scratch);
}

}  // namespace detail

// Per-row centers of the widest passable run over rows [h/2, h-1]. A pixel
// is passable when it is inside the ground contour and outside every object
// box (boxes are inclusive). A run's width is last - first, so one-pixel runs
// never qualify, and the leftmost run wins ties.
inline std::vector<PixelPoint> compute_cent_set(const SegmentationFrame& frame,
                                                const CameraModel& cam) {
    std::vector<PixelPoint> cent;
    if (frame.ground_contour.size() < 3) return cent;
    std::vector<double> xs;
    std::vector<PixelRun> runs;
    std::vector<PixelRun> scratch;
    for (int v = cam.height / 2; v < cam.height; ++v) {
        detail::contour_row_runs(frame.ground_contour, v, cam.width, xs, runs);
        for (const auto& box : frame.object_boxes) {
            if (v < box.v_tl || v > box.v_br) continue;
            detail::subtract_interval(runs, box.u_tl, box.u_br, scratch);
        }
        int max_w = 0;
        std::optional<PixelPoint> best;
        for (const auto& r : runs) {
            if (r.extent() > max_w) {
                max_w = r.extent();
                best = PixelPoint{(r.first + r.last) / 2, v};
            }
        }
        if (best) cent.push_back(*best);
    }
    return cent;
}

struct DirectionResult {
    std::vector<PixelPoint> cent;
    PolarLine line;
    double heading = 0.0;  // robot frame
};

inline DirectionResult find_optimal_direction(const SegmentationFrame& frame,
                                              const GroundHomography& hom,
                                              const CameraModel& cam) {
    DirectionResult out;
    out.cent = compute_cent_set(frame, cam);
    if (out.cent.size() < 2) throw NavigationError("no feasible direction");
    std::vector<Vec2> pts;
    pts.reserve(out.cent.size());
    for (const auto& p : out.cent) pts.push_back({static_cast<double>(p.u), static_cast<double>(p.v)});
    out.line = hough_line(pts);
    out.heading = image_line_to_ground_heading(out.line, hom, cam);
    return out;
}

// ---------------------------------------------------------------------------
// Return to the map

inline Vec2 free_centroid(const OccupancyGrid& grid) {
    double sx = 0.0;
    double sy = 0.0;
    std::size_t n = 0;
    for (int j = 0; j < grid.height(); ++j) {
        for (int i = 0; i < grid.width(); ++i) {
            if (grid.at(i, j) != 1) continue;
            const Vec2 c = grid.cell_center(i, j);
            sx += c.x;
            sy += c.y;
            ++n;
        }
    }
    if (n == 0) return {};
    return {sx / static_cast<double>(n), sy / static_cast<double>(n)};
}

struct ReturnDecision {
    double heading = 0.0;  // absolute
    int attempts = 0;
    bool fallback = false;
};

// Random rotations until the heading ray enters free cells and stays free for
// `lookahead`; after `max_attempts` rejections, head for `centroid`.
inline ReturnDecision return_heading(const OccupancyGrid& grid, const Pose2D& pose, Rng& rng,
                                     double lookahead, Vec2 centroid, int max_attempts = 64) {
    ReturnDecision d;
    Pose2D probe = pose;
    for (d.attempts = 1; d.attempts <= max_attempts; ++d.attempts) {
        probe.theta = normalize_angle(probe.theta + rng.uniform(-kPi, kPi));
        if (reentry_ray_free(grid, probe, lookahead)) {
            d.heading = probe.theta;
            return d;
        }
    }
    d.attempts = max_attempts;
    d.fallback = true;
    d.heading = std::atan2(centroid.y - pose.y, centroid.x - pose.x);
    return d;
}

// ---------------------------------------------------------------------------
// Coverage path for the planned baseline

// Boustrophedon lanes parallel to x, one per `spacing` of free extent in y,
// alternating direction. Lane ends are pulled in by `inset` from the edge of
// the free run. Corner waypoints are inserted where a direct hop between
// lanes would cross occupied cells.
inline std::vector<Pose2D> coverage_waypoints(const OccupancyGrid& grid, double spacing,
                                              double inset = 1.0) {
    if (!(spacing > 0.0)) throw NavigationError("lane spacing must be positive");
    std::vector<Pose2D> out;
    int j_min = grid.height();
    int j_max = -1;
    for (int j = 0; j < grid.height(); ++j) {
        for (int i = 0; i < grid.width(); ++i) {
            if (grid.at(i, j) == 1) {
                j_min = std::min(j_min, j);
                j_max = std::max(j_max, j);
                break;
            }
        }
    }
    if (j_max < 0) return out;

    const double res = grid.resolution();
    const double y_lo = grid.origin().y + j_min * res;
    const double y_hi = grid.origin().y + (j_max + 1) * res;
    const int lanes = static_cast<int>(std::ceil((y_hi - y_lo) / spacing - 1e-9));

    auto segment_free = [&](Vec2 a, Vec2 b) {
        return grid.traverse(a, b, [&](int i, int j) { return grid.at(i, j) == 1; });
    };
    auto push = [&](Vec2 p) {
        if (!out.empty()) {
            const Vec2 prev = out.back().position();
            if (!segment_free(prev, p)) {
                const Vec2 c1{p.x, prev.y};
                const Vec2 c2{prev.x, p.y};
                if (grid.free_at(c1) && segment_free(prev, c1) && segment_free(c1, p)) {
                    out.push_back({c1.x, c1.y, std::atan2(c1.y - prev.y, c1.x - prev.x)});
                } else if (grid.free_at(c2) && segment_free(prev, c2) && segment_free(c2, p)) {
                    out.push_back({c2.x, c2.y, std::atan2(c2.y - prev.y, c2.x - prev.x)});
                }
            }
        }
        double heading = 0.0;
        if (!out.empty()) heading = std::atan2(p.y - out.back().y, p.x - out.back().x);
        out.push_back({p.x, p.y, heading});
    };

    for (int k = 0; k < lanes; ++k) {
        double y = y_lo + (k + 0.5) * spacing;
        y = std::min(y, y_hi - 0.5 * res);
        const int j = grid.cell_y(y);
        y = grid.cell_center(0, j).y;
        std::vector<PixelRun> runs;
        for (int i = 0; i < grid.width(); ++i) {
            if (grid.at(i, j) != 1) continue;
            if (!runs.empty() && runs.back().last + 1 == i) {
                runs.back().last = i;
            } else {
                runs.push_back({i, i});
            }
        }
        const bool forward = (k % 2) == 0;
        if (!forward) std::reverse(runs.begin(), runs.end());
        for (const auto& r : runs) {
            double x0 = grid.cell_center(r.first, j).x + inset;
            double x1 = grid.cell_center(r.last, j).x - inset;
            if (x0 > x1) x0 = x1 = 0.5 * (grid.cell_center(r.first, j).x + grid.cell_center(r.last, j).x);
            if (forward) {
                push({x0, y});
                if (x1 > x0) push({x1, y});
            } else {
                push({x1, y});
                if (x1 > x0) push({x0, y});
            }
        }
    }
    return out;
}

// Ground width the camera wedge spans at `distance`.
inline double footprint_width(const CameraModel& cam, double distance) {
    return 2.0 * distance * std::tan(0.5 * cam.hfov);
}

// ---------------------------------------------------------------------------
// Controllers

// Turns in place until within `align_tol`, then drives at full speed while
// correcting the residual error.
inline Twist turn_then_advance(double heading_error, double v_max, double omega_max,
                               double align_tol, double gain = 2.0) {
    Twist cmd;
    cmd.omega = std::clamp(gain * heading_error, -omega_max, omega_max);
    if (std::abs(heading_error) <= align_tol) cmd.v = v_max;
    if (heading_error == 0.0) cmd.omega = 0.0;
    return cmd;
}

enum class NavMode : std::uint8_t { coverage, return_to_map, track, recognize, pickup, avoid };

inline constexpr std::array<NavMode, 6> kAllNavModes = {
    NavMode::coverage, NavMode::return_to_map, NavMode::track,
    NavMode::recognize, NavMode::pickup, NavMode::avoid};

inline std::string_view to_string(NavMode m) {
    switch (m) {
        case NavMode::coverage: return "coverage";
        case NavMode::return_to_map: return "return";
        case NavMode::track: return "track";
        case NavMode::recognize: return "recognize";
        case NavMode::pickup: return "pickup";
        case NavMode::avoid: return "avoid";
    }
    return "?";
}

inline std::optional<NavMode> parse_nav_mode(std::string_view s) {
    for (NavMode m : kAllNavModes) {
        if (to_string(m) == s) return m;
    }
    return std::nullopt;
}

enum class CoverageStrategy : std::uint8_t { planned, random };

inline std::string_view to_string(CoverageStrategy s) {
    return s == CoverageStrategy::planned ? "planned" : "random";
}

inline std::optional<CoverageStrategy> parse_strategy(std::string_view s) {
    if (s == "planned") return CoverageStrategy::planned;
    if (s == "random") return CoverageStrategy::random;
    return std::nullopt;
}

struct NavState {
    NavMode mode = NavMode::coverage;
    std::optional<ObjectId> tracked_object_id;
    std::optional<double> committed_heading;
    double avoid_distance_remaining = 0.0;
    std::size_t waypoint_index = 0;

    // Return manoeuvre.
    double return_heading = 0.0;
    bool return_aligned = false;
    double return_travelled = 0.0;

    // Pickup bookkeeping.
    int pickup_ticks_remaining = 0;
    int pickup_attempts = 0;

    // Results produced on one tick and consumed by the next dispatch.
    bool target_arrived = false;
    bool target_lost = false;
    std::optional<bool> recognized_garbage;

    int sweeps_completed = 0;
    std::set<ObjectId> obstacles;  // objects the robot has given up on
};

// avoid_step: hold the committed heading for the escape distance.
struct AvoidStepResult {
    Twist command;
    bool emergency = false;
    bool done = false;
};

struct AvoidParams {
    double v_max = 0.5;
    double omega_max = 1.0;
    double align_tolerance = 0.1;
    double emergency_range = 0.3;
};

inline AvoidStepResult avoid_step(NavState& nav, const Pose2D& pose, double ultrasonic,
                                  double dt, const AvoidParams& p) {
    AvoidStepResult out;
    if (!nav.committed_heading) {
        out.done = true;
        return out;
    }
    const double err = normalize_angle(*nav.committed_heading - pose.theta);
    out.command = turn_then_advance(err, p.v_max, p.omega_max, p.align_tolerance);
    if (out.command.v > 0.0 && ultrasonic < p.emergency_range) {
        out.command = {};
        out.emergency = true;
        return out;
    }
    nav.avoid_distance_remaining -= std::abs(out.command.v) * dt;
    if (nav.avoid_distance_remaining <= 0.0) {
        nav.avoid_distance_remaining = 0.0;
        nav.committed_heading.reset();
        out.done = true;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Mode dispatch

enum class PickupOutcome : std::uint8_t { pending, success, retry, exhausted };

struct NavSignals {
    bool out_of_map = false;
    bool objects_visible = false;
    bool emergency = false;
    bool target_arrived = false;
    bool target_lost = false;
    std::optional<bool> recognized_garbage;
    PickupOutcome pickup = PickupOutcome::pending;
    bool escape_done = false;
    bool return_done = false;
};

// Successor mode for every (mode, signals) pair.
inline NavMode dispatch(NavMode mode, const NavSignals& s) {
    switch (mode) {
        case NavMode::pickup:
            switch (s.pickup) {
                case PickupOutcome::pending:
                case PickupOutcome::retry: return NavMode::pickup;
                case PickupOutcome::success: return NavMode::coverage;
                case PickupOutcome::exhausted: return NavMode::avoid;
            }
            return NavMode::pickup;
        case NavMode::recognize:
            if (!s.recognized_garbage) return NavMode::recognize;
            return *s.recognized_garbage ? NavMode::pickup : NavMode::avoid;
        case NavMode::track:
            if (s.out_of_map) return NavMode::return_to_map;
            if (s.emergency) return NavMode::avoid;
            if (s.target_arrived) return NavMode::recognize;
            if (s.target_lost) return NavMode::coverage;
            return NavMode::track;
        case NavMode::avoid:
            if (s.out_of_map) return NavMode::return_to_map;
            if (s.escape_done) return s.objects_visible ? NavMode::track : NavMode::coverage;
            return NavMode::avoid;
        case NavMode::return_to_map:
            if (s.out_of_map) return NavMode::return_to_map;
            if (s.objects_visible) return NavMode::track;
            return s.return_done ? NavMode::coverage : NavMode::return_to_map;
        case NavMode::coverage:
            if (s.out_of_map) return NavMode::return_to_map;
            if (s.emergency) return NavMode::avoid;
            if (s.objects_visible) return NavMode::track;
            return NavMode::coverage;
    }
    return NavMode::coverage;
}

// ---------------------------------------------------------------------------
// Navigator

struct PickupModel {
    double duration = 1.4;            // s per attempt, robot halted
    double success_probability = 0.96;
    int max_attempts = 3;
    double reach = 0.35;              // object center to robot front, m

    int ticks(double dt) const {
        const double n = duration / dt;
        const double r = std::round(n);
        return static_cast<int>(std::abs(n - r) < 1e-9 ? r : std::ceil(n));
    }

    // One grasp: fails outright when the object is out of reach or too heavy.
    bool attempt(Rng& rng, bool reachable = true, double mass = 0.0) const {
        const bool draw = rng.bernoulli(success_probability);
        return reachable && mass <= 1.0 && draw;
    }
};

enum class EventKind : std::uint8_t {
    pickup_success,
    pickup_failure,
    avoid,
    boundary_exit,
    emergency_stop,
    collision,
};

inline constexpr std::array<EventKind, 6> kAllEventKinds = {
    EventKind::pickup_success, EventKind::pickup_failure, EventKind::avoid,
    EventKind::boundary_exit,  EventKind::emergency_stop, EventKind::collision};

inline std::string_view to_string(EventKind k) {
    switch (k) {
        case EventKind::pickup_success: return "pickup_success";
        case EventKind::pickup_failure: return "pickup_failure";
        case EventKind::avoid: return "avoid";
        case EventKind::boundary_exit: return "boundary_exit";
        case EventKind::emergency_stop: return "emergency_stop";
        case EventKind::collision: return "collision";
    }
    return "?";
}

inline std::optional<EventKind> parse_event_kind(std::string_view s) {
    for (EventKind k : kAllEventKinds) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

struct NavEvent {
    EventKind kind = EventKind::avoid;
    std::optional<ObjectId> object_id;
};

struct NavigationConfig {
    CoverageStrategy strategy = CoverageStrategy::planned;
    double dt = 0.1;
    double v_max = 0.5;
    double omega_max = 1.0;
    double robot_radius = 0.2;
    double robot_front = 0.2;         // reference point to front bumper
    double lookahead = 2.0;           // return ray length
    double escape_distance = 1.5;
    double emergency_range = 0.3;
    double align_tolerance = 0.1;
    double return_align_tolerance = 0.05;
    double waypoint_tolerance = 0.5;
    double waypoint_align_tolerance = 0.3;
    double lane_spacing = 0.0;        // <= 0: camera footprint width at 5 m
    double lane_inset = 1.0;
    double replan_period = 0.5;       // random-mode direction refresh
    int return_max_attempts = 64;
    int max_missed_frames = 10;
    int dv_deadband = 10;
    int du_deadband = 5;
    PickupModel pickup;
};

struct Percept {
    const SegmentationFrame* frame = nullptr;
    double ultrasonic = 0.0;
    bool bumped = false;
};

struct NavRngs {
    Rng navigation;
    Rng classifier;
    Rng pickup;
};

struct NavOutput {
    Twist command;
    std::vector<NavEvent> events;
};

class Navigator {
public:
    Navigator(const OccupancyGrid& grid, const CameraModel& cam, const GroundHomography& hom,
              const ConfusionModel& classifier, NavigationConfig config)
        : grid_(&grid),
          cam_(cam),
          hom_(hom),
          classifier_(classifier),
          config_(config),
          tracker_(ServoLimits{config.v_max, config.omega_max, config.dv_deadband,
                               config.du_deadband},
                   config.max_missed_frames),
          centroid_(free_centroid(grid)) {
        if (config_.strategy == CoverageStrategy::planned) {
            const double spacing =
                config_.lane_spacing > 0.0 ? config_.lane_spacing : footprint_width(cam_, 5.0);
            waypoints_ = coverage_waypoints(grid, spacing, config_.lane_inset);
        }
    }

    const NavState& state() const { return state_; }
    const std::vector<Pose2D>& waypoints() const { return waypoints_; }
    const NavigationConfig& config() const { return config_; }

    // One control tick. `world` is consulted only for what the robot's own
    // hardware would establish: the true class fed to the classifier stub
    // and whether the gripper can reach the object.
    NavOutput step(const World& world, const Pose2D& est, const Percept& percept, NavRngs& rngs) {
        NavOutput out;
        const SegmentationFrame& frame = *percept.frame;
        std::vector<ObjectBox> candidates;
        for (const auto& b : frame.object_boxes) {
            if (!state_.obstacles.contains(b.object_id)) candidates.push_back(b);
        }

        NavSignals s;
        s.out_of_map = !is_inside_map(*grid_, est);
        s.objects_visible = !candidates.empty();
        s.emergency = percept.bumped || emergency_pending_ ||
                      (moving_forward_ && percept.ultrasonic < config_.emergency_range);
        emergency_pending_ = false;
        s.target_arrived = state_.target_arrived;
        s.target_lost = state_.target_lost;
        s.recognized_garbage = state_.recognized_garbage;
        s.pickup = pickup_outcome_;
        s.escape_done = escape_done_;
        s.return_done = return_done_;

        const NavMode prev = state_.mode;
        const NavMode next = dispatch(prev, s);
        enter(prev, next, s, est, frame, rngs, out);

        switch (state_.mode) {
            case NavMode::coverage: out.command = coverage_tick(est, frame, rngs); break;
            case NavMode::return_to_map: out.command = return_tick(est); break;
            case NavMode::track: out.command = track_tick(candidates); break;
            case NavMode::recognize: recognize_tick(world, rngs); break;
            case NavMode::pickup: pickup_tick(world, rngs, out); break;
            case NavMode::avoid: out.command = avoid_tick(est, percept); break;
        }
        moving_forward_ = out.command.v > 0.0;
        if (state_.mode == NavMode::coverage && out.command.v > 0.0) emergency_streak_ = 0;
        return out;
    }

private:
    void clear_transients() {
        state_.target_arrived = false;
        state_.target_lost = false;
        state_.recognized_garbage.reset();
        pickup_outcome_ = PickupOutcome::pending;
        escape_done_ = false;
        return_done_ = false;
    }

    void enter(NavMode prev, NavMode next, const NavSignals& s, const Pose2D& est,
               const SegmentationFrame& frame, NavRngs& rngs, NavOutput& out) {
        const bool replan = next == NavMode::avoid && prev == NavMode::avoid && s.emergency;
        if (next == prev && !replan) return;
        clear_transients();
        const bool emergency_stop = s.emergency && next == NavMode::avoid &&
                                    (prev == NavMode::coverage || prev == NavMode::track ||
                                     prev == NavMode::avoid);
        if (emergency_stop) {
            out.events.push_back({EventKind::emergency_stop, std::nullopt});
            ++emergency_streak_;
        }
        state_.mode = next;
        switch (next) {
            case NavMode::coverage:
                state_.tracked_object_id.reset();
                state_.committed_heading.reset();
                tracker_.reset();
                break;
            case NavMode::return_to_map:
                if (s.out_of_map) out.events.push_back({EventKind::boundary_exit, std::nullopt});
                begin_return(est, rngs);
                break;
            case NavMode::track:
                state_.committed_heading.reset();
                tracker_.reset();
                break;
            case NavMode::recognize:
                break;
            case NavMode::pickup:
                state_.pickup_attempts = 0;
                state_.pickup_ticks_remaining = config_.pickup.ticks(config_.dt);
                break;
            case NavMode::avoid:
                if (prev == NavMode::recognize || prev == NavMode::pickup) {
                    if (state_.tracked_object_id) {
                        state_.obstacles.insert(*state_.tracked_object_id);
                        out.events.push_back({EventKind::avoid, state_.tracked_object_id});
                    }
                } else {
                    out.events.push_back({EventKind::avoid, std::nullopt});
                }
                state_.tracked_object_id.reset();
                tracker_.reset();
                begin_avoid(est, frame, rngs);
                break;
        }
    }

    void begin_return(const Pose2D& est, NavRngs& rngs) {
        state_.tracked_object_id.reset();
        state_.committed_heading.reset();
        tracker_.reset();
        const auto d = return_heading(*grid_, est, rngs.navigation, config_.lookahead, centroid_,
                                      config_.return_max_attempts);
        state_.return_heading = d.heading;
        state_.return_aligned = false;
        state_.return_travelled = 0.0;
    }

    void begin_avoid(const Pose2D& est, const SegmentationFrame& frame, NavRngs& rngs) {
        double heading = 0.0;
        if (emergency_streak_ > 2) {
            // Re-planning keeps hitting the same thing; break the cycle.
            heading = est.theta + rngs.navigation.uniform(-kPi, kPi);
        } else try {
            const double rel = find_optimal_direction(frame, hom_, cam_).heading;
            heading = est.theta + clear_heading(rel, frame);
        } catch (const std::runtime_error&) {
            heading = return_heading(*grid_, est, rngs.navigation, config_.lookahead, centroid_,
                                     config_.return_max_attempts)
                          .heading;
        }
        state_.committed_heading = normalize_angle(heading);
        state_.avoid_distance_remaining = config_.escape_distance;
    }

    // Rotates a relative heading away from boxes whose back-projected
    // footprint would graze the robot within the escape distance.
    double clear_heading(double rel, const SegmentationFrame& frame) const {
        struct Disc {
            Vec2 center;
            double radius;
        };
        std::vector<Disc> discs;
        for (const auto& b : frame.object_boxes) {
            const double vb = b.v_br;
            const auto near = hom_.backproject({0.5 * (b.u_tl + b.u_br), vb});
            const auto left = hom_.backproject({static_cast<double>(b.u_tl), vb});
            const auto right = hom_.backproject({static_cast<double>(b.u_br), vb});
            if (!near || !left || !right) continue;
            const double r = 0.5 * norm(*left - *right);
            const double d = norm(*near);
            const Vec2 c = d > 1e-9 ? (1.0 + r / d) * *near : *near;
            discs.push_back({c, r});
        }
        if (discs.empty()) return rel;
        auto blocking = [&](double h) -> const Disc* {
            const Vec2 end{config_.escape_distance * std::cos(h), config_.escape_distance * std::sin(h)};
            for (const auto& d : discs) {
                if (distance_to_segment(d.center, {0.0, 0.0}, end) <
                    config_.robot_radius + d.radius + 0.05) {
                    return &d;
                }
            }
            return nullptr;
        };
        double h = rel;
        for (int k = 0; k < 32; ++k) {
            const Disc* d = blocking(h);
            if (!d) return h;
            const Vec2 dir{std::cos(h), std::sin(h)};
            h += cross(dir, d->center) > 0.0 ? -0.1 : 0.1;
        }
        return rel;
    }

    Twist coverage_tick(const Pose2D& est, const SegmentationFrame& frame, NavRngs& rngs) {
        if (config_.strategy == CoverageStrategy::planned) return follow_waypoints(est);
        since_replan_ += config_.dt;
        if (!state_.committed_heading || since_replan_ + 1e-9 >= config_.replan_period) {
            since_replan_ = 0.0;
            try {
                state_.committed_heading =
                    normalize_angle(est.theta + find_optimal_direction(frame, hom_, cam_).heading);
            } catch (const std::runtime_error&) {
                // No passable ground ahead: rotate-and-probe like a boundary exit.
                state_.mode = NavMode::return_to_map;
                clear_transients();
                begin_return(est, rngs);
                return return_tick(est);
            }
        }
        const double err = normalize_angle(*state_.committed_heading - est.theta);
        return turn_then_advance(err, config_.v_max, config_.omega_max,
                                 config_.waypoint_align_tolerance);
    }

    Twist follow_waypoints(const Pose2D& est) {
        if (waypoints_.empty()) return {};
        if (state_.waypoint_index >= waypoints_.size()) state_.waypoint_index = 0;
        Vec2 target = waypoints_[state_.waypoint_index].position();
        while (norm(target - est.position()) < config_.waypoint_tolerance) {
            ++state_.waypoint_index;
            if (state_.waypoint_index >= waypoints_.size()) {
                ++state_.sweeps_completed;
                std::reverse(waypoints_.begin(), waypoints_.end());
                state_.waypoint_index = 0;
            }
            target = waypoints_[state_.waypoint_index].position();
            if (waypoints_.size() == 1) break;
        }
        const double bearing = std::atan2(target.y - est.y, target.x - est.x);
        return turn_then_advance(normalize_angle(bearing - est.theta), config_.v_max,
                                 config_.omega_max, config_.waypoint_align_tolerance);
    }

    Twist return_tick(const Pose2D& est) {
        const double err = normalize_angle(state_.return_heading - est.theta);
        if (!state_.return_aligned) {
            if (std::abs(err) <= config_.return_align_tolerance) {
                state_.return_aligned = true;
            } else {
                return {0.0, std::clamp(2.0 * err, -config_.omega_max, config_.omega_max)};
            }
        }
        // Straight drive along the accepted heading.
        state_.return_travelled += config_.v_max * config_.dt;
        const bool inside = is_inside_map(*grid_, est);
        if (inside && state_.return_travelled >= config_.lookahead) return_done_ = true;
        if (!inside && state_.return_travelled >= 3.0 * config_.lookahead) {
            // Overshot or mis-estimated: head for the middle of the map instead.
            state_.return_aligned = false;
            state_.return_travelled = 0.0;
            state_.return_heading = std::atan2(centroid_.y - est.y, centroid_.x - est.x);
            return {};
        }
        return {config_.v_max, 0.0};
    }

    Twist track_tick(std::span<const ObjectBox> candidates) {
        if (!tracker_.target() && state_.tracked_object_id) tracker_.start(*state_.tracked_object_id);
        const TrackResult r = tracker_.step(candidates, cam_);
        state_.tracked_object_id = r.target;
        switch (r.status) {
            case TrackStatus::arrived: state_.target_arrived = true; return {};
            case TrackStatus::lost:
                state_.target_lost = true;
                state_.tracked_object_id.reset();
                return {};
            case TrackStatus::tracking: break;
        }
        return {r.command.v, r.command.omega};
    }

    void recognize_tick(const World& world, NavRngs& rngs) {
        if (state_.recognized_garbage) return;
        const WorldObject* obj =
            state_.tracked_object_id ? world.find(*state_.tracked_object_id) : nullptr;
        if (!obj || obj->picked) {
            state_.recognized_garbage = false;
            return;
        }
        state_.recognized_garbage = classify(classifier_, obj->true_class, rngs.classifier).is_garbage;
    }

    void pickup_tick(const World& world, NavRngs& rngs, NavOutput& out) {
        if (pickup_outcome_ == PickupOutcome::retry) pickup_outcome_ = PickupOutcome::pending;
        if (--state_.pickup_ticks_remaining > 0) return;
        const WorldObject* obj =
            state_.tracked_object_id ? world.find(*state_.tracked_object_id) : nullptr;
        bool reachable = false;
        double mass = 0.0;
        if (obj && !obj->picked) {
            const Pose2D& truth = world.robot.pose;
            const Vec2 front = heading_point(truth, config_.robot_front);
            reachable = norm(obj->center - front) <= config_.pickup.reach;
            mass = obj->mass;
        }
        ++state_.pickup_attempts;
        if (config_.pickup.attempt(rngs.pickup, reachable, mass)) {
            out.events.push_back({EventKind::pickup_success, state_.tracked_object_id});
            pickup_outcome_ = PickupOutcome::success;
            state_.tracked_object_id.reset();
            return;
        }
        out.events.push_back({EventKind::pickup_failure, state_.tracked_object_id});
        if (state_.pickup_attempts >= config_.pickup.max_attempts) {
            pickup_outcome_ = PickupOutcome::exhausted;
        } else {
            pickup_outcome_ = PickupOutcome::retry;
            state_.pickup_ticks_remaining = config_.pickup.ticks(config_.dt);
        }
    }

    Twist avoid_tick(const Pose2D& est, const Percept& percept) {
        const AvoidParams p{config_.v_max, config_.omega_max, config_.align_tolerance,
                            config_.emergency_range};
        const AvoidStepResult r = avoid_step(state_, est, percept.ultrasonic, config_.dt, p);
        if (r.emergency) emergency_pending_ = true;
        if (r.done) {
            escape_done_ = true;
            emergency_streak_ = 0;
        }
        return r.command;
    }

    const OccupancyGrid* grid_;
    CameraModel cam_;
    GroundHomography hom_;
    ConfusionModel classifier_;
    NavigationConfig config_;
    ObjectTracker tracker_;
    Vec2 centroid_;
    std::vector<Pose2D> waypoints_;
    NavState state_;

    PickupOutcome pickup_outcome_ = PickupOutcome::pending;
    bool escape_done_ = false;
    bool return_done_ = false;
    bool moving_forward_ = false;
    bool emergency_pending_ = false;
    int emergency_streak_ = 0;
    double since_replan_ = 0.0;
};

}  // namespace grassbot
