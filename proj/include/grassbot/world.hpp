#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "grassbot/geometry.hpp"
#include "grassbot/rng.hpp"

namespace grassbot {

struct Pose2D {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;

    Vec2 position() const { return {x, y}; }
    friend bool operator==(const Pose2D&, const Pose2D&) = default;
};

struct Twist {
    double v = 0.0;
    double omega = 0.0;
    friend bool operator==(const Twist&, const Twist&) = default;
};

enum class ObjectClass : std::uint8_t {
    bottle,
    can,
    carton,
    plastic_bag,
    waste_paper,
    cup,
    book,
    shoes,
    phone,
    bag,
    wallet,
};

inline constexpr std::size_t kObjectClassCount = 11;
inline constexpr std::size_t kGarbageClassCount = 5;

inline constexpr std::array<std::string_view, kObjectClassCount> kObjectClassNames = {
    "bottle", "can", "carton", "plastic_bag", "waste_paper", "cup",
    "book",   "shoes", "phone", "bag",        "wallet"};

inline bool is_garbage_class(ObjectClass c) {
    return static_cast<std::size_t>(c) < kGarbageClassCount;
}

inline std::string_view to_string(ObjectClass c) {
    return kObjectClassNames[static_cast<std::size_t>(c)];
}

inline std::optional<ObjectClass> parse_object_class(std::string_view name) {
    for (std::size_t i = 0; i < kObjectClassNames.size(); ++i) {
        if (kObjectClassNames[i] == name) return static_cast<ObjectClass>(i);
    }
    return std::nullopt;
}

using ObjectId = int;

// Objects are vertical cylinders standing on the ground.
struct WorldObject {
    ObjectId id = 0;
    Vec2 center;
    double footprint_radius = 0.05;
    double height = 0.2;
    ObjectClass true_class = ObjectClass::bottle;
    double mass = 0.1;
    bool picked = false;
};

struct RobotState {
    Pose2D pose;
    double v = 0.0;
    double omega = 0.0;
    int carried_count = 0;
};

// Binary raster of the cleaning area: 1 = free/inside, 0 = occupied/outside.
class OccupancyGrid {
public:
    OccupancyGrid() = default;
    OccupancyGrid(Vec2 origin, double resolution, int width, int height)
        : origin_(origin), resolution_(resolution), width_(width), height_(height),
          cells_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0) {
        if (!(resolution > 0.0) || width <= 0 || height <= 0) {
            throw std::invalid_argument("occupancy grid needs positive resolution and extent");
        }
    }

    // Cells whose center lies inside `boundary` are free, except cells crossed
    // by a boundary edge, which stay 0.
    static OccupancyGrid rasterize(std::span<const Vec2> boundary, double resolution) {
        if (boundary.size() < 3) throw std::invalid_argument("boundary needs at least 3 vertices");
        double min_x = boundary[0].x, max_x = boundary[0].x;
        double min_y = boundary[0].y, max_y = boundary[0].y;
        for (Vec2 p : boundary) {
            min_x = std::min(min_x, p.x);
            max_x = std::max(max_x, p.x);
            min_y = std::min(min_y, p.y);
            max_y = std::max(max_y, p.y);
        }
        const Vec2 origin{min_x - 2.0 * resolution, min_y - 2.0 * resolution};
        const int w = static_cast<int>(std::ceil((max_x - min_x) / resolution)) + 4;
        const int h = static_cast<int>(std::ceil((max_y - min_y) / resolution)) + 4;
        OccupancyGrid grid(origin, resolution, w, h);
        for (int j = 0; j < h; ++j) {
            for (int i = 0; i < w; ++i) {
                if (point_in_polygon(boundary, grid.cell_center(i, j))) grid.set(i, j, 1);
            }
        }
        const std::size_t n = boundary.size();
        for (std::size_t a = 0, b = n - 1; a < n; b = a++) {
            grid.traverse(boundary[b], boundary[a], [&](int i, int j) {
                grid.set(i, j, 0);
                return true;
            });
        }
        return grid;
    }

    double resolution() const { return resolution_; }
    int width() const { return width_; }
    int height() const { return height_; }
    Vec2 origin() const { return origin_; }
    bool empty() const { return cells_.empty(); }

    bool in_bounds(int i, int j) const { return i >= 0 && j >= 0 && i < width_ && j < height_; }

    std::uint8_t at(int i, int j) const {
        return in_bounds(i, j) ? cells_[index(i, j)] : std::uint8_t{0};
    }
    void set(int i, int j, std::uint8_t value) {
        if (in_bounds(i, j)) cells_[index(i, j)] = value;
    }

    int cell_x(double x) const { return static_cast<int>(std::floor((x - origin_.x) / resolution_)); }
    int cell_y(double y) const { return static_cast<int>(std::floor((y - origin_.y) / resolution_)); }

    Vec2 cell_center(int i, int j) const {
        return {origin_.x + (i + 0.5) * resolution_, origin_.y + (j + 0.5) * resolution_};
    }

    bool free_at(Vec2 p) const { return at(cell_x(p.x), cell_y(p.y)) == 1; }

    std::size_t free_count() const {
        return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), std::uint8_t{1}));
    }

    // Visits every cell the segment a-b passes through, in order from a.
    // The visitor returns false to stop early; traverse returns false iff stopped.
    template <typename Visitor>
    bool traverse(Vec2 a, Vec2 b, Visitor&& visit) const {
        const double ax = (a.x - origin_.x) / resolution_;
        const double ay = (a.y - origin_.y) / resolution_;
        const double bx = (b.x - origin_.x) / resolution_;
        const double by = (b.y - origin_.y) / resolution_;
        int i = static_cast<int>(std::floor(ax));
        int j = static_cast<int>(std::floor(ay));
        const int end_i = static_cast<int>(std::floor(bx));
        const int end_j = static_cast<int>(std::floor(by));
        const double dx = bx - ax;
        const double dy = by - ay;
        const int step_i = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
        const int step_j = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
        constexpr double inf = std::numeric_limits<double>::infinity();
        const double delta_x = step_i != 0 ? std::abs(1.0 / dx) : inf;
        const double delta_y = step_j != 0 ? std::abs(1.0 / dy) : inf;
        double t_max_x = step_i > 0 ? (std::floor(ax) + 1.0 - ax) * delta_x
                       : step_i < 0 ? (ax - std::floor(ax)) * delta_x
                                    : inf;
        double t_max_y = step_j > 0 ? (std::floor(ay) + 1.0 - ay) * delta_y
                       : step_j < 0 ? (ay - std::floor(ay)) * delta_y
                                    : inf;
        const int max_steps = std::abs(end_i - i) + std::abs(end_j - j);
        for (int s = 0; s <= max_steps; ++s) {
            if (!visit(i, j)) return false;
            if (i == end_i && j == end_j) break;
            if (t_max_x < t_max_y) {
                if (t_max_x > 1.0) break;
                t_max_x += delta_x;
                i += step_i;
            } else {
                if (t_max_y > 1.0) break;
                t_max_y += delta_y;
                j += step_j;
            }
        }
        return true;
    }

    // Plain-text PGM (P2) dump, top row = largest y.
    void write_pgm(std::ostream& os) const {
        os << "P2\n# occupancy grid, resolution_m " << resolution_ << " origin_m " << origin_.x
           << ' ' << origin_.y << "\n"
           << width_ << ' ' << height_ << "\n1\n";
        for (int j = height_ - 1; j >= 0; --j) {
            for (int i = 0; i < width_; ++i) {
                os << static_cast<int>(at(i, j)) << (i + 1 < width_ ? ' ' : '\n');
            }
        }
    }

private:
    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(i);
    }

    Vec2 origin_;
    double resolution_ = 1.0;
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> cells_;
};

// Integrates a constant (v, omega) over dt along the exact circular arc.
inline Pose2D step_pose(const Pose2D& p, Twist cmd, double dt) {
    Pose2D out = p;
    const double dtheta = cmd.omega * dt;
    if (std::abs(dtheta) < 1e-9) {
        const double heading = p.theta + 0.5 * dtheta;
        out.x += cmd.v * std::cos(heading) * dt;
        out.y += cmd.v * std::sin(heading) * dt;
    } else {
        const double r = cmd.v / cmd.omega;
        out.x += r * (std::sin(p.theta + dtheta) - std::sin(p.theta));
        out.y -= r * (std::cos(p.theta + dtheta) - std::cos(p.theta));
    }
    out.theta = normalize_angle(p.theta + dtheta);
    return out;
}

inline RobotState step_kinematics(const RobotState& state, Twist cmd, double dt) {
    RobotState out = state;
    out.pose = step_pose(state.pose, cmd, dt);
    out.v = cmd.v;
    out.omega = cmd.omega;
    return out;
}

inline Twist clamp_twist(Twist cmd, double v_max, double omega_max) {
    return {std::clamp(cmd.v, -v_max, v_max), std::clamp(cmd.omega, -omega_max, omega_max)};
}

inline bool is_inside_map(const OccupancyGrid& grid, const Pose2D& pose) {
    return grid.free_at(pose.position());
}

inline Vec2 heading_point(const Pose2D& pose, double distance) {
    return {pose.x + distance * std::cos(pose.theta), pose.y + distance * std::sin(pose.theta)};
}

// True iff every cell under the heading segment of length `lookahead` is free.
inline bool ray_free(const OccupancyGrid& grid, const Pose2D& pose, double lookahead) {
    return grid.traverse(pose.position(), heading_point(pose, lookahead),
                         [&](int i, int j) { return grid.at(i, j) == 1; });
}

// Like ray_free, but tolerates a leading run of occupied cells (the robot's
// own excursion past the boundary). At least one free cell must follow.
inline bool reentry_ray_free(const OccupancyGrid& grid, const Pose2D& pose, double lookahead) {
    bool entered = false;
    const bool clean = grid.traverse(pose.position(), heading_point(pose, lookahead),
                                     [&](int i, int j) {
                                         const bool free = grid.at(i, j) == 1;
                                         if (free) entered = true;
                                         return free || !entered;
                                     });
    return clean && entered;
}

// Distance along `dir` (unit) from `origin` to a circle, or +inf.
inline double ray_circle_distance(Vec2 origin, Vec2 dir, Vec2 center, double radius) {
    const Vec2 oc = origin - center;
    const double b = dot(oc, dir);
    const double c = dot(oc, oc) - radius * radius;
    if (c <= 0.0) return 0.0;
    const double disc = b * b - c;
    if (disc < 0.0) return std::numeric_limits<double>::infinity();
    const double t = -b - std::sqrt(disc);
    return t >= 0.0 ? t : std::numeric_limits<double>::infinity();
}

inline double ray_segment_distance(Vec2 origin, Vec2 dir, Vec2 a, Vec2 b) {
    const Vec2 e = b - a;
    const double denom = cross(dir, e);
    if (std::abs(denom) < 1e-15) return std::numeric_limits<double>::infinity();
    const Vec2 ao = a - origin;
    const double t = cross(ao, e) / denom;
    const double s = cross(ao, dir) / denom;
    if (t < 0.0 || s < 0.0 || s > 1.0) return std::numeric_limits<double>::infinity();
    return t;
}

struct UltrasonicParams {
    double max_range = 3.0;
    double sigma = 0.0;
};

struct WorldParams {
    double robot_radius = 0.2;
    UltrasonicParams ultrasonic;
};

struct World {
    Polygon boundary;
    OccupancyGrid grid;
    std::vector<WorldObject> objects;
    RobotState robot;
    WorldParams params;

    const WorldObject* find(ObjectId id) const {
        for (const auto& o : objects) {
            if (o.id == id) return &o;
        }
        return nullptr;
    }
    WorldObject* find(ObjectId id) {
        for (auto& o : objects) {
            if (o.id == id) return &o;
        }
        return nullptr;
    }
};

inline double noiseless_ultrasonic_range(const World& world, const Pose2D& pose) {
    const Vec2 origin = pose.position();
    const Vec2 dir{std::cos(pose.theta), std::sin(pose.theta)};
    double best = world.params.ultrasonic.max_range;
    for (const auto& o : world.objects) {
        if (o.picked) continue;
        best = std::min(best, ray_circle_distance(origin, dir, o.center, o.footprint_radius));
    }
    const std::size_t n = world.boundary.size();
    for (std::size_t a = 0, b = n - 1; a < n; b = a++) {
        best = std::min(best, ray_segment_distance(origin, dir, world.boundary[b], world.boundary[a]));
    }
    return best;
}

// Range along the heading to the nearest unpicked object or the boundary,
// saturated at max range, with additive Gaussian noise.
inline double ultrasonic_range(const World& world, const Pose2D& pose, Rng& rng) {
    const double clean = noiseless_ultrasonic_range(world, pose);
    const auto& us = world.params.ultrasonic;
    if (us.sigma <= 0.0) return clean;
    return std::clamp(clean + rng.normal(0.0, us.sigma), 0.0, us.max_range);
}

// Advances the robot, refusing any translation that would push its footprint
// into an unpicked object. Rotation is always allowed. Returns the id of the
// object that blocked the move, if any.
inline std::optional<ObjectId> advance_robot(World& world, Twist cmd, double dt) {
    RobotState next = step_kinematics(world.robot, cmd, dt);
    std::optional<ObjectId> blocker;
    for (const auto& o : world.objects) {
        if (o.picked) continue;
        const double contact = world.params.robot_radius + o.footprint_radius;
        const double before = norm(world.robot.pose.position() - o.center);
        const double after = norm(next.pose.position() - o.center);
        if (after < contact && after < before) {
            blocker = o.id;
            break;
        }
    }
    if (blocker) {
        next.pose.x = world.robot.pose.x;
        next.pose.y = world.robot.pose.y;
        next.v = 0.0;
    }
    world.robot = next;
    return blocker;
}

}  // namespace grassbot
