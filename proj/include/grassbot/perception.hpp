#pragma once

#include <array>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "grassbot/camera.hpp"
#include "grassbot/geometry.hpp"
#include "grassbot/rng.hpp"
#include "grassbot/world.hpp"

namespace grassbot {

struct ObjectBox {
    ObjectId object_id = 0;
    int u_tl = 0;
    int v_tl = 0;
    int u_br = 0;
    int v_br = 0;

    friend bool operator==(const ObjectBox&, const ObjectBox&) = default;
};

struct PixelPoint {
    int u = 0;
    int v = 0;
    friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

struct SegmentationFrame {
    Polygon ground_contour;  // image pixels; empty when no ground is visible
    std::vector<ObjectBox> object_boxes;
};

// Object center in pixels, by integer division.
inline PixelPoint locate_garbage(const ObjectBox& box) {
    return {(box.u_tl + box.u_br) / 2, (box.v_tl + box.v_br) / 2};
}

namespace detail {

inline Polygon range_disk(Vec2 center, double radius, int segments = 64) {
    Polygon disk;
    disk.reserve(static_cast<std::size_t>(segments));
    for (int k = 0; k < segments; ++k) {
        const double a = 2.0 * kPi * k / segments;
        disk.push_back({center.x + radius * std::cos(a), center.y + radius * std::sin(a)});
    }
    return disk;
}

inline Vec2 to_robot_frame(const Pose2D& pose, Vec2 p) {
    const double c = std::cos(pose.theta);
    const double s = std::sin(pose.theta);
    const Vec2 d = p - pose.position();
    return {c * d.x + s * d.y, -s * d.x + c * d.y};
}

}  // namespace detail

// Ground region visible to the camera, in the robot frame: the image
// footprint on the ground intersected with the perception range disk.
inline Polygon visible_ground_region(const CameraModel& cam, const GroundHomography& hom) {
    const double umax = cam.width - 1;
    const double vmax = cam.height - 1;
    Polygon footprint;
    for (Vec2 corner : {Vec2{0.0, 0.0}, Vec2{umax, 0.0}, Vec2{umax, vmax}, Vec2{0.0, vmax}}) {
        const auto g = hom.backproject(corner);
        if (!g) throw GeometryError("image corner above the horizon; lower the camera tilt range");
        footprint.push_back(*g);
    }
    footprint = make_ccw(std::move(footprint));
    return clip_polygon(footprint, detail::range_disk({cam.mount_forward, 0.0}, cam.max_range));
}

// Axis-aligned box of a standing cylinder's silhouette, unclipped.
inline std::optional<std::array<double, 4>> cylinder_silhouette(const CameraModel& cam,
                                                                Vec2 center_robot, double radius,
                                                                double height) {
    constexpr int kSamples = 48;
    double u0 = 1e300, v0 = 1e300, u1 = -1e300, v1 = -1e300;
    bool any = false;
    for (int k = 0; k < kSamples; ++k) {
        const double a = 2.0 * kPi * k / kSamples;
        const double x = center_robot.x + radius * std::cos(a);
        const double y = center_robot.y + radius * std::sin(a);
        for (double z : {0.0, height}) {
            const auto px = cam.project_point({x, y, z});
            if (!px) continue;
            any = true;
            u0 = std::min(u0, px->x);
            u1 = std::max(u1, px->x);
            v0 = std::min(v0, px->y);
            v1 = std::max(v1, px->y);
        }
    }
    if (!any) return std::nullopt;
    return std::array<double, 4>{u0, v0, u1, v1};
}

// Geometry-driven stand-in for the segmentation network.
inline SegmentationFrame render_segmentation(const World& world, const Pose2D& robot_pose,
                                             const CameraModel& cam,
                                             const GroundHomography& hom) {
    SegmentationFrame frame;
    if (!is_inside_map(world.grid, robot_pose)) return frame;

    Polygon local_boundary;
    local_boundary.reserve(world.boundary.size());
    for (Vec2 p : world.boundary) local_boundary.push_back(detail::to_robot_frame(robot_pose, p));
    const Polygon ground = clip_polygon(local_boundary, visible_ground_region(cam, hom));
    if (ground.size() < 3) return frame;

    Polygon image;
    image.reserve(ground.size());
    for (Vec2 g : ground) {
        if (const auto px = hom.project(g)) image.push_back(*px);
    }
    const double umax = cam.width - 1;
    const double vmax = cam.height - 1;
    const Polygon rect =
        make_ccw({{0.0, 0.0}, {umax, 0.0}, {umax, vmax}, {0.0, vmax}});
    frame.ground_contour = clip_polygon(image, rect);
    if (frame.ground_contour.size() < 3) {
        frame.ground_contour.clear();
        return frame;
    }

    double cu0 = umax, cv0 = vmax, cu1 = 0.0, cv1 = 0.0;
    for (Vec2 p : frame.ground_contour) {
        cu0 = std::min(cu0, p.x);
        cu1 = std::max(cu1, p.x);
        cv0 = std::min(cv0, p.y);
        cv1 = std::max(cv1, p.y);
    }
    const int bu0 = static_cast<int>(std::floor(cu0));
    const int bu1 = static_cast<int>(std::ceil(cu1));
    const int bv0 = static_cast<int>(std::floor(cv0));
    const int bv1 = static_cast<int>(std::ceil(cv1));

    const Vec2 optical{cam.mount_forward, 0.0};
    for (const auto& obj : world.objects) {
        if (obj.picked) continue;
        const Vec2 local = detail::to_robot_frame(robot_pose, obj.center);
        const Vec2 rel = local - optical;
        if (norm(rel) > cam.max_range) continue;
        if (std::abs(std::atan2(rel.y, rel.x)) > 0.5 * cam.hfov) continue;
        const auto sil = cylinder_silhouette(cam, local, obj.footprint_radius, obj.height);
        if (!sil) continue;
        const auto& [su0, sv0, su1, sv1] = *sil;
        ObjectBox box;
        box.object_id = obj.id;
        box.u_tl = std::max({0, bu0, static_cast<int>(std::lround(su0))});
        box.v_tl = std::max({0, bv0, static_cast<int>(std::lround(sv0))});
        box.u_br = std::min({cam.width - 1, bu1, static_cast<int>(std::lround(su1))});
        box.v_br = std::min({cam.height - 1, bv1, static_cast<int>(std::lround(sv1))});
        if (box.u_tl > box.u_br || box.v_tl > box.v_br) continue;
        frame.object_boxes.push_back(box);
    }
    return frame;
}

// Nearest box on the ground plane: the largest bottom row wins, then the
// smallest horizontal offset from the servo target column.
inline std::optional<ObjectBox> select_closest_object(std::span<const ObjectBox> boxes,
                                                      const CameraModel& cam) {
    std::optional<ObjectBox> best;
    for (const auto& b : boxes) {
        if (!best) {
            best = b;
            continue;
        }
        const int off = std::abs(locate_garbage(b).u - cam.u_target());
        const int best_off = std::abs(locate_garbage(*best).u - cam.u_target());
        if (b.v_br > best->v_br || (b.v_br == best->v_br && off < best_off)) best = b;
    }
    return best;
}

inline std::optional<ObjectBox> select_closest_object(const SegmentationFrame& frame,
                                                      const CameraModel& cam) {
    return select_closest_object(frame.object_boxes, cam);
}

// ---------------------------------------------------------------------------
// Classifier stub

enum class PredictedClass : std::uint8_t {
    bottle,
    can,
    carton,
    plastic_bag,
    waste_paper,
    non_garbage,
};

inline constexpr std::size_t kPredictedClassCount = 6;

inline std::string_view to_string(PredictedClass c) {
    static constexpr std::array<std::string_view, kPredictedClassCount> names = {
        "bottle", "can", "carton", "plastic_bag", "waste_paper", "non_garbage"};
    return names[static_cast<std::size_t>(c)];
}

struct Classification {
    PredictedClass predicted = PredictedClass::non_garbage;
    double confidence = 0.0;
    bool is_garbage = false;
};

class ClassifierError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using ConfusionRow = std::array<double, kPredictedClassCount>;

struct ConfusionModel {
    // Rows: true garbage class (bottle..waste_paper).
    std::array<ConfusionRow, kGarbageClassCount> garbage_matrix{};
    // Rows: true non-garbage class (cup..wallet).
    std::array<ConfusionRow, kObjectClassCount - kGarbageClassCount> nongarbage_matrix{};
    double threshold = 0.5;
    double match_conf_lo = 0.6;
    double match_conf_hi = 1.0;
    double mismatch_conf_lo = 0.3;
    double mismatch_conf_hi = 0.9;

    // Per-class top-1 error of the garbage recognizer, percent.
    static constexpr std::array<double, kGarbageClassCount> kGarbageErrorPercent = {
        8.13, 9.89, 9.06, 14.32, 22.3};

    // Non-garbage objects mistaken for each garbage class.
    static constexpr std::array<std::array<double, kGarbageClassCount>, 6> kNonGarbageConfusion = {{
        {0.153, 0.184, 0.012, 0.009, 0.003},  // cup
        {0.002, 0.010, 0.136, 0.005, 0.012},  // book
        {0.005, 0.023, 0.038, 0.009, 0.003},  // shoes
        {0.007, 0.011, 0.065, 0.004, 0.008},  // phone
        {0.007, 0.013, 0.009, 0.032, 0.004},  // bag
        {0.010, 0.023, 0.089, 0.012, 0.009},  // wallet
    }};

    // Garbage error mass is spread evenly over the five other outputs;
    // non-garbage rows put their residual mass on "non-garbage".
    static ConfusionModel from_tables() {
        ConfusionModel m;
        for (std::size_t r = 0; r < kGarbageClassCount; ++r) {
            const double err = kGarbageErrorPercent[r] / 100.0;
            for (std::size_t c = 0; c < kPredictedClassCount; ++c) {
                m.garbage_matrix[r][c] = (c == r) ? 1.0 - err : err / 5.0;
            }
        }
        for (std::size_t r = 0; r < m.nongarbage_matrix.size(); ++r) {
            double sum = 0.0;
            for (std::size_t c = 0; c < kGarbageClassCount; ++c) {
                m.nongarbage_matrix[r][c] = kNonGarbageConfusion[r][c];
                sum += kNonGarbageConfusion[r][c];
            }
            m.nongarbage_matrix[r][kGarbageClassCount] = 1.0 - sum;
        }
        return m;
    }

    static ConfusionModel identity() {
        ConfusionModel m;
        for (std::size_t r = 0; r < kGarbageClassCount; ++r) m.garbage_matrix[r][r] = 1.0;
        for (auto& row : m.nongarbage_matrix) row[kGarbageClassCount] = 1.0;
        return m;
    }

    const ConfusionRow& row(ObjectClass c) const {
        const auto i = static_cast<std::size_t>(c);
        if (i < kGarbageClassCount) return garbage_matrix[i];
        if (i < kObjectClassCount) return nongarbage_matrix[i - kGarbageClassCount];
        throw ClassifierError("unknown object class");
    }

    void validate() const {
        auto check = [](const ConfusionRow& row, std::string_view what) {
            double sum = 0.0;
            for (double p : row) {
                if (!(p >= 0.0)) throw ClassifierError(std::string(what) + ": negative probability");
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-9) {
                throw ClassifierError(std::string(what) + ": row does not sum to 1");
            }
        };
        for (std::size_t i = 0; i < kObjectClassCount; ++i) {
            check(row(static_cast<ObjectClass>(i)),
                  kObjectClassNames[i]);
        }
        if (!(threshold >= 0.0 && threshold <= 1.0)) {
            throw ClassifierError("threshold must lie in [0, 1]");
        }
        if (!(match_conf_lo <= match_conf_hi) || !(mismatch_conf_lo <= mismatch_conf_hi) ||
            match_conf_lo < 0.0 || match_conf_hi > 1.0 || mismatch_conf_lo < 0.0 ||
            mismatch_conf_hi > 1.0) {
            throw ClassifierError("confidence bands must be ordered sub-intervals of [0, 1]");
        }
    }
};

inline Classification classify(const ConfusionModel& model, ObjectClass true_class, Rng& rng) {
    const auto& row = model.row(true_class);
    const auto predicted = static_cast<PredictedClass>(rng.categorical(row));
    const bool correct =
        is_garbage_class(true_class)
            ? static_cast<std::size_t>(predicted) == static_cast<std::size_t>(true_class)
            : predicted == PredictedClass::non_garbage;
    Classification out;
    out.predicted = predicted;
    out.confidence = correct ? rng.uniform(model.match_conf_lo, model.match_conf_hi)
                             : rng.uniform(model.mismatch_conf_lo, model.mismatch_conf_hi);
    out.is_garbage = predicted != PredictedClass::non_garbage && out.confidence >= model.threshold;
    return out;
}

}  // namespace grassbot
