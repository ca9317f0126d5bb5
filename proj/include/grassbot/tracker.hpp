#pragma once

#include <cassert>
#include <cstdlib>
#include <optional>

#include "grassbot/camera.hpp"
#include "grassbot/perception.hpp"

namespace grassbot {

struct PixelOffset {
    int du = 0;
    int dv = 0;
    friend bool operator==(const PixelOffset&, const PixelOffset&) = default;
};

struct TrackerCommand {
    double v = 0.0;
    double omega = 0.0;
    bool arrived = false;
};

struct ServoLimits {
    double v_max = 0.5;
    double omega_max = 1.0;
    int dv_deadband = 10;
    int du_deadband = 5;
};

// du from the box center, dv from the box bottom edge.
inline PixelOffset compute_offsets(const ObjectBox& box, const CameraModel& cam) {
    const PixelPoint center = locate_garbage(box);
    const PixelOffset off{cam.u_target() - center.u, cam.v_target() - box.v_br};
    assert(off.dv >= 0);
    return off;
}

inline TrackerCommand tracking_command(PixelOffset off, const ServoLimits& limits,
                                       const CameraModel& cam) {
    TrackerCommand cmd;
    const bool move = std::abs(off.dv) > limits.dv_deadband;
    const bool turn = std::abs(off.du) > limits.du_deadband;
    if (move) cmd.v = static_cast<double>(off.dv) / cam.height * limits.v_max;
    if (turn) cmd.omega = static_cast<double>(off.du) / (cam.width / 2.0) * limits.omega_max;
    cmd.arrived = !move && !turn;
    return cmd;
}

enum class TrackStatus { tracking, arrived, lost };

struct TrackResult {
    TrackerCommand command;
    TrackStatus status = TrackStatus::tracking;
    std::optional<ObjectId> target;
};

// Closed-loop approach toward one object across frames. The tracked id is
// kept while visible; when it drops out, tracking switches to the closest
// remaining box, and with nothing to follow the robot holds still until
// `max_missed_frames` consecutive empty frames abort the approach.
class ObjectTracker {
public:
    explicit ObjectTracker(ServoLimits limits = {}, int max_missed_frames = 10)
        : limits_(limits), max_missed_(max_missed_frames) {}

    void start(ObjectId id) {
        target_ = id;
        missed_ = 0;
    }
    void reset() {
        target_.reset();
        missed_ = 0;
    }
    std::optional<ObjectId> target() const { return target_; }
    int missed_frames() const { return missed_; }
    const ServoLimits& limits() const { return limits_; }

    // `boxes` should already exclude objects the caller no longer pursues.
    TrackResult step(std::span<const ObjectBox> boxes, const CameraModel& cam) {
        TrackResult out;
        std::optional<ObjectBox> box;
        if (target_) {
            for (const auto& b : boxes) {
                if (b.object_id == *target_) box = b;
            }
        }
        if (!box) {
            box = select_closest_object(boxes, cam);
            if (box) target_ = box->object_id;
        }
        if (!box) {
            ++missed_;
            out.target = target_;
            if (missed_ > max_missed_) {
                out.status = TrackStatus::lost;
                reset();
            }
            return out;
        }
        missed_ = 0;
        out.target = target_;
        out.command = tracking_command(compute_offsets(*box, cam), limits_, cam);
        out.status = out.command.arrived ? TrackStatus::arrived : TrackStatus::tracking;
        return out;
    }

private:
    ServoLimits limits_;
    int max_missed_;
    std::optional<ObjectId> target_;
    int missed_ = 0;
};

}  // namespace grassbot
