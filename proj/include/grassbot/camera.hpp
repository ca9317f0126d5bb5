#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "grassbot/geometry.hpp"

namespace grassbot {

class GeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Ground frame of the robot: x forward, y left, z up, angles counter-clockwise.
// Image frame: u right, v down, pixel centers at integer coordinates.
struct CameraModel {
    int width = 640;
    int height = 480;
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    double mount_height = 0.4;
    double mount_forward = 0.0;  // offset of the optical center ahead of the robot reference point
    double tilt = 0.0;           // below horizontal
    double hfov = kPi / 3.0;
    double max_range = 10.0;

    // Bottom-center target pixel of the visual servo.
    int u_target() const { return width / 2 - 1; }
    int v_target() const { return height - 1; }

    // Tilt at which the top image row meets the ground at `range`.
    static double tilt_for_range(double mount_height, double range, double fy, double cy) {
        return std::atan2(mount_height, range) + std::atan2(cy + 0.5, fy);
    }

    static CameraModel standard(int width = 640, int height = 480, double hfov = kPi / 3.0,
                                double mount_height = 0.4, double max_range = 10.0) {
        CameraModel cam;
        cam.width = width;
        cam.height = height;
        cam.hfov = hfov;
        cam.fx = 0.5 * width / std::tan(0.5 * hfov);
        cam.fy = cam.fx;
        cam.cx = 0.5 * (width - 1);
        cam.cy = 0.5 * (height - 1);
        cam.mount_height = mount_height;
        cam.max_range = max_range;
        cam.tilt = tilt_for_range(mount_height, max_range, cam.fy, cam.cy);
        return cam;
    }

    void validate() const {
        if (width <= 1 || height <= 1) throw GeometryError("camera image size must exceed 1 px");
        if (!(fx > 0.0) || !(fy > 0.0)) throw GeometryError("camera focal lengths must be positive");
        if (!(mount_height > 0.0)) throw GeometryError("camera mount height must be positive");
        if (!(tilt > 1e-6) || !(tilt < 0.5 * kPi)) {
            throw GeometryError("camera tilt must lie strictly between 0 and pi/2");
        }
        const double implied = 2.0 * std::atan(0.5 * width / fx);
        if (std::abs(implied - hfov) > 1e-6) {
            throw GeometryError("camera horizontal FOV is inconsistent with fx and width");
        }
        if (!(max_range > 0.0)) throw GeometryError("camera range must be positive");
    }

    // World-to-camera rotation; rows are the camera axes expressed in the robot frame.
    Eigen::Matrix3d rotation() const {
        const double c = std::cos(tilt);
        const double s = std::sin(tilt);
        Eigen::Matrix3d r;
        r << 0.0, -1.0, 0.0,  //
            -s, 0.0, -c,      //
            c, 0.0, -s;
        return r;
    }

    Eigen::Vector3d optical_center() const { return {mount_forward, 0.0, mount_height}; }

    Eigen::Matrix3d intrinsics() const {
        Eigen::Matrix3d k;
        k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
        return k;
    }

    // Pinhole projection of an arbitrary 3D point in the robot frame.
    std::optional<Vec2> project_point(const Eigen::Vector3d& p) const {
        const Eigen::Vector3d pc = rotation() * (p - optical_center());
        if (pc.z() <= 1e-9) return std::nullopt;
        return Vec2{cx + fx * pc.x() / pc.z(), cy + fy * pc.y() / pc.z()};
    }
};

struct GroundHomography {
    Eigen::Matrix3d H;      // ground (x, y, 1) -> pixel (u, v, 1)
    Eigen::Matrix3d H_inv;  // pixel -> ground

    std::optional<Vec2> project(Vec2 ground) const {
        const Eigen::Vector3d q = H * Eigen::Vector3d(ground.x, ground.y, 1.0);
        if (q.z() <= 1e-12) return std::nullopt;
        return Vec2{q.x() / q.z(), q.y() / q.z()};
    }

    // Fails for pixels at or above the horizon.
    std::optional<Vec2> backproject(Vec2 pixel) const {
        const Eigen::Vector3d q = H_inv * Eigen::Vector3d(pixel.x, pixel.y, 1.0);
        if (q.z() <= 1e-12) return std::nullopt;
        return Vec2{q.x() / q.z(), q.y() / q.z()};
    }
};

inline GroundHomography build_homography(const CameraModel& cam) {
    cam.validate();
    const Eigen::Matrix3d r = cam.rotation();
    const Eigen::Vector3d t = -r * cam.optical_center();
    Eigen::Matrix3d rt;
    rt.col(0) = r.col(0);
    rt.col(1) = r.col(1);
    rt.col(2) = t;
    GroundHomography hom;
    hom.H = cam.intrinsics() * rt;
    const double det = hom.H.determinant();
    if (!std::isfinite(det) || std::abs(det) < 1e-12) {
        throw GeometryError("degenerate homography: camera plane parallel to ground");
    }
    hom.H_inv = hom.H.inverse();
    const double err = (hom.H * hom.H_inv - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    if (err > 1e-9) throw GeometryError("homography inverse failed verification");
    return hom;
}

// u cos(theta) + v sin(theta) = rho, theta in [0, pi).
struct PolarLine {
    double rho = 0.0;
    double theta = 0.0;
};

struct HoughParams {
    int theta_bins = 180;
    double rho_step = 2.0;
};

// Standard accumulator fit. The winning bin's center is returned; ties go to
// the smallest theta, then the smallest rho. `weights` (if non-empty) must
// match `points` and holds each point's vote.
inline PolarLine hough_line(std::span<const Vec2> points, std::span<const double> weights = {},
                            const HoughParams& params = {}) {
    if (!weights.empty() && weights.size() != points.size()) {
        throw GeometryError("hough weights do not match points");
    }
    std::vector<Vec2> distinct(points.begin(), points.end());
    std::sort(distinct.begin(), distinct.end(),
              [](Vec2 a, Vec2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 2) throw GeometryError("insufficient points");

    const double theta_step = kPi / params.theta_bins;
    std::vector<long> bins(points.size());
    std::vector<double> acc;
    double best_votes = -1.0;
    long best_bin = 0;
    int best_theta = 0;
    for (int k = 0; k < params.theta_bins; ++k) {
        const double th = k * theta_step;
        const double c = std::cos(th);
        const double s = std::sin(th);
        long lo = 0;
        long hi = 0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const double rho = points[i].x * c + points[i].y * s;
            bins[i] = static_cast<long>(std::floor(rho / params.rho_step));
            if (i == 0 || bins[i] < lo) lo = bins[i];
            if (i == 0 || bins[i] > hi) hi = bins[i];
        }
        acc.assign(static_cast<std::size_t>(hi - lo + 1), 0.0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            acc[static_cast<std::size_t>(bins[i] - lo)] += weights.empty() ? 1.0 : weights[i];
        }
        for (std::size_t b = 0; b < acc.size(); ++b) {
            if (acc[b] > best_votes) {
                best_votes = acc[b];
                best_bin = lo + static_cast<long>(b);
                best_theta = k;
            }
        }
    }
    return {(static_cast<double>(best_bin) + 0.5) * params.rho_step, best_theta * theta_step};
}

// Column at which a line crosses image row v; nullopt for near-horizontal lines.
inline std::optional<double> line_column_at_row(const PolarLine& line, double v) {
    const double c = std::cos(line.theta);
    if (std::abs(c) < 1e-9) return std::nullopt;
    return (line.rho - v * std::sin(line.theta)) / c;
}

// Heading (robot frame, radians, CCW) of the ground direction that an image
// line traces, taken from its near point on the bottom row toward its far
// point on the middle row.
inline double image_line_to_ground_heading(const PolarLine& line, const GroundHomography& hom,
                                           const CameraModel& cam) {
    const double v_near = cam.height - 1;
    const double v_far = cam.height / 2;
    const auto u_near = line_column_at_row(line, v_near);
    const auto u_far = line_column_at_row(line, v_far);
    auto within = [&](const std::optional<double>& u) {
        return u && *u >= 0.0 && *u <= cam.width - 1;
    };
    if (!within(u_near) || !within(u_far)) throw GeometryError("no forward direction");
    const auto a = hom.backproject({*u_near, v_near});
    const auto b = hom.backproject({*u_far, v_far});
    if (!a || !b) throw GeometryError("no forward direction");
    return std::atan2(b->y - a->y, b->x - a->x);
}

}  // namespace grassbot
