#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "grassbot/rng.hpp"
#include "grassbot/world.hpp"

namespace grassbot {

struct EkfState {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();  // x, y, theta
    Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();

    Pose2D pose() const { return {mean.x(), mean.y(), mean.z()}; }

    static EkfState at(const Pose2D& p, double sigma_xy = 0.0, double sigma_theta = 0.0) {
        EkfState s;
        s.mean = {p.x, p.y, p.theta};
        s.covariance.diagonal() << sigma_xy * sigma_xy, sigma_xy * sigma_xy,
            sigma_theta * sigma_theta;
        return s;
    }
};

struct TimeWindow {
    double start = 0.0;
    double end = 0.0;
};

struct SensorNoise {
    double odom_sigma_v = 0.05;      // m/s, per control step
    double odom_sigma_omega = 0.05;  // rad/s, per control step
    double gps_sigma = 0.5;          // m
    double gps_period = 1.0;         // s
    std::vector<TimeWindow> gps_outages;

    bool gps_available(double t) const {
        for (const auto& w : gps_outages) {
            if (t >= w.start && t < w.end) return false;
        }
        return true;
    }
};

// Unicycle propagation of the mean with the motion Jacobian for the
// covariance; odometry noise enters through the control Jacobian.
inline EkfState ekf_predict(const EkfState& state, Twist odom, double dt, double sigma_v,
                            double sigma_omega) {
    const Pose2D prev = state.pose();
    const Pose2D next = step_pose(prev, odom, dt);

    Eigen::Matrix3d f = Eigen::Matrix3d::Identity();
    f(0, 2) = -(next.y - prev.y);
    f(1, 2) = next.x - prev.x;

    const double mid = prev.theta + 0.5 * odom.omega * dt;
    Eigen::Matrix<double, 3, 2> g;
    g << std::cos(mid) * dt, -0.5 * odom.v * dt * dt * std::sin(mid),  //
        std::sin(mid) * dt, 0.5 * odom.v * dt * dt * std::cos(mid),    //
        0.0, dt;
    Eigen::Matrix2d q = Eigen::Matrix2d::Zero();
    q(0, 0) = sigma_v * sigma_v;
    q(1, 1) = sigma_omega * sigma_omega;

    EkfState out;
    out.mean = {next.x, next.y, next.theta};
    out.covariance = f * state.covariance * f.transpose() + g * q * g.transpose();
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
    return out;
}

// Position-only fix with isotropic noise. Joseph form keeps the covariance
// symmetric positive semi-definite.
inline EkfState ekf_update_gps(const EkfState& state, Vec2 fix, double sigma_gps) {
    if (!std::isfinite(sigma_gps)) return state;
    Eigen::Matrix<double, 2, 3> h = Eigen::Matrix<double, 2, 3>::Zero();
    h(0, 0) = 1.0;
    h(1, 1) = 1.0;
    const Eigen::Matrix2d r = Eigen::Matrix2d::Identity() * sigma_gps * sigma_gps;
    const Eigen::Matrix2d s = h * state.covariance * h.transpose() + r;
    const Eigen::Matrix<double, 3, 2> k = state.covariance * h.transpose() * s.inverse();
    const Eigen::Vector2d innovation(fix.x - state.mean.x(), fix.y - state.mean.y());

    EkfState out;
    out.mean = state.mean + k * innovation;
    out.mean.z() = normalize_angle(out.mean.z());
    const Eigen::Matrix3d i_kh = Eigen::Matrix3d::Identity() - k * h;
    out.covariance = i_kh * state.covariance * i_kh.transpose() + k * r * k.transpose();
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
    return out;
}

// Simulated sensors plus the filter, stepped by the episode loop. A parallel
// dead-reckoning estimate consumes the same odometry for comparison.
class Localizer {
public:
    Localizer(const Pose2D& start, SensorNoise noise, Rng odom_rng, Rng gps_rng)
        : noise_(std::move(noise)),
          ekf_(EkfState::at(start, 0.1, 0.02)),
          dead_reckoning_(start),
          odom_rng_(std::move(odom_rng)),
          gps_rng_(std::move(gps_rng)) {}

    // `executed` is the motion the robot actually made over the last dt.
    void step(Twist executed, double dt, double t, const Pose2D& truth) {
        const Twist odom{executed.v + odom_rng_.normal(0.0, noise_.odom_sigma_v),
                         executed.omega + odom_rng_.normal(0.0, noise_.odom_sigma_omega)};
        ekf_ = ekf_predict(ekf_, odom, dt, noise_.odom_sigma_v, noise_.odom_sigma_omega);
        dead_reckoning_ = step_pose(dead_reckoning_, odom, dt);
        if (t + 1e-9 >= next_fix_) {
            next_fix_ += noise_.gps_period;
            if (noise_.gps_available(t)) {
                const Vec2 fix{truth.x + gps_rng_.normal(0.0, noise_.gps_sigma),
                               truth.y + gps_rng_.normal(0.0, noise_.gps_sigma)};
                ekf_ = ekf_update_gps(ekf_, fix, noise_.gps_sigma);
            }
        }
    }

    Pose2D estimate() const { return ekf_.pose(); }
    const EkfState& filter() const { return ekf_; }
    const Pose2D& dead_reckoning() const { return dead_reckoning_; }

private:
    SensorNoise noise_;
    EkfState ekf_;
    Pose2D dead_reckoning_;
    Rng odom_rng_;
    Rng gps_rng_;
    double next_fix_ = 0.0;
};

}  // namespace grassbot
