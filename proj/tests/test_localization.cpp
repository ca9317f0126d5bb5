#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "grassbot/localization.hpp"
#include "grassbot/rng.hpp"

using namespace grassbot;

namespace {

bool symmetric_psd(const Eigen::Matrix3d& p) {
    if ((p - p.transpose()).cwiseAbs().maxCoeff() > 1e-12) return false;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(p);
    return es.eigenvalues().minCoeff() >= -1e-12;
}

}  // namespace

TEST(Predict, ZeroMotionZeroNoiseIsIdentity) {
    const EkfState s = EkfState::at({1, 2, 0.3}, 0.2, 0.05);
    const EkfState n = ekf_predict(s, {0, 0}, 0.1, 0.0, 0.0);
    EXPECT_EQ(n.mean, s.mean);
    EXPECT_LT((n.covariance - s.covariance).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Predict, NoiselessStraightMotion) {
    EkfState s = EkfState::at({0, 0, 0});
    for (int i = 0; i < 100; ++i) s = ekf_predict(s, {0.5, 0.0}, 0.1, 0.0, 0.0);
    EXPECT_NEAR(s.mean.x(), 5.0, 1e-12);
    EXPECT_NEAR(s.mean.y(), 0.0, 1e-12);
    EXPECT_NEAR(s.mean.z(), 0.0, 1e-12);
    EXPECT_LT(s.covariance.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Predict, CovarianceMatchesMonteCarlo) {
    const double sv = 0.05, sw = 0.05, dt = 0.1;
    const Twist cmd{0.5, 0.2};
    EkfState s = EkfState::at({0, 0, 0.4}, 0.05, 0.01);
    constexpr int samples = 20000;
    constexpr int steps = 50;
    Rng rng(9);
    std::vector<Pose2D> particles(samples);
    for (auto& p : particles) {
        p = {rng.normal(0.0, 0.05), rng.normal(0.0, 0.05), 0.4 + rng.normal(0.0, 0.01)};
    }
    for (int k = 0; k < steps; ++k) {
        s = ekf_predict(s, cmd, dt, sv, sw);
        for (auto& p : particles) {
            p = step_pose(p, {cmd.v + rng.normal(0.0, sv), cmd.omega + rng.normal(0.0, sw)}, dt);
        }
    }
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& p : particles) mean += Eigen::Vector3d(p.x, p.y, p.theta);
    mean /= samples;
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& p : particles) {
        const Eigen::Vector3d d = Eigen::Vector3d(p.x, p.y, p.theta) - mean;
        cov += d * d.transpose();
    }
    cov /= samples - 1;
    EXPECT_LT((mean - s.mean).norm(), 0.01);
    for (int i = 0; i < 3; ++i) {
        EXPECT_NEAR(s.covariance(i, i), cov(i, i), 0.2 * cov(i, i)) << i;
    }
}

TEST(GpsUpdate, ZeroInnovationShrinksCovariance) {
    const EkfState s = EkfState::at({3, 4, 1.0}, 1.0, 0.1);
    const EkfState u = ekf_update_gps(s, {3, 4}, 0.5);
    EXPECT_LT((u.mean - s.mean).norm(), 1e-15);
    EXPECT_NEAR(u.covariance(0, 0), 1.0 * 0.25 / 1.25, 1e-12);
    EXPECT_NEAR(u.covariance(1, 1), 1.0 * 0.25 / 1.25, 1e-12);
    EXPECT_NEAR(u.covariance(2, 2), 0.01, 1e-15);
    EXPECT_LT(u.covariance.trace(), s.covariance.trace());
}

TEST(GpsUpdate, InfiniteNoiseIsIdentity) {
    const EkfState s = EkfState::at({3, 4, 1.0}, 1.0, 0.1);
    const EkfState u = ekf_update_gps(s, {100, -50}, std::numeric_limits<double>::infinity());
    EXPECT_EQ(u.mean, s.mean);
    EXPECT_EQ(u.covariance, s.covariance);
}

TEST(GpsUpdate, TraceNeverIncreases) {
    Rng rng(4);
    for (int i = 0; i < 1000; ++i) {
        EkfState s = EkfState::at({0, 0, 0}, rng.uniform(0.01, 3.0), rng.uniform(0.01, 1.0));
        for (int k = 0; k < 5; ++k) s = ekf_predict(s, {0.5, rng.uniform(-1, 1)}, 0.1, 0.05, 0.05);
        const EkfState u = ekf_update_gps(s, {rng.normal(), rng.normal()}, rng.uniform(0.05, 5.0));
        ASSERT_LE(u.covariance.trace(), s.covariance.trace() + 1e-12);
        ASSERT_TRUE(symmetric_psd(u.covariance));
    }
}

TEST(Ekf, LongRunStaysSymmetricPsd) {
    Rng rng(17);
    EkfState s = EkfState::at({0, 0, 0}, 0.1, 0.02);
    for (int k = 0; k < 100000; ++k) {
        s = ekf_predict(s, {rng.uniform(0, 0.5), rng.uniform(-1, 1)}, 0.1, 0.05, 0.05);
        if (k % 10 == 0) s = ekf_update_gps(s, {s.mean.x() + rng.normal(0, 0.5), s.mean.y()}, 0.5);
        if (k % 1000 == 0) { ASSERT_TRUE(symmetric_psd(s.covariance)) << k; }
    }
    EXPECT_TRUE(symmetric_psd(s.covariance));
    EXPECT_TRUE(s.covariance.allFinite());
}

TEST(Localizer, GpsOutageWindows) {
    SensorNoise n;
    n.gps_outages = {{10, 20}, {50, 51}};
    EXPECT_TRUE(n.gps_available(9.99));
    EXPECT_FALSE(n.gps_available(10.0));
    EXPECT_FALSE(n.gps_available(19.99));
    EXPECT_TRUE(n.gps_available(20.0));
    EXPECT_FALSE(n.gps_available(50.5));
}

TEST(Localizer, BeatsDeadReckoning) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Pose2D truth{10, 10, 0};
        Localizer loc(truth, SensorNoise{}, make_stream(seed, Stream::odometry),
                      make_stream(seed, Stream::gps));
        Rng drive(seed);
        double se_ekf = 0.0, se_dr = 0.0;
        int n = 0;
        const double dt = 0.1;
        Twist cmd{0.4, 0.0};
        for (int k = 1; k <= 6000; ++k) {
            if (k % 50 == 0) cmd.omega = drive.uniform(-0.5, 0.5);
            truth = step_pose(truth, cmd, dt);
            loc.step(cmd, dt, k * dt, truth);
            se_ekf += std::pow(loc.estimate().x - truth.x, 2) + std::pow(loc.estimate().y - truth.y, 2);
            se_dr += std::pow(loc.dead_reckoning().x - truth.x, 2) +
                     std::pow(loc.dead_reckoning().y - truth.y, 2);
            ++n;
        }
        const double rmse_ekf = std::sqrt(se_ekf / n);
        const double rmse_dr = std::sqrt(se_dr / n);
        EXPECT_LT(rmse_ekf, rmse_dr) << seed;
        EXPECT_LT(rmse_ekf, 1.5 * SensorNoise{}.gps_sigma) << seed;
    }
}
