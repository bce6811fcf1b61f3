#pragma once

#include <random>

#include "rowswitch/geometry.hpp"

namespace rowswitch {

struct Pose2D {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;  // wrapped to (-pi, pi]

    Vec2 position() const { return {x, y}; }
    Vec2 heading() const { return {std::cos(theta), std::sin(theta)}; }
};

struct Twist {
    double v = 0.0;      // m/s forward
    double omega = 0.0;  // rad/s
};

// Hexman Mark-1 footprint: 526 x 507 mm, GNSS antenna 45 cm behind the front
// edge, camera at the front edge.
struct RobotSpec {
    double length = 0.526;
    double width = 0.507;
    double gnss_offset = 0.45;  // behind the front edge

    Vec2 front_of(const Pose2D &p) const {
        return p.position() + p.heading() * (length * 0.5);
    }
    Vec2 antenna_of(const Pose2D &p) const {
        return p.position() + p.heading() * (length * 0.5 - gnss_offset);
    }
};

struct OdometryModel {
    // Per-run multiplicative scale noise: estimated distance over L metres has
    // standard deviation trans_std_per_m * L (and likewise for rotation).
    double trans_std_per_m = 0.0;
    double rot_std_per_rad = 0.0;
    // Bias of the rotation/translation scale factors (calibration knobs).
    double trans_bias = 0.0;
    double rot_bias = 0.0;
    // Translational drift during commanded rotation, unseen by the odometry:
    // per-axis std = rot_drift_gain * |omega| * dt * roughness.
    double rot_drift_gain = 0.0;
    // Systematic slip per radian of rotation, body frame; the lateral part is
    // mirrored with the turn direction (positive = toward the turn side).
    double drift_mean_forward = 0.0;
    double drift_mean_lateral = 0.0;
};

// Exact unicycle integration of a constant twist over dt.
Pose2D unicycle_step(const Pose2D &pose, const Twist &cmd, double dt);

// True motion: unicycle step plus terrain-coupled slip while rotating.
// turn_sign orients the systematic lateral slip (+1 left turn, -1 right).
Pose2D step_true(const Pose2D &pose, const Twist &cmd, double dt, double roughness,
                 const OdometryModel &model, std::mt19937_64 &rng, int turn_sign = 1);

// Wheel-odometry pose estimator. Scale factors are drawn once per instance,
// so the estimated distance error grows linearly with distance travelled.
class OdometryEstimator {
  public:
    OdometryEstimator(const OdometryModel &model, const Pose2D &start, std::mt19937_64 &rng);

    void step(const Twist &cmd, double dt);
    const Pose2D &pose() const { return est_; }
    void reset_to(const Pose2D &p) { est_ = p; }
    // Extra rotation-scale bias for the current manoeuvre segment.
    void set_segment_rot_bias(double b) { segment_rot_bias_ = b; }

  private:
    Pose2D est_;
    double trans_scale_ = 1.0;
    double rot_scale_ = 1.0;
    double segment_rot_bias_ = 0.0;
};

}  // namespace rowswitch
