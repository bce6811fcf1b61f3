#include "rowswitch/robot_model.hpp"

#include <cmath>

namespace rowswitch {

Pose2D unicycle_step(const Pose2D &pose, const Twist &cmd, double dt) {
    Pose2D next = pose;
    if (std::abs(cmd.omega) < 1e-12) {
        next.x += cmd.v * dt * std::cos(pose.theta);
        next.y += cmd.v * dt * std::sin(pose.theta);
        next.theta = wrap_angle(pose.theta + cmd.omega * dt);
    } else {
        double r = cmd.v / cmd.omega;
        double t1 = pose.theta + cmd.omega * dt;
        next.x += r * (std::sin(t1) - std::sin(pose.theta));
        next.y -= r * (std::cos(t1) - std::cos(pose.theta));
        next.theta = wrap_angle(t1);
    }
    return next;
}

Pose2D step_true(const Pose2D &pose, const Twist &cmd, double dt, double roughness,
                 const OdometryModel &model, std::mt19937_64 &rng, int turn_sign) {
    Pose2D next = unicycle_step(pose, cmd, dt);
    double rot = std::abs(cmd.omega) * dt;
    if (rot > 0.0 && roughness > 0.0 &&
        (model.rot_drift_gain > 0.0 || model.drift_mean_forward != 0.0 ||
         model.drift_mean_lateral != 0.0)) {
        double sigma = model.rot_drift_gain * rot * roughness;
        std::normal_distribution<double> n(0.0, 1.0);
        Vec2 body{model.drift_mean_forward * rot * roughness + sigma * n(rng),
                  model.drift_mean_lateral * rot * roughness * turn_sign + sigma * n(rng)};
        Vec2 world = body.rotated(pose.theta);
        next.x += world.x;
        next.y += world.y;
    }
    return next;
}

OdometryEstimator::OdometryEstimator(const OdometryModel &model, const Pose2D &start,
                                     std::mt19937_64 &rng)
    : est_(start) {
    std::normal_distribution<double> n(0.0, 1.0);
    trans_scale_ = 1.0 + model.trans_bias +
                   (model.trans_std_per_m > 0.0 ? model.trans_std_per_m * n(rng) : 0.0);
    rot_scale_ = 1.0 + model.rot_bias +
                 (model.rot_std_per_rad > 0.0 ? model.rot_std_per_rad * n(rng) : 0.0);
}

void OdometryEstimator::step(const Twist &cmd, double dt) {
    Twist scaled{cmd.v * trans_scale_, cmd.omega * (rot_scale_ + segment_rot_bias_)};
    est_ = unicycle_step(est_, scaled, dt);
}

}  // namespace rowswitch
