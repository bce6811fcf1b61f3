#include "rowswitch/switch_fsm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace rowswitch {

const char *state_name(SwitchState s) {
    switch (s) {
        case SwitchState::InRow: return "InRow";
        case SwitchState::A: return "A";
        case SwitchState::B: return "B";
        case SwitchState::C: return "C";
        case SwitchState::D: return "D";
        case SwitchState::E: return "E";
        case SwitchState::F: return "F";
        case SwitchState::G: return "G";
        case SwitchState::Failed: return "Failed";
    }
    return "?";
}

const char *outcome_name(TrialOutcome o) {
    switch (o) {
        case TrialOutcome::Success: return "Success";
        case TrialOutcome::SkipRow: return "Failed(skip_row)";
        case TrialOutcome::SameRow: return "Failed(same_row)";
        case TrialOutcome::LostRow: return "Failed(lost_row)";
        case TrialOutcome::EorStopTimeout: return "Failed(eor_stop_timeout)";
        case TrialOutcome::NoDr: return "Failed(no_dr)";
        case TrialOutcome::NoRowInView: return "Failed(no_row_in_view)";
    }
    return "?";
}

NoiseProfile NoiseProfile::none() { return NoiseProfile{}; }

NoiseProfile NoiseProfile::paper_calibrated() {
    NoiseProfile p;
    p.name = "paper-calibrated";
    p.odom.trans_std_per_m = 0.12;
    p.odom.rot_std_per_rad = 0.11;
    p.odom.rot_drift_gain = 1.6;
    p.odom.drift_mean_forward = -0.05;
    p.odom.drift_mean_lateral = 0.04;
    p.ab_stop_lag_mean = 0.12;
    p.ab_stop_lag_std = 0.40;
    p.odo_stop_lag_mean = 0.12;
    p.odo_stop_lag_std = 0.17;
    return p;
}

NoiseProfile NoiseProfile::by_name(const std::string &name_or_path) {
    if (name_or_path.empty() || name_or_path == "none") return none();
    if (name_or_path == "paper-calibrated") return paper_calibrated();
    std::ifstream in(name_or_path);
    if (!in) throw std::runtime_error("unknown noise profile: " + name_or_path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

NoiseProfile NoiseProfile::from_json(const std::string &text) {
    nlohmann::json j = nlohmann::json::parse(text);
    NoiseProfile p;
    p.name = j.value("name", "custom");
    p.odom.trans_std_per_m = j.value("trans_std_per_m", 0.0);
    p.odom.rot_std_per_rad = j.value("rot_std_per_rad", 0.0);
    p.odom.trans_bias = j.value("trans_bias", 0.0);
    p.odom.rot_bias = j.value("rot_bias", 0.0);
    p.odom.rot_drift_gain = j.value("rot_drift_gain", 0.0);
    p.odom.drift_mean_forward = j.value("drift_mean_forward", 0.0);
    p.odom.drift_mean_lateral = j.value("drift_mean_lateral", 0.0);
    p.ab_stop_lag_mean = j.value("ab_stop_lag_mean", 0.0);
    p.ab_stop_lag_std = j.value("ab_stop_lag_std", 0.0);
    p.odo_stop_lag_mean = j.value("odo_stop_lag_mean", 0.0);
    p.odo_stop_lag_std = j.value("odo_stop_lag_std", 0.0);
    p.rot_bias_first_turn = j.value("rot_bias_first_turn", 0.0);
    p.rot_bias_second_turn = j.value("rot_bias_second_turn", 0.0);
    p.mask_salt = j.value("mask_salt", 0.0);
    p.mask_pepper = j.value("mask_pepper", 0.0);
    return p;
}

std::string NoiseProfile::to_json() const {
    nlohmann::json j;
    j["name"] = name;
    j["trans_std_per_m"] = odom.trans_std_per_m;
    j["rot_std_per_rad"] = odom.rot_std_per_rad;
    j["trans_bias"] = odom.trans_bias;
    j["rot_bias"] = odom.rot_bias;
    j["rot_drift_gain"] = odom.rot_drift_gain;
    j["drift_mean_forward"] = odom.drift_mean_forward;
    j["drift_mean_lateral"] = odom.drift_mean_lateral;
    j["ab_stop_lag_mean"] = ab_stop_lag_mean;
    j["ab_stop_lag_std"] = ab_stop_lag_std;
    j["odo_stop_lag_mean"] = odo_stop_lag_mean;
    j["odo_stop_lag_std"] = odo_stop_lag_std;
    j["rot_bias_first_turn"] = rot_bias_first_turn;
    j["rot_bias_second_turn"] = rot_bias_second_turn;
    j["mask_salt"] = mask_salt;
    j["mask_pepper"] = mask_pepper;
    return j.dump(2);
}

namespace {

struct RowObservation {
    bool found = false;
    double lateral = 0.0;  // body-frame y of the followed trace at the robot
    double heading = 0.0;  // trace direction relative to the body x axis
    int points = 0;
};

// Back-projects the skeleton into the body frame and fits a line per image
// trace (connected component of the thin skeleton), then follows the line
// passing nearest the robot. Component labelling keeps an obliquely viewed
// row in one piece, which lateral clustering does not.
RowObservation observe_row(const SegMask &mask, const CameraModel &cam, const Pose2D &pose,
                           const ControlConfig &cfg) {
    RowObservation obs;
    CameraView view = make_view(cam, pose);
    double c = std::cos(pose.theta), s = std::sin(pose.theta);

    struct Px {
        int u, v;
        Vec2 body;
    };
    std::vector<Px> pts;
    std::vector<int32_t> index(static_cast<size_t>(mask.width) * mask.height, -1);
    for (int v = 0; v < mask.height; ++v) {
        for (int u = 0; u < mask.width; ++u) {
            if (!mask.at(u, v)) continue;
            auto g = backproject_ground(view, u, v);
            if (!g) continue;
            double dx = g->x - pose.x, dy = g->y - pose.y;
            Vec2 body{c * dx + s * dy, -s * dx + c * dy};
            if (body.x < cfg.follow_near || body.x > cfg.follow_far) continue;
            index[static_cast<size_t>(v) * mask.width + u] =
                static_cast<int32_t>(pts.size());
            pts.push_back({u, v, body});
        }
    }
    if (pts.size() < 6) return obs;

    // 8-connected components over the kept pixels.
    std::vector<int32_t> label(pts.size(), -1);
    std::vector<size_t> stack;
    int32_t n_labels = 0;
    for (size_t seed = 0; seed < pts.size(); ++seed) {
        if (label[seed] >= 0) continue;
        label[seed] = n_labels;
        stack.assign(1, seed);
        while (!stack.empty()) {
            size_t i = stack.back();
            stack.pop_back();
            for (int dv = -1; dv <= 1; ++dv) {
                for (int du = -1; du <= 1; ++du) {
                    int qu = pts[i].u + du, qv = pts[i].v + dv;
                    if (qu < 0 || qv < 0 || qu >= mask.width || qv >= mask.height) continue;
                    int32_t j = index[static_cast<size_t>(qv) * mask.width + qu];
                    if (j < 0 || label[j] >= 0) continue;
                    label[j] = n_labels;
                    stack.push_back(static_cast<size_t>(j));
                }
            }
        }
        ++n_labels;
    }

    // Least-squares line per component, in the body frame.
    struct Acc {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int n = 0;
    };
    std::vector<Acc> acc(static_cast<size_t>(n_labels));
    for (size_t i = 0; i < pts.size(); ++i) {
        Acc &a = acc[static_cast<size_t>(label[i])];
        a.sx += pts[i].body.x;
        a.sy += pts[i].body.y;
        a.sxx += pts[i].body.x * pts[i].body.x;
        a.sxy += pts[i].body.x * pts[i].body.y;
        ++a.n;
    }
    double best = 1e18;
    for (const Acc &a : acc) {
        if (a.n < 6) continue;
        double mx = a.sx / a.n, my = a.sy / a.n;
        double sxx = a.sxx - a.n * mx * mx;
        double sxy = a.sxy - a.n * mx * my;
        if (sxx < 1e-3) continue;
        double slope = sxy / sxx;
        if (std::abs(slope) > 2.0) continue;  // not followable from here
        double intercept = my - slope * mx;
        double dist = std::abs(intercept) / std::hypot(1.0, slope);
        if (dist <= cfg.follow_max_lateral && dist < best) {
            best = dist;
            obs.found = true;
            obs.lateral = intercept;
            obs.heading = std::atan(slope);
            obs.points = a.n;
        }
    }
    return obs;
}

class TrialRunner {
  public:
    TrialRunner(const FieldSpec &field, const RobotSpec &robot, const CameraModel &cam,
                const ControlConfig &control, const NoiseProfile &noise, uint64_t seed)
        : field_(field),
          robot_(robot),
          cam_(cam),
          cfg_(control),
          noise_(noise),
          rng_(seed),
          odom_(noise.odom, Pose2D{}, rng_) {}

    TrialResult run(const TrialSetup &setup) {
        TrialResult res;
        res.row = setup.row;
        res.turn = setup.turn;
        res.seed = setup.seed;
        turn_ = setup.turn;
        res.target_row = setup.row + turn_sign(setup.turn);
        if (setup.row < 0 || setup.row >= field_.row_count() || res.target_row < 0 ||
            res.target_row >= field_.row_count())
            throw std::invalid_argument("run_trial: row has no neighbour on the turn side");

        const CropRow &row = field_.row(setup.row);
        Vec2 dir = row.direction();
        Vec2 start = row.end - dir * cfg_.start_back;
        pose_ = {start.x, start.y, std::atan2(dir.y, dir.x)};
        odom_.reset_to(pose_);
        log_sample(true);

        result_ = &res;
        if (!run_in_row(setup)) return finish(res);
        if (!transition_a_to_b()) return finish(res);
        if (!transition_b_to_c()) return finish(res);
        if (!transition_rotate(SwitchState::C, SwitchState::D)) return finish(res);
        if (!transition_d_to_e()) return finish(res);
        if (!transition_rotate(SwitchState::E, SwitchState::F)) return finish(res);
        transition_f_to_g(res.target_row, setup.row);
        return finish(res);
    }

    TrialResult run_reentry(int origin_row, const Pose2D &f_pose, int target_row) {
        TrialResult res;
        res.row = origin_row;
        res.turn = turn_;
        res.target_row = target_row;
        result_ = &res;
        pose_ = f_pose;
        odom_.reset_to(pose_);
        state_ = SwitchState::F;
        log_sample(true);
        anchor(SwitchState::F);
        transition_f_to_g(target_row, origin_row);
        return finish(res);
    }

    void set_turn(TurnDirection t) { turn_ = t; }

  private:
    TrialResult finish(TrialResult &res) {
        res.final_state = state_;
        res.trajectory = std::move(traj_);
        res.anchors = std::move(anchors_);
        res.transitions = std::move(records_);
        res.d_r = d_r_;
        res.d_r_valid = d_r_valid_;
        return res;
    }

    void log_sample(bool force = false) {
        if (!force && steps_since_log_ + 1 < std::max(1, cfg_.log_every)) {
            ++steps_since_log_;
            return;
        }
        steps_since_log_ = 0;
        traj_.push_back({t_, pose_, state_});
    }

    void anchor(SwitchState s) {
        state_ = s;
        // The anchor must carry the exact state-entry pose.
        if (traj_.empty() || traj_.back().t != t_) log_sample(true);
        anchors_[s] = traj_.size() - 1;
        traj_.back().state = s;
    }

    double roughness_here() const { return field_.roughness.at(pose_.position()); }

    void step(const Twist &cmd) {
        pose_ = step_true(pose_, cmd, cfg_.dt, roughness_here(), noise_.odom, rng_,
                          turn_sign(turn_));
        odom_.step(cmd, cfg_.dt);
        t_ += cfg_.dt;
        log_sample();
    }

    // True-only displacement along the heading; the odometry does not see it.
    void slip_forward(double dist) {
        while (dist > 1e-9) {
            double d = std::min(dist, cfg_.v_switch * cfg_.dt);
            pose_.x += d * std::cos(pose_.theta);
            pose_.y += d * std::sin(pose_.theta);
            dist -= d;
            t_ += cfg_.dt;
            log_sample();
        }
    }

    double draw_lag(double mean, double std) {
        if (mean == 0.0 && std == 0.0) return 0.0;
        std::normal_distribution<double> n(mean, std);
        return std::max(0.0, n(rng_));
    }

    void render_mask(SegMask &mask, DepthImage *depth) {
        RenderOptions opts = cfg_.render;
        opts.with_depth = depth != nullptr;
        opts.salt_prob = noise_.mask_salt;
        opts.pepper_prob = noise_.mask_pepper;
        bool noisy = opts.salt_prob > 0.0 || opts.pepper_prob > 0.0;
        render(field_, pose_, cam_, mask, depth, opts, noisy ? &rng_ : nullptr);
    }

    double eor_ground_distance(const SegMask &mask, const EorDetection &eor) const {
        ReferenceScene probe = capture_reference(mask, eor, cam_, pose_);
        return probe.valid ? probe.eor_ground_distance : 1e9;
    }

    bool fail(TrialOutcome outcome) {
        result_->outcome = outcome;
        state_ = SwitchState::Failed;
        return false;
    }

    bool run_in_row(const TrialSetup &setup) {
        double lost = 0.0;
        double travelled = 0.0;
        const double budget = cfg_.start_back + cfg_.max_ab_travel;
        SegMask mask;
        while (travelled < budget) {
            render_mask(mask, nullptr);
            RowObservation obs = observe_row(mask, cam_, pose_, cfg_);
            EorDetection eor = detect_eor(mask, cfg_.eor_smooth_window);
            if (eor.valid && eor_ground_distance(mask, eor) <= cfg_.eor_trigger_range) {
                anchor(SwitchState::A);
                return enter_state_a(setup, mask, eor);
            }
            double omega = 0.0;
            if (obs.found) {
                lost = 0.0;
                omega = std::clamp(cfg_.k_offset * obs.lateral + cfg_.k_heading * obs.heading,
                                   -cfg_.omega_max, cfg_.omega_max);
            } else {
                lost += cfg_.v_inrow * cfg_.dt;
                if (lost > cfg_.lost_row_travel) return fail(TrialOutcome::LostRow);
            }
            step({cfg_.v_inrow, omega});
            travelled += cfg_.v_inrow * cfg_.dt;
        }
        return fail(TrialOutcome::LostRow);
    }

    bool enter_state_a(const TrialSetup &setup, SegMask &mask, EorDetection &eor) {
        if (setup.inject_heading_at_a != 0.0 || setup.inject_offset_at_a != 0.0) {
            pose_.theta = wrap_angle(pose_.theta + setup.inject_heading_at_a);
            Vec2 left = pose_.heading().perp();
            Vec2 shift = left * (setup.inject_offset_at_a * turn_sign(turn_));
            pose_.x += shift.x;
            pose_.y += shift.y;
            odom_.reset_to(pose_);
            traj_.back().pose = pose_;
        }
        DepthImage depth;
        render_mask(mask, &depth);
        eor = detect_eor(mask, cfg_.eor_smooth_window);
        if (eor.valid) {
            ReentryResult rr = locate_reentry(mask, depth, eor, cam_, turn_);
            d_r_ = rr.d_r;
            d_r_valid_ = rr.valid;
            reference_ = capture_reference(mask, eor, cam_, pose_);
            if (reference_.valid)
                scorer_ = make_default_scorer(cam_, reference_, cfg_.similarity);
        }
        return true;
    }

    bool transition_a_to_b() {
        if (!scorer_) return fail(TrialOutcome::EorStopTimeout);
        Vec2 pos_a = pose_.position();
        Pose2D pose_a = pose_;
        Pose2D odom_a = odom_.pose();
        bool crossed = false;
        double travelled = 0.0;
        while (travelled < cfg_.max_ab_travel) {
            if (scorer_->score(pose_) < cfg_.similarity.threshold) {
                crossed = true;
                break;
            }
            step({cfg_.v_switch, 0.0});
            travelled += cfg_.v_switch * cfg_.dt;
        }
        if (!crossed) return fail(TrialOutcome::EorStopTimeout);
        slip_forward(draw_lag(noise_.ab_stop_lag_mean, noise_.ab_stop_lag_std));

        const CropRow &row = field_.row(result_->row);
        double commanded =
            row.direction().dot(row.end - robot_.front_of(pose_a));  // distance to the true EOR
        TransitionRecord rec;
        rec.from = SwitchState::A;
        rec.to = SwitchState::B;
        rec.commanded = commanded;
        rec.achieved_true = (pose_.position() - pos_a).norm();
        rec.achieved_odom = (odom_.pose().position() - odom_a.position()).norm();
        rec.error = rec.achieved_true - rec.commanded;
        rec.unit = 'm';
        records_.push_back(rec);
        anchor(SwitchState::B);
        return true;
    }

    bool drive_odometry_distance(double target, SwitchState from, SwitchState to) {
        Vec2 start_true = pose_.position();
        Pose2D odom_start = odom_.pose();
        double odom_d = 0.0;
        while (true) {
            odom_d = (odom_.pose().position() - odom_start.position()).norm();
            double rem = target - odom_d;
            if (rem <= 1e-9) break;
            double v = std::min(cfg_.v_switch, std::max(rem, 0.0) / cfg_.dt);
            step({v, 0.0});
        }
        slip_forward(draw_lag(noise_.odo_stop_lag_mean, noise_.odo_stop_lag_std));

        TransitionRecord rec;
        rec.from = from;
        rec.to = to;
        rec.commanded = target;
        rec.achieved_true = (pose_.position() - start_true).norm();
        rec.achieved_odom = odom_d;
        rec.error = rec.achieved_true - rec.commanded;
        rec.unit = 'm';
        records_.push_back(rec);
        anchor(to);
        return true;
    }

    bool transition_b_to_c() {
        return drive_odometry_distance(robot_.length, SwitchState::B, SwitchState::C);
    }

    bool transition_d_to_e() {
        if (!d_r_valid_) return fail(TrialOutcome::NoDr);
        return drive_odometry_distance(d_r_, SwitchState::D, SwitchState::E);
    }

    bool transition_rotate(SwitchState from, SwitchState to) {
        double theta_true0 = pose_.theta;
        double odom0 = odom_.pose().theta;
        odom_.set_segment_rot_bias(from == SwitchState::C ? noise_.rot_bias_first_turn
                                                          : noise_.rot_bias_second_turn);
        int sgn = turn_sign(turn_);
        double turned = 0.0;
        while (true) {
            turned = std::abs(wrap_angle(odom_.pose().theta - odom0));
            double rem = kPi / 2.0 - turned;
            if (rem <= 1e-12) break;
            double w = std::min(cfg_.omega_switch, rem / cfg_.dt);
            step({0.0, sgn * w});
        }
        TransitionRecord rec;
        rec.from = from;
        rec.to = to;
        rec.commanded = kPi / 2.0;
        rec.achieved_true = std::abs(wrap_angle(pose_.theta - theta_true0));
        rec.achieved_odom = turned;
        rec.error = rec.achieved_true - rec.commanded;
        rec.unit = 'r';
        records_.push_back(rec);
        odom_.set_segment_rot_bias(0.0);
        anchor(to);
        return true;
    }

    void classify_position(int target_row, int origin_row) {
        double best = 1e9;
        int best_row = -1;
        for (int i = 0; i < field_.row_count(); ++i) {
            RegressionLine line = ground_truth_line(field_, i);
            double d = std::abs(line.offset_of(pose_.position()));
            if (d < best) {
                best = d;
                best_row = i;
            }
        }
        if (best_row == target_row)
            result_->outcome = TrialOutcome::Success;
        else if (best_row == origin_row) {
            result_->outcome = TrialOutcome::SameRow;
            state_ = SwitchState::Failed;
        } else {
            result_->outcome = TrialOutcome::SkipRow;
            state_ = SwitchState::Failed;
        }
    }

    void transition_f_to_g(int target_row, int origin_row) {
        SegMask mask;
        render_mask(mask, nullptr);
        RowObservation first = observe_row(mask, cam_, pose_, cfg_);
        if (!first.found) {
            fail(TrialOutcome::NoRowInView);
            return;
        }

        // Field-interior side of the EOR line.
        double field_side = field_.eor_line.offset_of(field_.row(origin_row).start);
        bool crossed = false;
        double after = 0.0, total = 0.0;
        double omega = 0.0;
        while (total < cfg_.reentry_budget) {
            render_mask(mask, nullptr);
            RowObservation obs = observe_row(mask, cam_, pose_, cfg_);
            if (obs.found)
                omega = std::clamp(cfg_.k_offset * obs.lateral + cfg_.k_heading * obs.heading,
                                   -cfg_.omega_max, cfg_.omega_max);
            step({cfg_.v_switch, omega});
            total += cfg_.v_switch * cfg_.dt;
            if (!crossed &&
                field_.eor_line.offset_of(pose_.position()) * field_side > 0.0) {
                crossed = true;
                anchor(SwitchState::G);
            }
            if (crossed) {
                after += cfg_.v_switch * cfg_.dt;
                if (after >= cfg_.classify_travel) break;
            }
        }
        classify_position(target_row, origin_row);
        if (result_->outcome == TrialOutcome::Success && state_ != SwitchState::Failed &&
            !crossed) {
            // Never made it back into the field.
            result_->outcome = TrialOutcome::NoRowInView;
            state_ = SwitchState::Failed;
        }
    }

    const FieldSpec &field_;
    const RobotSpec &robot_;
    const CameraModel &cam_;
    const ControlConfig &cfg_;
    const NoiseProfile &noise_;
    std::mt19937_64 rng_;
    OdometryEstimator odom_;
    Pose2D pose_;
    double t_ = 0.0;
    int steps_since_log_ = 0;
    SwitchState state_ = SwitchState::InRow;
    TurnDirection turn_ = TurnDirection::Left;
    std::vector<TrajectorySample> traj_;
    std::map<SwitchState, size_t> anchors_;
    std::vector<TransitionRecord> records_;
    ReferenceScene reference_;
    std::unique_ptr<SceneSimilarityScorer> scorer_;
    double d_r_ = 0.0;
    bool d_r_valid_ = false;
    TrialResult *result_ = nullptr;
};

}  // namespace

TrialResult run_trial(const FieldSpec &field, const RobotSpec &robot, const CameraModel &cam,
                      const ControlConfig &control, const NoiseProfile &noise,
                      const TrialSetup &setup) {
    TrialRunner runner(field, robot, cam, control, noise, setup.seed);
    return runner.run(setup);
}

TrialResult run_reentry_from(const FieldSpec &field, const RobotSpec &robot,
                             const CameraModel &cam, const ControlConfig &control,
                             const NoiseProfile &noise, int origin_row, TurnDirection turn,
                             const Pose2D &f_pose, uint64_t seed) {
    TrialRunner runner(field, robot, cam, control, noise, seed);
    runner.set_turn(turn);
    int target_row = origin_row + turn_sign(turn);
    return runner.run_reentry(origin_row, f_pose, target_row);
}

std::vector<TrialResult> run_batch(const FieldSpec &field, const RobotSpec &robot,
                                   const CameraModel &cam, const ControlConfig &control,
                                   const NoiseProfile &noise,
                                   const std::vector<TrialSetup> &setups, bool parallel) {
    std::vector<TrialResult> out(setups.size());
    if (parallel && setups.size() > 1) {
        std::vector<std::future<TrialResult>> futures;
        futures.reserve(setups.size());
        for (const TrialSetup &s : setups)
            futures.push_back(std::async(std::launch::async, [&, s] {
                return run_trial(field, robot, cam, control, noise, s);
            }));
        for (size_t i = 0; i < futures.size(); ++i) out[i] = futures[i].get();
    } else {
        for (size_t i = 0; i < setups.size(); ++i)
            out[i] = run_trial(field, robot, cam, control, noise, setups[i]);
    }
    return out;
}

std::vector<TrialSetup> default_batch_setups(const FieldSpec &field, uint64_t seed_base) {
    std::vector<TrialSetup> setups;
    uint64_t k = 0;
    for (int i = 0; i + 1 < field.row_count(); ++i)
        setups.push_back({i, TurnDirection::Left, seed_base + k++});
    for (int i = 1; i < field.row_count(); ++i)
        setups.push_back({i, TurnDirection::Right, seed_base + k++});
    return setups;
}

}  // namespace rowswitch
