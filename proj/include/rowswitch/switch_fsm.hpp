#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rowswitch/field_model.hpp"
#include "rowswitch/reentry_detector.hpp"
#include "rowswitch/robot_model.hpp"
#include "rowswitch/sensor_model.hpp"

namespace rowswitch {

// Row switching manoeuvre states. A: initial EOR detection; B: robot at the
// EOR; C: robot fully in the headland; D/F: after the two 90 degree turns;
// E: after the d_r traverse; G: robot inside the next crop row.
enum class SwitchState { InRow, A, B, C, D, E, F, G, Failed };

const char *state_name(SwitchState s);

enum class TrialOutcome {
    Success,
    SkipRow,         // entered a corridor beyond the intended row
    SameRow,         // turned back into the corridor it came from
    LostRow,         // in-row follower lost the skeleton
    EorStopTimeout,  // similarity score never crossed the threshold
    NoDr,            // no valid re-entry detection at state A
    NoRowInView      // nothing to follow at state F
};

const char *outcome_name(TrialOutcome o);
inline bool is_success(TrialOutcome o) { return o == TrialOutcome::Success; }

struct ControlConfig {
    double dt = 0.05;
    double v_inrow = 0.4;        // in-row following
    double v_switch = 0.3;       // manoeuvre translations (slower than in-row)
    double omega_switch = 0.5;   // manoeuvre rotations
    double omega_max = 1.0;
    double k_offset = 2.0;
    double k_heading = 2.2;
    double eor_trigger_range = 1.5;  // state A trigger distance
    double max_ab_travel = 3.0;
    double lost_row_travel = 1.0;
    double start_back = 3.0;       // trial start distance before the row end
    double classify_travel = 2.0;  // corridor check distance after re-entry
    double reentry_budget = 6.0;
    double follow_near = 0.25;  // body-frame window the follower looks at
    double follow_far = 3.0;
    // Traces farther out than this are not followed; keeps the follower from
    // latching onto a neighbour row when its own row runs out.
    double follow_max_lateral = 0.42;
    // Trajectory log decimation: one sample per log_every control steps
    // (state-entry poses are always logged), giving a GNSS-like 5 Hz track
    // at the default dt.
    int log_every = 4;
    int eor_smooth_window = 5;
    SimilarityConfig similarity;
    RenderOptions render;
};

// Disturbance profile. Everything here is a simulation construct calibrated
// so batch statistics land near the field results; "none" disables all of it.
struct NoiseProfile {
    std::string name = "none";
    OdometryModel odom;
    // Distance travelled past the vision stop trigger (braking/latency),
    // drawn once per stop as max(0, N(mean, std)). Not seen by odometry.
    double ab_stop_lag_mean = 0.0;
    double ab_stop_lag_std = 0.0;
    // Same for odometry-fed stops (B->C, D->E).
    double odo_stop_lag_mean = 0.0;
    double odo_stop_lag_std = 0.0;
    // Per-turn odometry rotation-scale bias, on top of OdometryModel::rot_bias.
    double rot_bias_first_turn = 0.0;
    double rot_bias_second_turn = 0.0;
    double mask_salt = 0.0;
    double mask_pepper = 0.0;

    static NoiseProfile none();
    static NoiseProfile paper_calibrated();
    // Resolves a preset name, or loads a JSON profile when given a path.
    static NoiseProfile by_name(const std::string &name_or_path);
    static NoiseProfile from_json(const std::string &text);
    std::string to_json() const;
};

struct TransitionRecord {
    SwitchState from = SwitchState::InRow;
    SwitchState to = SwitchState::InRow;
    double commanded = 0.0;
    double achieved_true = 0.0;
    double achieved_odom = 0.0;
    double error = 0.0;  // achieved_true - commanded
    char unit = 'm';     // 'm' metres or 'r' radians
};

struct TrajectorySample {
    double t = 0.0;
    Pose2D pose;  // robot centre
    SwitchState state = SwitchState::InRow;
};

struct TrialSetup {
    int row = 0;
    TurnDirection turn = TurnDirection::Left;
    uint64_t seed = 1;
    // Disturbances applied when state A is declared (failure-mode and
    // active-perception experiments). Offset is positive toward the turn side.
    double inject_heading_at_a = 0.0;
    double inject_offset_at_a = 0.0;
};

struct TrialResult {
    int row = 0;
    int target_row = 0;
    TurnDirection turn = TurnDirection::Left;
    uint64_t seed = 0;
    TrialOutcome outcome = TrialOutcome::Success;
    SwitchState final_state = SwitchState::InRow;
    std::vector<TrajectorySample> trajectory;
    std::map<SwitchState, size_t> anchors;  // sample index at state entry
    std::vector<TransitionRecord> transitions;
    double d_r = 0.0;
    bool d_r_valid = false;

    std::optional<size_t> anchor(SwitchState s) const {
        auto it = anchors.find(s);
        if (it == anchors.end()) return std::nullopt;
        return it->second;
    }
};

TrialResult run_trial(const FieldSpec &field, const RobotSpec &robot, const CameraModel &cam,
                      const ControlConfig &control, const NoiseProfile &noise,
                      const TrialSetup &setup);

// Re-entry step alone from an injected state-F pose; used to map the success
// region of the F->G transition.
TrialResult run_reentry_from(const FieldSpec &field, const RobotSpec &robot,
                             const CameraModel &cam, const ControlConfig &control,
                             const NoiseProfile &noise, int origin_row, TurnDirection turn,
                             const Pose2D &f_pose, uint64_t seed);

std::vector<TrialResult> run_batch(const FieldSpec &field, const RobotSpec &robot,
                                   const CameraModel &cam, const ControlConfig &control,
                                   const NoiseProfile &noise,
                                   const std::vector<TrialSetup> &setups,
                                   bool parallel = true);

// The field-experiment layout: every row switched with a left turn plus
// every row switched with a right turn, wherever the neighbour exists.
std::vector<TrialSetup> default_batch_setups(const FieldSpec &field, uint64_t seed_base);

}  // namespace rowswitch
