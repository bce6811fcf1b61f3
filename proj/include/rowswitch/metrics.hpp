#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "rowswitch/field_model.hpp"
#include "rowswitch/switch_fsm.hpp"

namespace rowswitch {

// The five evaluated transitions of the manoeuvre, in order.
enum class Transition { AB = 0, BC = 1, CD = 2, DE = 3, EF = 4 };
constexpr int kTransitionCount = 5;

const char *transition_name(Transition t);
// true for the C->D / E->F rotation errors (degrees); false for metres.
bool transition_is_angle(Transition t);

// Signed per-trial transition errors; entries are absent when the trial
// failed before the needed anchors were logged.
struct TransitionErrorSet {
    std::array<std::optional<double>, kTransitionCount> err;

    std::optional<double> of(Transition t) const { return err[static_cast<int>(t)]; }
};

// Evaluation-pipeline errors from the logged trajectory:
//   A->B  signed overshoot of the robot front edge past the true row end (m)
//   B->C  antenna travel minus the robot length (m)
//   C->D  angle between the AC and DE vectors minus 90 deg, turn-normalized
//   D->E  DE distance minus the ground-truth inter-row distance (m)
//   E->F  angle between DE and F->F_N vectors minus 90 deg, with F_N the
//         trajectory point ff_n samples after F
// Angles in degrees. Positions are the GNSS-antenna track.
TransitionErrorSet transition_errors(const TrialResult &trial, const FieldSpec &field,
                                     const RobotSpec &robot, int ff_n = 5);

struct ErrorTable {
    struct Row {
        int count = 0;
        std::optional<double> median;
        std::optional<double> median_abs;
        std::optional<double> alpha_pct;  // median / E_max of the type, percent
    };
    std::array<Row, kTransitionCount> rows;
    double e_max_dist = 0.0;   // max |error| pooled over A->B, B->C, D->E
    double e_max_angle = 0.0;  // max |error| pooled over C->D, E->F
    int trials = 0;
};

ErrorTable alpha_table(const std::vector<TransitionErrorSet> &batch);

// Median with the even-count convention (mean of the middle two).
double median_of(std::vector<double> values);

struct HeadlandRequirement {
    double w_h_min = 0.0;
    double coefficient = 0.0;
    double e_abc_max = 0.0;
};

// Minimum headland width: coefficient * L_robot + E_ABC_max. The reference
// coefficient is 1.85; 1.5 reproduces the reference 143.17 cm worked example;
// use 1 + R for a receiver mounted R * L_robot behind the front.
constexpr double kHeadlandCoeffStated = 1.85;
constexpr double kHeadlandCoeffBacksolved = 1.5;

HeadlandRequirement headland_requirement(double robot_length, double e_abc_max,
                                         double coefficient = kHeadlandCoeffStated);
HeadlandRequirement headland_requirement_for_receiver(double robot_length, double e_abc_max,
                                                      double gnss_ratio);

// Max over trials of the total overshoot at state C (A->B plus B->C errors).
std::optional<double> e_abc_max_of(const std::vector<TransitionErrorSet> &batch);

double success_rate(const std::vector<TrialResult> &batch);

struct BatchReport {
    ErrorTable table;
    double success = 0.0;
    std::optional<double> e_abc_max;
    std::string errors_csv;
    std::string summary_csv;
    std::string scatter_svg;
    std::string box_svg;
    std::string trajectories_svg;
};

// Writes errors.csv, summary.csv, trajectory_###.csv and the three plots
// into out_dir (created if missing).
BatchReport write_batch_report(const std::string &out_dir,
                               const std::vector<TrialResult> &batch, const FieldSpec &field,
                               const RobotSpec &robot, int ff_n = 5);

void write_trajectory_csv(const std::string &path, const TrialResult &trial,
                          const RobotSpec &robot);

// Re-ingests an errors.csv written by write_batch_report.
std::vector<TransitionErrorSet> read_errors_csv(const std::string &path);

}  // namespace rowswitch
