#include "rowswitch/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rowswitch/svg.hpp"

namespace rowswitch {

const char *transition_name(Transition t) {
    switch (t) {
        case Transition::AB: return "A->B";
        case Transition::BC: return "B->C";
        case Transition::CD: return "C->D";
        case Transition::DE: return "D->E";
        case Transition::EF: return "E->F";
    }
    return "?";
}

bool transition_is_angle(Transition t) {
    return t == Transition::CD || t == Transition::EF;
}

namespace {

std::optional<Vec2> antenna_at(const TrialResult &trial, const RobotSpec &robot,
                               SwitchState s) {
    auto idx = trial.anchor(s);
    if (!idx) return std::nullopt;
    return robot.antenna_of(trial.trajectory[*idx].pose);
}

std::string fmt_full(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_short(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace

TransitionErrorSet transition_errors(const TrialResult &trial, const FieldSpec &field,
                                     const RobotSpec &robot, int ff_n) {
    TransitionErrorSet out;
    const int sgn = turn_sign(trial.turn);

    auto a = antenna_at(trial, robot, SwitchState::A);
    auto b = antenna_at(trial, robot, SwitchState::B);
    auto c = antenna_at(trial, robot, SwitchState::C);
    auto d = antenna_at(trial, robot, SwitchState::D);
    auto e = antenna_at(trial, robot, SwitchState::E);
    auto f = antenna_at(trial, robot, SwitchState::F);

    if (auto idx = trial.anchor(SwitchState::B)) {
        const CropRow &row = field.row(trial.row);
        Vec2 front = robot.front_of(trial.trajectory[*idx].pose);
        out.err[0] = row.direction().dot(front - row.end);
    }
    if (b && c) out.err[1] = (*c - *b).norm() - robot.length;
    if (a && c && d && e) {
        Vec2 ac = *c - *a, de = *e - *d;
        if (ac.norm() > 1e-9 && de.norm() > 1e-9)
            out.err[2] = rad2deg(sgn * signed_angle(ac, de) - kPi / 2.0);
    }
    if (d && e && trial.target_row >= 0 && trial.target_row < field.row_count())
        out.err[3] = (*e - *d).norm() - inter_row_distance(field, trial.row, trial.target_row);
    if (d && e && f) {
        auto fi = trial.anchor(SwitchState::F);
        size_t fn = *fi + static_cast<size_t>(ff_n);
        if (fn < trial.trajectory.size()) {
            Vec2 ffn = robot.antenna_of(trial.trajectory[fn].pose) - *f;
            Vec2 de = *e - *d;
            if (de.norm() > 1e-9 && ffn.norm() > 1e-9)
                out.err[4] = rad2deg(sgn * signed_angle(de, ffn) - kPi / 2.0);
        }
    }
    return out;
}

double median_of(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median of empty set");
    std::sort(values.begin(), values.end());
    size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

ErrorTable alpha_table(const std::vector<TransitionErrorSet> &batch) {
    if (batch.empty()) throw std::invalid_argument("alpha_table: empty batch");
    ErrorTable table;
    table.trials = static_cast<int>(batch.size());

    for (const TransitionErrorSet &set : batch) {
        for (int i = 0; i < kTransitionCount; ++i) {
            if (!set.err[i]) continue;
            double a = std::abs(*set.err[i]);
            if (transition_is_angle(static_cast<Transition>(i)))
                table.e_max_angle = std::max(table.e_max_angle, a);
            else
                table.e_max_dist = std::max(table.e_max_dist, a);
        }
    }

    for (int i = 0; i < kTransitionCount; ++i) {
        std::vector<double> vals, abs_vals;
        for (const TransitionErrorSet &set : batch) {
            if (!set.err[i]) continue;
            vals.push_back(*set.err[i]);
            abs_vals.push_back(std::abs(*set.err[i]));
        }
        ErrorTable::Row &row = table.rows[i];
        row.count = static_cast<int>(vals.size());
        if (vals.empty()) continue;
        row.median = median_of(vals);
        row.median_abs = median_of(abs_vals);
        double e_max = transition_is_angle(static_cast<Transition>(i)) ? table.e_max_angle
                                                                       : table.e_max_dist;
        if (e_max > 0.0) row.alpha_pct = 100.0 * *row.median / e_max;
    }
    return table;
}

HeadlandRequirement headland_requirement(double robot_length, double e_abc_max,
                                         double coefficient) {
    if (robot_length <= 0.0 || e_abc_max <= 0.0 || coefficient <= 0.0)
        throw std::invalid_argument("headland_requirement: inputs must be positive");
    return {coefficient * robot_length + e_abc_max, coefficient, e_abc_max};
}

HeadlandRequirement headland_requirement_for_receiver(double robot_length, double e_abc_max,
                                                      double gnss_ratio) {
    if (gnss_ratio < 0.0)
        throw std::invalid_argument("headland_requirement: gnss_ratio must be >= 0");
    return headland_requirement(robot_length, e_abc_max, 1.0 + gnss_ratio);
}

std::optional<double> e_abc_max_of(const std::vector<TransitionErrorSet> &batch) {
    std::optional<double> best;
    for (const TransitionErrorSet &set : batch) {
        if (!set.err[0] || !set.err[1]) continue;
        double total = *set.err[0] + *set.err[1];
        if (!best || total > *best) best = total;
    }
    return best;
}

double success_rate(const std::vector<TrialResult> &batch) {
    if (batch.empty()) return 0.0;
    size_t ok = 0;
    for (const TrialResult &t : batch)
        if (is_success(t.outcome)) ++ok;
    return static_cast<double>(ok) / static_cast<double>(batch.size());
}

void write_trajectory_csv(const std::string &path, const TrialResult &trial,
                          const RobotSpec &robot) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write trajectory csv: " + path);
    out << "t,x,y,theta,state\n";
    for (const TrajectorySample &s : trial.trajectory) {
        Vec2 ant = robot.antenna_of(s.pose);
        out << fmt_short(s.t) << "," << fmt_short(ant.x) << "," << fmt_short(ant.y) << ","
            << fmt_short(s.pose.theta) << "," << state_name(s.state) << "\n";
    }
}

namespace {

// Joins the runner's kinematic records with the evaluation errors so csv rows
// carry commanded/achieved values where the trial produced them.
struct RecordView {
    double commanded = 0.0;
    double achieved = 0.0;
    bool present = false;
};

RecordView record_for(const TrialResult &trial, Transition t) {
    static const std::pair<SwitchState, SwitchState> edges[kTransitionCount] = {
        {SwitchState::A, SwitchState::B}, {SwitchState::B, SwitchState::C},
        {SwitchState::C, SwitchState::D}, {SwitchState::D, SwitchState::E},
        {SwitchState::E, SwitchState::F}};
    const auto &[from, to] = edges[static_cast<int>(t)];
    for (const TransitionRecord &r : trial.transitions) {
        if (r.from == from && r.to == to) {
            RecordView v;
            v.present = true;
            if (r.unit == 'r') {
                v.commanded = rad2deg(r.commanded);
                v.achieved = rad2deg(r.achieved_true);
            } else {
                v.commanded = r.commanded;
                v.achieved = r.achieved_true;
            }
            return v;
        }
    }
    return {};
}

void write_scatter(const std::string &path, const std::vector<TransitionErrorSet> &errors,
                   const ErrorTable &table) {
    SvgCanvas svg(760, 480, -0.5, 4.5, -1.15, 1.15);
    svg.line({-0.5, 0.0}, {4.5, 0.0}, "#888", 1.0);
    svg.line({-0.5, 1.0}, {4.5, 1.0}, "#ddd", 1.0, "4,4");
    svg.line({-0.5, -1.0}, {4.5, -1.0}, "#ddd", 1.0, "4,4");
    svg.text({-0.45, 1.05}, "error / E_max of type", 12);
    for (int i = 0; i < kTransitionCount; ++i) {
        svg.text({i - 0.15, -1.12}, transition_name(static_cast<Transition>(i)), 13);
        double e_max = transition_is_angle(static_cast<Transition>(i)) ? table.e_max_angle
                                                                       : table.e_max_dist;
        if (e_max <= 0.0) continue;
        for (size_t k = 0; k < errors.size(); ++k) {
            if (!errors[k].err[i]) continue;
            double x = i + (static_cast<double>(k + 1) / (errors.size() + 1) - 0.5) * 0.7;
            bool is_angle = transition_is_angle(static_cast<Transition>(i));
            svg.circle({x, *errors[k].err[i] / e_max}, 3.0, is_angle ? "#c0392b" : "#2a6fb0");
        }
    }
    svg.save(path);
}

void write_box(const std::string &path, const std::vector<TransitionErrorSet> &errors,
               const ErrorTable &table) {
    SvgCanvas svg(760, 480, -0.5, 4.5, -1.15, 1.15);
    svg.line({-0.5, 0.0}, {4.5, 0.0}, "#888", 1.0);
    for (int i = 0; i < kTransitionCount; ++i) {
        svg.text({i - 0.15, -1.12}, transition_name(static_cast<Transition>(i)), 13);
        double e_max = transition_is_angle(static_cast<Transition>(i)) ? table.e_max_angle
                                                                       : table.e_max_dist;
        if (e_max <= 0.0) continue;
        std::vector<double> vals;
        for (const TransitionErrorSet &set : errors)
            if (set.err[i]) vals.push_back(*set.err[i] / e_max);
        if (vals.empty()) continue;
        std::sort(vals.begin(), vals.end());
        auto quant = [&](double q) {
            double pos = q * (vals.size() - 1);
            size_t k = static_cast<size_t>(pos);
            double f = pos - k;
            return k + 1 < vals.size() ? vals[k] * (1.0 - f) + vals[k + 1] * f : vals[k];
        };
        double q1 = quant(0.25), q2 = quant(0.5), q3 = quant(0.75);
        double x = i, w = 0.22;
        svg.rect({x - w, q1}, {x + w, q3}, "#2a6fb0");
        svg.line({x - w, q2}, {x + w, q2}, "#c0392b", 2.0);
        svg.line({x, vals.front()}, {x, q1}, "#2a6fb0", 1.0);
        svg.line({x, q3}, {x, vals.back()}, "#2a6fb0", 1.0);
        svg.line({x - 0.1, vals.front()}, {x + 0.1, vals.front()}, "#2a6fb0", 1.0);
        svg.line({x - 0.1, vals.back()}, {x + 0.1, vals.back()}, "#2a6fb0", 1.0);
    }
    svg.save(path);
}

void write_trajectories(const std::string &path, const std::vector<TrialResult> &batch,
                        const FieldSpec &field, const RobotSpec &robot) {
    double x_lo = 1e18, x_hi = -1e18, y_lo = 1e18, y_hi = -1e18;
    auto grow = [&](const Vec2 &p) {
        x_lo = std::min(x_lo, p.x);
        x_hi = std::max(x_hi, p.x);
        y_lo = std::min(y_lo, p.y);
        y_hi = std::max(y_hi, p.y);
    };
    for (const CropRow &r : field.rows) {
        grow(r.start);
        grow(r.end);
    }
    for (const TrialResult &t : batch)
        for (const TrajectorySample &s : t.trajectory) grow(robot.antenna_of(s.pose));
    if (x_lo > x_hi) {
        x_lo = y_lo = 0.0;
        x_hi = y_hi = 1.0;
    }
    double mx = 0.05 * std::max(x_hi - x_lo, 1.0), my = 0.05 * std::max(y_hi - y_lo, 1.0);
    SvgCanvas svg(900, 700, x_lo - mx, x_hi + mx, y_lo - my, y_hi + my);

    for (const CropRow &r : field.rows) {
        for (const auto &[a, b] : r.solid_intervals())
            svg.line(r.point_at(a), r.point_at(b), "#2e7d32", 2.0);
        RegressionLine gt = ground_truth_line(field, r.index);
        double t0 = gt.param_of(r.start), t1 = gt.param_of(r.end);
        svg.line(gt.at(t0), gt.at(t1 + field.headland_depth), "#000", 0.8, "6,4");
    }
    // Headland bounds.
    {
        const RegressionLine &eor = field.eor_line;
        const RegressionLine &edge = field.field_edge;
        double lo = -1.0, hi = 1.0;
        for (const CropRow &r : field.rows) {
            lo = std::min(lo, eor.param_of(r.end) - field.nominal_inter_row);
            hi = std::max(hi, eor.param_of(r.end) + field.nominal_inter_row);
        }
        svg.line(eor.at(lo), eor.at(hi), "#999", 1.0, "2,3");
        svg.line(edge.at(lo), edge.at(hi), "#999", 1.0, "2,3");
    }
    for (const TrialResult &t : batch) {
        std::vector<Vec2> pts;
        pts.reserve(t.trajectory.size());
        for (const TrajectorySample &s : t.trajectory) pts.push_back(robot.antenna_of(s.pose));
        svg.polyline(pts, is_success(t.outcome) ? "#2a6fb0" : "#c0392b", 1.2);
    }
    svg.text({x_lo, y_hi + my * 0.4},
             "blue: successful trials, red: failed; dashed: ground-truth regression lines", 12);
    svg.save(path);
}

}  // namespace

BatchReport write_batch_report(const std::string &out_dir,
                               const std::vector<TrialResult> &batch, const FieldSpec &field,
                               const RobotSpec &robot, int ff_n) {
    if (batch.empty()) throw std::invalid_argument("write_batch_report: empty batch");
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    std::vector<TransitionErrorSet> errors;
    errors.reserve(batch.size());
    for (const TrialResult &t : batch)
        errors.push_back(transition_errors(t, field, robot, ff_n));

    BatchReport report;
    report.table = alpha_table(errors);
    report.success = success_rate(batch);
    report.e_abc_max = e_abc_max_of(errors);

    report.errors_csv = (fs::path(out_dir) / "errors.csv").string();
    {
        std::ofstream out(report.errors_csv, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + report.errors_csv);
        out << "trial,transition,commanded,achieved,error,unit\n";
        for (size_t k = 0; k < batch.size(); ++k) {
            for (int i = 0; i < kTransitionCount; ++i) {
                if (!errors[k].err[i]) continue;
                Transition t = static_cast<Transition>(i);
                RecordView rec = record_for(batch[k], t);
                out << k << "," << transition_name(t) << "," << fmt_full(rec.commanded) << ","
                    << fmt_full(rec.achieved) << "," << fmt_full(*errors[k].err[i]) << ","
                    << (transition_is_angle(t) ? "deg" : "m") << "\n";
            }
        }
    }

    report.summary_csv = (fs::path(out_dir) / "summary.csv").string();
    {
        std::ofstream out(report.summary_csv, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + report.summary_csv);
        out << "transition,count,median_error,median_abs_error,alpha_pct,unit\n";
        for (int i = 0; i < kTransitionCount; ++i) {
            const ErrorTable::Row &row = report.table.rows[i];
            Transition t = static_cast<Transition>(i);
            out << transition_name(t) << "," << row.count << ","
                << (row.median ? fmt_full(*row.median) : "na") << ","
                << (row.median_abs ? fmt_full(*row.median_abs) : "na") << ","
                << (row.alpha_pct ? fmt_full(*row.alpha_pct) : "na") << ","
                << (transition_is_angle(t) ? "deg" : "m") << "\n";
        }
        out << "e_max_dist_m," << fmt_full(report.table.e_max_dist) << "\n";
        out << "e_max_angle_deg," << fmt_full(report.table.e_max_angle) << "\n";
        out << "trials," << report.table.trials << "\n";
        out << "success_rate," << fmt_full(report.success) << "\n";
        if (report.e_abc_max && *report.e_abc_max > 0.0) {
            out << "e_abc_max_m," << fmt_full(*report.e_abc_max) << "\n";
            // Both minimum-width coefficient presets: 1.85 is the reference
            // formula's stated coefficient, 1.5 matches its worked numeric
            // example. They disagree; the report carries both.
            out << "w_h_min_coeff_1.85_m,"
                << fmt_full(headland_requirement(robot.length, *report.e_abc_max,
                                                 kHeadlandCoeffStated)
                                .w_h_min)
                << "\n";
            out << "w_h_min_coeff_1.5_m,"
                << fmt_full(headland_requirement(robot.length, *report.e_abc_max,
                                                 kHeadlandCoeffBacksolved)
                                .w_h_min)
                << "\n";
        }
    }

    for (size_t k = 0; k < batch.size(); ++k) {
        char name[48];
        std::snprintf(name, sizeof name, "trajectory_%03zu.csv", k);
        write_trajectory_csv((fs::path(out_dir) / name).string(), batch[k], robot);
    }

    report.scatter_svg = (fs::path(out_dir) / "errors_scatter.svg").string();
    report.box_svg = (fs::path(out_dir) / "errors_box.svg").string();
    report.trajectories_svg = (fs::path(out_dir) / "trajectories.svg").string();
    write_scatter(report.scatter_svg, errors, report.table);
    write_box(report.box_svg, errors, report.table);
    write_trajectories(report.trajectories_svg, batch, field, robot);
    return report;
}

std::vector<TransitionErrorSet> read_errors_csv(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read errors csv: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty errors csv: " + path);

    std::vector<TransitionErrorSet> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string trial_s, name, commanded_s, achieved_s, error_s, unit_s;
        if (!std::getline(ss, trial_s, ',') || !std::getline(ss, name, ',') ||
            !std::getline(ss, commanded_s, ',') || !std::getline(ss, achieved_s, ',') ||
            !std::getline(ss, error_s, ',') || !std::getline(ss, unit_s))
            throw std::runtime_error("malformed errors csv row: " + line);
        size_t trial = std::stoul(trial_s);
        if (trial >= out.size()) out.resize(trial + 1);
        for (int i = 0; i < kTransitionCount; ++i) {
            if (name == transition_name(static_cast<Transition>(i))) {
                out[trial].err[i] = std::stod(error_s);
                break;
            }
        }
    }
    return out;
}

}  // namespace rowswitch
