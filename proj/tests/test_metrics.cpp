#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rowswitch/metrics.hpp"

using namespace rowswitch;

namespace {

// Hand-built trial: perfect 90 degree left turns with exact distances on a
// synthetic two-row field. `cd_skew` rotates the DE leg relative to AC.
struct Synthetic {
    FieldSpec field;
    RobotSpec robot;
    TrialResult trial;
};

Synthetic synthetic_trial(double cd_skew_deg = 0.0) {
    Synthetic s;
    FieldConfig cfg;
    cfg.row_count = 2;
    cfg.spacing_jitter = 0.0;
    cfg.angle_jitter = 0.0;
    cfg.endpoint_jitter = 0.0;
    cfg.gaps_per_row = 0;
    cfg.roughness_amplitude = 0.0;
    s.field = generate_field(cfg, 1);

    TrialResult &t = s.trial;
    t.row = 0;
    t.target_row = 1;
    t.turn = TurnDirection::Left;
    double L = s.robot.length;

    // Centre poses for the exact manoeuvre, rows along +x ending at x=12.
    double skew = deg2rad(cd_skew_deg);
    std::vector<Pose2D> poses = {
        {10.5, 0.0, 0.0},              // A
        {12.0 - L / 2.0, 0.0, 0.0},    // B: front edge on the row end
        {12.0 + L / 2.0, 0.0, 0.0},    // C
        {12.0 + L / 2.0, 0.0, kPi / 2.0 + skew},  // D
        {12.0 + L / 2.0 - 0.5 * std::sin(skew), 0.5 * std::cos(skew),
         kPi / 2.0 + skew},            // E: DE leg of length 0.5
        {12.0 + L / 2.0 - 0.5 * std::sin(skew), 0.5 * std::cos(skew), kPi},  // F
    };
    SwitchState states[] = {SwitchState::A, SwitchState::B, SwitchState::C,
                            SwitchState::D, SwitchState::E, SwitchState::F};
    double time = 0.0;
    for (size_t i = 0; i < poses.size(); ++i) {
        t.trajectory.push_back({time, poses[i], states[i]});
        t.anchors[states[i]] = t.trajectory.size() - 1;
        time += 1.0;
    }
    // A few samples past F, moving straight along -x (the F heading): the
    // F->F_N chord then reproduces the exact 90 degree second turn.
    Pose2D g = poses.back();
    for (int k = 0; k < 8; ++k) {
        g.x -= 0.05;
        t.trajectory.push_back({time, g, SwitchState::G});
        time += 1.0;
    }
    t.anchors[SwitchState::G] = t.trajectory.size() - 1;
    t.outcome = TrialOutcome::Success;
    return s;
}

}  // namespace

TEST_CASE("transition_errors on a perfect synthetic manoeuvre are zero") {
    Synthetic s = synthetic_trial();
    TransitionErrorSet errs = transition_errors(s.trial, s.field, s.robot);
    for (int i = 0; i < kTransitionCount; ++i) REQUIRE(errs.err[i].has_value());
    CHECK(std::abs(*errs.of(Transition::AB)) < 1e-9);
    CHECK(std::abs(*errs.of(Transition::BC)) < 1e-9);
    CHECK(std::abs(*errs.of(Transition::CD)) < 1e-9);
    CHECK(std::abs(*errs.of(Transition::DE)) < 1e-9);
    CHECK(std::abs(*errs.of(Transition::EF)) < 1e-9);
}

TEST_CASE("transition_errors: DE rotated 5 degrees from AC") {
    Synthetic s = synthetic_trial(5.0);
    TransitionErrorSet errs = transition_errors(s.trial, s.field, s.robot);
    REQUIRE(errs.of(Transition::CD).has_value());
    CHECK(*errs.of(Transition::CD) == doctest::Approx(5.0).epsilon(1e-9));
    // The second turn still ends exactly 90 degrees from DE.
    CHECK(std::abs(*errs.of(Transition::EF) + 5.0) < 1e-9);
}

TEST_CASE("transition_errors flags missing anchors") {
    Synthetic s = synthetic_trial();
    TrialResult partial = s.trial;
    partial.anchors.erase(SwitchState::E);
    partial.anchors.erase(SwitchState::F);
    TransitionErrorSet errs = transition_errors(partial, s.field, s.robot);
    CHECK(errs.of(Transition::AB).has_value());
    CHECK(errs.of(Transition::BC).has_value());
    CHECK_FALSE(errs.of(Transition::CD).has_value());
    CHECK_FALSE(errs.of(Transition::DE).has_value());
    CHECK_FALSE(errs.of(Transition::EF).has_value());
}

TEST_CASE("median convention") {
    CHECK(median_of({3.0}) == 3.0);
    CHECK(median_of({1.0, 2.0}) == doctest::Approx(1.5));
    CHECK(median_of({5.0, 1.0, 3.0}) == 3.0);
    CHECK(median_of({4.0, 1.0, 3.0, 2.0}) == doctest::Approx(2.5));
    CHECK_THROWS_AS(median_of({}), std::invalid_argument);
}

TEST_CASE("alpha_table reproduces the reference error table") {
    // Medians fixed to the reference values; one pooled maximum per type
    // back-solved from the reference alpha entries.
    auto set_of = [](double ab, double bc, double cd, double de, double ef) {
        TransitionErrorSet s;
        s.err = {ab, bc, cd, de, ef};
        return s;
    };
    std::vector<TransitionErrorSet> batch = {
        set_of(0.2340, 0.0887, -1.09, 0.1247, 2.51),
        set_of(0.2340, 0.0887, -1.09, 0.1247, 2.51),
        set_of(0.5821, 0.0887, 37.8, 0.1247, 2.51),
    };
    ErrorTable table = alpha_table(batch);
    CHECK(table.e_max_dist == doctest::Approx(0.5821));
    CHECK(table.e_max_angle == doctest::Approx(37.8));
    const double reference[kTransitionCount] = {40.20, 15.24, -2.88, 21.41, 6.64};
    for (int i = 0; i < kTransitionCount; ++i) {
        REQUIRE(table.rows[i].alpha_pct.has_value());
        CHECK(std::abs(*table.rows[i].alpha_pct - reference[i]) <= 0.1);  // 0.1 pt
    }

    // Alpha carries the sign of the median and never exceeds 100 percent.
    for (int i = 0; i < kTransitionCount; ++i) {
        REQUIRE(table.rows[i].median.has_value());
        if (*table.rows[i].median != 0.0)
            CHECK(std::signbit(*table.rows[i].alpha_pct) ==
                  std::signbit(*table.rows[i].median));
        CHECK(std::abs(*table.rows[i].alpha_pct) <= 100.0);
        CHECK(std::abs(*table.rows[i].median) <= *table.rows[i].median_abs + 1e-12);
    }
}

TEST_CASE("alpha_table degenerate all-zero batch") {
    TransitionErrorSet zero;
    zero.err = {0.0, 0.0, 0.0, 0.0, 0.0};
    ErrorTable table = alpha_table({zero, zero});
    for (int i = 0; i < kTransitionCount; ++i) {
        CHECK(table.rows[i].median == 0.0);
        CHECK_FALSE(table.rows[i].alpha_pct.has_value());  // undefined, not NaN
    }
    CHECK_THROWS_AS(alpha_table({}), std::invalid_argument);
}

TEST_CASE("headland requirement arithmetic") {
    HeadlandRequirement hr = headland_requirement(0.526, 0.6427, kHeadlandCoeffStated);
    CHECK(std::abs(hr.w_h_min - 1.6158) <= 1e-9);

    HeadlandRequirement back = headland_requirement(0.526, 0.6427, kHeadlandCoeffBacksolved);
    CHECK(std::abs(back.w_h_min - 1.4317) <= 0.005);

    HeadlandRequirement front = headland_requirement_for_receiver(0.526, 0.6427, 0.0);
    CHECK(front.w_h_min == doctest::Approx(0.526 + 0.6427));

    // Linear in both arguments.
    double a = headland_requirement(0.4, 0.3, 1.85).w_h_min;
    double b = headland_requirement(0.8, 0.3, 1.85).w_h_min;
    double c = headland_requirement(0.4, 0.6, 1.85).w_h_min;
    CHECK(b - a == doctest::Approx(1.85 * 0.4));
    CHECK(c - a == doctest::Approx(0.3));

    CHECK_THROWS_AS(headland_requirement(0.0, 0.5, 1.85), std::invalid_argument);
    CHECK_THROWS_AS(headland_requirement(0.5, -0.1, 1.85), std::invalid_argument);
    CHECK_THROWS_AS(headland_requirement_for_receiver(0.5, 0.5, -1.0), std::invalid_argument);
}

TEST_CASE("e_abc_max pools the row-exit overshoot") {
    auto set_of = [](double ab, double bc) {
        TransitionErrorSet s;
        s.err[0] = ab;
        s.err[1] = bc;
        return s;
    };
    std::vector<TransitionErrorSet> batch = {set_of(0.1, 0.05), set_of(0.3, 0.2),
                                             set_of(0.2, 0.0)};
    auto m = e_abc_max_of(batch);
    REQUIRE(m.has_value());
    CHECK(*m == doctest::Approx(0.5));
}

TEST_CASE("batch report rejects unwritable output paths") {
    Synthetic s = synthetic_trial();
    CHECK_THROWS(write_batch_report("/proc/not-writable/report", {s.trial}, s.field, s.robot));
}

TEST_CASE("batch report round trip and success accounting") {
    namespace fs = std::filesystem;
    FieldConfig cfg;
    cfg.spacing_jitter = 0.0;
    cfg.angle_jitter = 0.0;
    cfg.endpoint_jitter = 0.0;
    cfg.gaps_per_row = 0;
    cfg.roughness_amplitude = 0.0;
    cfg.row_count = 4;
    FieldSpec field = generate_field(cfg, 2);
    RobotSpec robot;
    CameraModel cam;
    ControlConfig control;
    std::vector<TrialSetup> setups = {{0, TurnDirection::Left, 1},
                                      {1, TurnDirection::Left, 2},
                                      {2, TurnDirection::Left, 3}};
    std::vector<TrialResult> batch =
        run_batch(field, robot, cam, control, NoiseProfile::none(), setups);

    std::string dir = "metrics_report_test";
    BatchReport report = write_batch_report(dir, batch, field, robot);
    CHECK(fs::exists(report.errors_csv));
    CHECK(fs::exists(report.summary_csv));
    CHECK(fs::exists(report.scatter_svg));
    CHECK(fs::exists(report.box_svg));
    CHECK(fs::exists(report.trajectories_svg));
    CHECK(fs::exists(fs::path(dir) / "trajectory_000.csv"));

    size_t wins = 0;
    for (const TrialResult &t : batch)
        if (is_success(t.outcome)) ++wins;
    CHECK(report.success == doctest::Approx(static_cast<double>(wins) / batch.size()));

    // Re-ingesting the csv reproduces the table exactly.
    std::vector<TransitionErrorSet> reread = read_errors_csv(report.errors_csv);
    REQUIRE(reread.size() == batch.size());
    ErrorTable again = alpha_table(reread);
    for (int i = 0; i < kTransitionCount; ++i) {
        REQUIRE(again.rows[i].median.has_value() == report.table.rows[i].median.has_value());
        if (again.rows[i].median)
            CHECK(*again.rows[i].median == *report.table.rows[i].median);
    }
    CHECK(again.e_max_dist == report.table.e_max_dist);
    CHECK(again.e_max_angle == report.table.e_max_angle);

    fs::remove_all(dir);
}
