#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "rowswitch/field_model.hpp"
#include "rowswitch/image_io.hpp"
#include "rowswitch/metrics.hpp"
#include "rowswitch/reentry_detector.hpp"
#include "rowswitch/switch_fsm.hpp"

namespace fs = std::filesystem;
using namespace rowswitch;

namespace {

int log_level() {
    const char *env = std::getenv("ROWSWITCH_LOG");
    return env ? std::atoi(env) : 0;
}

void log_info(const std::string &msg) {
    if (log_level() >= 1) std::cerr << "[rowswitch] " << msg << "\n";
}

TurnDirection parse_turn(const std::string &s) {
    if (s == "left") return TurnDirection::Left;
    if (s == "right") return TurnDirection::Right;
    throw CLI::ValidationError("--turn", "must be 'left' or 'right'");
}

struct RunConfig {
    std::string field_path;
    std::string profile = "none";
    std::string out_dir = "out";
    RobotSpec robot;
    std::vector<TrialSetup> trials;
};

RunConfig load_run_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read run config: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    nlohmann::json j = nlohmann::json::parse(ss.str());
    RunConfig cfg;
    cfg.field_path = j.at("field").get<std::string>();
    cfg.profile = j.value("profile", "none");
    cfg.out_dir = j.value("out", "out");
    if (j.contains("robot")) {
        const auto &jr = j.at("robot");
        cfg.robot.length = jr.value("length", cfg.robot.length);
        cfg.robot.width = jr.value("width", cfg.robot.width);
        cfg.robot.gnss_offset = jr.value("gnss_offset", cfg.robot.gnss_offset);
    }
    for (const auto &jt : j.at("trials")) {
        TrialSetup s;
        s.row = jt.at("row").get<int>();
        s.turn = jt.at("turn").get<std::string>() == "right" ? TurnDirection::Right
                                                             : TurnDirection::Left;
        s.seed = jt.at("seed").get<uint64_t>();
        cfg.trials.push_back(s);
    }
    return cfg;
}

void draw_overlay(const SegMask &mask, const EorDetection &eor, const ScanRoi &roi,
                  const ReentryResult &res, const std::string &path) {
    RgbImage img;
    img.resize(mask.width, mask.height);
    for (int v = 0; v < mask.height; ++v)
        for (int u = 0; u < mask.width; ++u)
            if (mask.at(u, v)) img.set(u, v, {255, 255, 255});
    if (eor.valid)
        for (int u = 0; u < mask.width; ++u) img.set(u, eor.image_row, {0, 200, 0});
    if (roi.valid) {
        for (const PxPoint &p : roi.corner_path)
            if (img.inside(p.u, p.v)) img.set(p.u, p.v, {60, 120, 255});
        for (const PxPoint &p : roi.top_segment)
            if (img.inside(p.u, p.v)) img.set(p.u, p.v, {60, 200, 255});
    }
    if (!(res.P_t == res.A_t)) {
        for (const PxPoint &p : raster_line(res.A_t, res.P_t))
            if (img.inside(p.u, p.v)) img.set(p.u, p.v, {230, 40, 40});
    }
    if (res.valid) {
        for (int d = -4; d <= 4; ++d) {
            if (img.inside(res.R_px.u + d, res.R_px.v)) img.set(res.R_px.u + d, res.R_px.v, {255, 220, 0});
            if (img.inside(res.R_px.u, res.R_px.v + d)) img.set(res.R_px.u, res.R_px.v + d, {255, 220, 0});
        }
    }
    save_ppm(img, path);
}

int cmd_generate_field(const FieldConfig &config, uint64_t seed, const std::string &out) {
    FieldSpec field = generate_field(config, seed);
    save_field(field, out);
    double lo = 1e18, hi = -1e18, sum = 0.0;
    for (int i = 0; i + 1 < field.row_count(); ++i) {
        double d = inter_row_distance(field, i, i + 1);
        lo = std::min(lo, d);
        hi = std::max(hi, d);
        sum += d;
    }
    std::cout << "field=" << out << " rows=" << field.row_count()
              << " spacing_min=" << lo << " spacing_max=" << hi
              << " spacing_mean=" << sum / std::max(1, field.row_count() - 1)
              << " headland_depth=" << field.headland_depth << "\n";
    return 0;
}

int cmd_run_trial(const std::string &field_path, int row, const std::string &turn,
                  uint64_t seed, const std::string &profile, const std::string &out_dir) {
    FieldSpec field = load_field(field_path);
    RobotSpec robot;
    CameraModel cam;
    ControlConfig control;
    NoiseProfile noise = NoiseProfile::by_name(profile);
    TrialSetup setup{row, parse_turn(turn), seed, 0.0};
    log_info("running trial row=" + std::to_string(row) + " turn=" + turn);
    TrialResult res = run_trial(field, robot, cam, control, noise, setup);
    fs::create_directories(out_dir);
    std::string traj = (fs::path(out_dir) / "trajectory.csv").string();
    write_trajectory_csv(traj, res, robot);
    std::cout << "outcome=" << outcome_name(res.outcome) << " final_state="
              << state_name(res.final_state) << " d_r=" << res.d_r
              << " d_r_valid=" << (res.d_r_valid ? 1 : 0) << " trajectory=" << traj << "\n";
    return 0;
}

int cmd_run_batch(const RunConfig &cfg) {
    FieldSpec field = load_field(cfg.field_path);
    RobotSpec robot = cfg.robot;
    CameraModel cam;
    ControlConfig control;
    NoiseProfile noise = NoiseProfile::by_name(cfg.profile);
    std::vector<TrialSetup> trials = cfg.trials;
    if (trials.empty()) trials = default_batch_setups(field, 1);
    log_info("running batch of " + std::to_string(trials.size()) + " trials, profile " +
             noise.name);
    std::vector<TrialResult> batch = run_batch(field, robot, cam, control, noise, trials);
    BatchReport report = write_batch_report(cfg.out_dir, batch, field, robot);
    std::cout << "trials=" << batch.size() << " success_rate=" << report.success
              << " errors=" << report.errors_csv << " summary=" << report.summary_csv << "\n";
    return 0;
}

int cmd_detect(const std::string &mask_path, const std::string &depth_path,
               const std::string &intr_path, const std::string &turn,
               const std::string &overlay_path) {
    SegMask mask = load_mask_pgm(mask_path);
    DepthImage depth = load_depth_pgm(depth_path);
    CameraModel cam = load_intrinsics(intr_path);
    if (mask.width != depth.width || mask.height != depth.height ||
        mask.width != cam.width || mask.height != cam.height)
        throw std::runtime_error("mask/depth/intrinsics dimensions do not match");

    TurnDirection td = parse_turn(turn);
    EorDetection eor = detect_eor(mask);
    ReentryResult res = locate_reentry(mask, depth, eor, cam, td);
    if (!overlay_path.empty()) {
        ScanRoi roi = build_roi(mask, eor, td);
        draw_overlay(mask, eor, roi, res, overlay_path);
    }
    std::cout << "valid=" << (res.valid ? 1 : 0);
    if (eor.valid) std::cout << " eor_row=" << eor.image_row;
    if (res.valid) {
        std::cout << " R_px=" << res.R_px.u << "," << res.R_px.v
                  << " R_3d=" << res.R_3d.x << "," << res.R_3d.y << "," << res.R_3d.z
                  << " d_r=" << res.d_r << " P_t=" << res.P_t.u << "," << res.P_t.v
                  << " A_t=" << res.A_t.u << "," << res.A_t.v;
    }
    std::cout << "\n";
    return 0;
}

int cmd_report(const std::string &in_dir, const std::string &field_path,
               const std::string &out_dir) {
    std::vector<TransitionErrorSet> errors =
        read_errors_csv((fs::path(in_dir) / "errors.csv").string());
    if (errors.empty()) throw std::runtime_error("no errors found in " + in_dir);
    ErrorTable table = alpha_table(errors);
    fs::create_directories(out_dir);
    std::string out = (fs::path(out_dir) / "summary.csv").string();
    std::ofstream os(out, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + out);
    os << "transition,count,median_error,median_abs_error,alpha_pct,unit\n";
    os.precision(17);
    for (int i = 0; i < kTransitionCount; ++i) {
        const ErrorTable::Row &row = table.rows[i];
        Transition t = static_cast<Transition>(i);
        os << transition_name(t) << "," << row.count << ",";
        if (row.median) os << *row.median; else os << "na";
        os << ",";
        if (row.median_abs) os << *row.median_abs; else os << "na";
        os << ",";
        if (row.alpha_pct) os << *row.alpha_pct; else os << "na";
        os << "," << (transition_is_angle(t) ? "deg" : "m") << "\n";
    }
    os << "e_max_dist_m," << table.e_max_dist << "\n";
    os << "e_max_angle_deg," << table.e_max_angle << "\n";
    std::cout << "summary=" << out << " trials=" << table.trials << "\n";
    (void)field_path;
    return 0;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"rowswitch: vision-based crop row switching simulator and analysis toolkit"};
    app.require_subcommand(1);

    // generate-field
    auto *gen = app.add_subcommand("generate-field", "write a synthetic field fixture");
    FieldConfig fcfg;
    uint64_t gen_seed = 1;
    std::string gen_out = "field.json";
    double angle_jitter_deg = rad2deg(fcfg.angle_jitter);
    gen->add_option("--rows", fcfg.row_count, "number of crop rows");
    gen->add_option("--length", fcfg.row_length, "row length (m)");
    gen->add_option("--inter-row", fcfg.nominal_inter_row, "nominal inter-row distance (m)");
    gen->add_option("--headland", fcfg.headland_depth, "headland depth (m)");
    gen->add_option("--spacing-jitter", fcfg.spacing_jitter, "spacing jitter fraction");
    gen->add_option("--angle-jitter", angle_jitter_deg, "planting angle jitter (deg)");
    gen->add_option("--gaps", fcfg.gaps_per_row, "gaps per row");
    gen->add_option("--gap-length", fcfg.gap_length, "gap length (m)");
    gen->add_option("--roughness", fcfg.roughness_amplitude, "headland roughness amplitude");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--out", gen_out, "output field file");

    // run-trial
    auto *trial = app.add_subcommand("run-trial", "run a single switching trial");
    std::string trial_field, trial_turn = "left", trial_profile = "none",
                trial_out = "trial_out";
    int trial_row = 0;
    uint64_t trial_seed = 1;
    trial->add_option("--field", trial_field, "field fixture file")->required();
    trial->add_option("--row", trial_row, "row to switch from");
    trial->add_option("--turn", trial_turn, "left|right");
    trial->add_option("--seed", trial_seed, "trial seed");
    trial->add_option("--profile", trial_profile, "noise profile name or json path");
    trial->add_option("--out", trial_out, "output directory");

    // run-batch
    auto *batch = app.add_subcommand("run-batch", "run a batch of trials and write reports");
    std::string batch_config, batch_field, batch_profile = "none", batch_out = "batch_out";
    uint64_t batch_seed = 1;
    batch->add_option("--config", batch_config, "run config json");
    batch->add_option("--field", batch_field, "field fixture file (default 18-trial batch)");
    batch->add_option("--profile", batch_profile, "noise profile name or json path");
    batch->add_option("--seed", batch_seed, "base seed for the default batch");
    batch->add_option("--out", batch_out, "output directory");

    // detect
    auto *detect = app.add_subcommand("detect", "run the re-entry detector on image files");
    std::string det_mask, det_depth, det_intr, det_turn = "left", det_overlay;
    detect->add_option("--mask", det_mask, "skeleton mask pgm")->required();
    detect->add_option("--depth", det_depth, "16-bit depth pgm (mm)")->required();
    detect->add_option("--intrinsics", det_intr, "intrinsics sidecar")->required();
    detect->add_option("--turn", det_turn, "left|right");
    detect->add_option("--overlay", det_overlay, "annotated overlay ppm to write");

    // report
    auto *rep = app.add_subcommand("report", "recompute summary from an errors.csv");
    std::string rep_in, rep_field, rep_out = "report_out";
    rep->add_option("--in", rep_in, "directory containing errors.csv")->required();
    rep->add_option("--field", rep_field, "field fixture file (optional)");
    rep->add_option("--out", rep_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            fcfg.angle_jitter = deg2rad(angle_jitter_deg);
            return cmd_generate_field(fcfg, gen_seed, gen_out);
        }
        if (trial->parsed())
            return cmd_run_trial(trial_field, trial_row, trial_turn, trial_seed, trial_profile,
                                 trial_out);
        if (batch->parsed()) {
            RunConfig cfg;
            if (!batch_config.empty()) {
                cfg = load_run_config(batch_config);
            } else {
                if (batch_field.empty())
                    throw std::runtime_error("run-batch needs --config or --field");
                cfg.field_path = batch_field;
                cfg.profile = batch_profile;
                cfg.out_dir = batch_out;
                FieldSpec field = load_field(batch_field);
                cfg.trials = default_batch_setups(field, batch_seed);
            }
            return cmd_run_batch(cfg);
        }
        if (detect->parsed())
            return cmd_detect(det_mask, det_depth, det_intr, det_turn, det_overlay);
        if (rep->parsed()) return cmd_report(rep_in, rep_field, rep_out);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
