#include "rowswitch/sensor_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rowswitch {

CameraView make_view(const CameraModel &cam, const Pose2D &robot) {
    CameraView view;
    view.cam = &cam;
    double c = std::cos(robot.theta), s = std::sin(robot.theta);
    Vec2 mount{cam.mount_forward, cam.mount_lateral};
    Vec2 g{robot.x + c * mount.x - s * mount.y, robot.y + s * mount.x + c * mount.y};
    view.ground = g;
    view.origin = {g.x, g.y, cam.mount_height};
    double cp = std::cos(cam.pitch), sp = std::sin(cam.pitch);
    view.forward = {cp * c, cp * s, -sp};
    view.right = {s, -c, 0.0};
    view.down = {-sp * c, -sp * s, -cp};
    return view;
}

std::optional<PixelHit> project(const CameraView &view, const Vec3 &world) {
    Vec3 d = world - view.origin;
    double z = d.dot(view.forward);
    if (z < 1e-6) return std::nullopt;
    double x = d.dot(view.right);
    double y = d.dot(view.down);
    const CameraModel &cam = *view.cam;
    PixelHit hit;
    hit.u = cam.fx * x / z + cam.cx;
    hit.v = cam.fy * y / z + cam.cy;
    hit.range = d.norm();
    return hit;
}

std::optional<Vec3> backproject_ground(const CameraView &view, double u, double v) {
    const CameraModel &cam = *view.cam;
    Vec3 dir = view.right * ((u - cam.cx) / cam.fx) + view.down * ((v - cam.cy) / cam.fy) +
               view.forward;
    if (dir.z >= -1e-9) return std::nullopt;  // at or above the horizon
    double t = -view.origin.z / dir.z;
    return view.origin + dir * t;
}

double ground_range(const CameraView &view, double u, double v) {
    const CameraModel &cam = *view.cam;
    Vec3 dir = view.right * ((u - cam.cx) / cam.fx) + view.down * ((v - cam.cy) / cam.fy) +
               view.forward;
    if (dir.z >= -1e-9) return 0.0;
    double t = -view.origin.z / dir.z;
    return t * dir.norm();
}

Vec3 camera_point(const CameraModel &cam, double u, double v, double range) {
    Vec3 dir{(u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0};
    return dir * (range / dir.norm());
}

Vec3 camera_to_body(const CameraModel &cam, const Vec3 &p) {
    double cp = std::cos(cam.pitch), sp = std::sin(cam.pitch);
    // Camera axes in body coordinates: right=(0,-1,0), down=(-sp,0,-cp),
    // forward=(cp,0,-sp).
    return {cam.mount_forward - sp * p.y + cp * p.z,
            cam.mount_lateral - p.x,
            cam.mount_height - cp * p.y - sp * p.z};
}

namespace {

void draw_polyline_segment(SegMask &mask, const PixelHit &a, const PixelHit &b) {
    // Skip wild segments whose endpoints are far outside the image.
    const double margin = 200.0;
    if (a.u < -margin || a.u > mask.width + margin || b.u < -margin || b.u > mask.width + margin)
        return;
    if (a.v < -margin || a.v > mask.height + margin || b.v < -margin || b.v > mask.height + margin)
        return;
    PxPoint pa{static_cast<int>(std::lround(a.u)), static_cast<int>(std::lround(a.v))};
    PxPoint pb{static_cast<int>(std::lround(b.u)), static_cast<int>(std::lround(b.v))};
    for (const PxPoint &p : raster_line(pa, pb))
        if (mask.inside(p.u, p.v)) mask.set(p.u, p.v, 1);
}

}  // namespace

void render(const FieldSpec &field, const Pose2D &robot, const CameraModel &cam,
            SegMask &mask, DepthImage *depth, const RenderOptions &opts,
            std::mt19937_64 *rng) {
    CameraView view = make_view(cam, robot);
    if (view.forward.z >= 0.0)
        throw std::runtime_error("render: camera does not look at the ground");

    mask.resize(cam.width, cam.height);

    for (const CropRow &row : field.rows) {
        double len = row.length();
        for (const auto &[t0, t1] : row.solid_intervals()) {
            double s0 = t0 * len, s1 = t1 * len;
            std::optional<PixelHit> prev;
            for (double s = s0; s <= s1 + 1e-9; s += opts.sample_step) {
                double sc = std::min(s, s1);
                Vec2 p2 = row.point_at(sc / len);
                double d2 = (p2 - view.ground).norm();
                std::optional<PixelHit> hit;
                if (d2 <= opts.max_range) {
                    Vec3 p3{p2.x, p2.y, 0.0};
                    hit = project(view, p3);
                    if (hit && hit->range < opts.near_clip) hit.reset();
                }
                if (hit && prev) draw_polyline_segment(mask, *prev, *hit);
                prev = hit;
                if (sc >= s1) break;
            }
        }
    }

    if (opts.dilate > 0) {
        SegMask src = mask;
        for (int v = 0; v < mask.height; ++v)
            for (int u = 0; u < mask.width; ++u) {
                if (!src.at(u, v)) continue;
                for (int dv = -opts.dilate; dv <= opts.dilate; ++dv)
                    for (int du = -opts.dilate; du <= opts.dilate; ++du)
                        if (mask.inside(u + du, v + dv)) mask.set(u + du, v + dv, 1);
            }
    }

    if (rng && (opts.salt_prob > 0.0 || opts.pepper_prob > 0.0)) {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (int v = 0; v < mask.height; ++v)
            for (int u = 0; u < mask.width; ++u) {
                if (mask.at(u, v)) {
                    if (opts.pepper_prob > 0.0 && unit(*rng) < opts.pepper_prob)
                        mask.set(u, v, 0);
                } else if (opts.salt_prob > 0.0 && unit(*rng) < opts.salt_prob) {
                    mask.set(u, v, 1);
                }
            }
    }

    if (depth) {
        depth->resize(cam.width, cam.height);
        for (int v = 0; v < cam.height; ++v)
            for (int u = 0; u < cam.width; ++u) {
                double r = ground_range(view, u, v);
                if (r > 0.0 && r <= 4.0 * opts.max_range)
                    depth->set(u, v, static_cast<float>(r));
            }
    }
}

EorDetection detect_eor(const SegMask &mask, int smooth_window) {
    EorDetection det;
    if (mask.width == 0 || mask.height == 0) return det;
    int lo = mask.width / 3;
    int hi = 2 * mask.width / 3;

    std::vector<uint8_t> present(static_cast<size_t>(mask.height), 0);
    bool any = false;
    for (int v = 0; v < mask.height; ++v) {
        for (int u = lo; u < hi; ++u) {
            if (mask.at(u, v)) {
                present[v] = 1;
                any = true;
                break;
            }
        }
    }
    if (!any) return det;

    int run = 0;
    int window = std::max(1, smooth_window);
    for (int v = 0; v < mask.height; ++v) {
        run = present[v] ? run + 1 : 0;
        if (run >= window) {
            det.image_row = v - window + 1;
            det.valid = true;
            return det;
        }
    }
    return det;  // only specks shorter than the window: treated as no skeleton
}

ReferenceScene capture_reference(const SegMask &mask, const EorDetection &eor,
                                 const CameraModel &cam, const Pose2D &robot) {
    ReferenceScene ref;
    if (!eor.valid) return ref;
    ref.pose = robot;
    ref.eor = eor;

    // Column of the central trace at the EOR row.
    int lo = mask.width / 3, hi = 2 * mask.width / 3;
    double cx = cam.cx;
    int best_u = -1;
    for (int v = eor.image_row; v < std::min(mask.height, eor.image_row + 8) && best_u < 0; ++v)
        for (int u = lo; u < hi; ++u)
            if (mask.at(u, v) &&
                (best_u < 0 || std::abs(u - cx) < std::abs(best_u - cx)))
                best_u = u;
    if (best_u < 0) best_u = static_cast<int>(cx);

    CameraView view = make_view(cam, robot);
    auto ground = backproject_ground(view, best_u, eor.image_row);
    if (!ground) return ref;
    ref.eor_ground_point = {ground->x, ground->y};
    ref.eor_ground_distance = (ref.eor_ground_point - view.ground).norm();

    ref.cropped.resize(mask.width, std::max(0, mask.height - eor.image_row));
    for (int v = eor.image_row; v < mask.height; ++v)
        for (int u = 0; u < mask.width; ++u)
            if (mask.at(u, v)) ref.cropped.set(u, v - eor.image_row, 1);
    ref.valid = true;
    return ref;
}

namespace {

// Ground footprint of the camera as a trapezoid: near edge at the bottom-row
// ray, far edge at far_clip, sides at the horizontal field of view.
Polygon camera_footprint(const CameraModel &cam, const Pose2D &robot, double far_clip) {
    CameraView view = make_view(cam, robot);
    double near_d = 0.1;
    if (auto g = backproject_ground(view, cam.cx, cam.height - 1))
        near_d = (Vec2{g->x, g->y} - view.ground).norm();
    double half_tan = (cam.width * 0.5) / cam.fx;
    Vec2 fwd = robot.heading();
    Vec2 left = fwd.perp();
    Vec2 base = view.ground;
    Vec2 n0 = base + fwd * near_d;
    Vec2 f0 = base + fwd * far_clip;
    return {n0 - left * (near_d * half_tan), f0 - left * (far_clip * half_tan),
            f0 + left * (far_clip * half_tan), n0 + left * (near_d * half_tan)};
}

}  // namespace

FootprintOverlapScorer::FootprintOverlapScorer(const CameraModel &cam, const ReferenceScene &ref,
                                               const SimilarityConfig &cfg)
    : cam_(cam), cfg_(cfg) {
    if (!ref.valid) throw std::runtime_error("similarity: reference scene missing");
    Vec2 fwd = ref.pose.heading();
    Vec2 left = fwd.perp();
    Vec2 base = ref.eor_ground_point;
    double w = cfg_.ref_half_width;
    ref_footprint_ = {base - left * w, base + fwd * cfg_.ref_depth - left * w,
                      base + fwd * cfg_.ref_depth + left * w, base + left * w};
    ref_area_ = std::abs(polygon_area(ref_footprint_));
}

double FootprintOverlapScorer::score(const Pose2D &current) const {
    if (ref_area_ <= 0.0) return 0.0;
    Polygon fp = camera_footprint(cam_, current, cfg_.far_clip);
    if (polygon_area(fp) < 0.0) std::reverse(fp.begin(), fp.end());
    Polygon overlap = clip_convex(ref_footprint_, fp);
    double a = std::abs(polygon_area(overlap));
    return std::clamp(a / ref_area_, 0.0, 1.0);
}

std::unique_ptr<SceneSimilarityScorer> make_default_scorer(const CameraModel &cam,
                                                           const ReferenceScene &ref,
                                                           const SimilarityConfig &cfg) {
    return std::make_unique<FootprintOverlapScorer>(cam, ref, cfg);
}

}  // namespace rowswitch
