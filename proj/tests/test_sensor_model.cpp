#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "rowswitch/field_model.hpp"
#include "rowswitch/sensor_model.hpp"

using namespace rowswitch;

namespace {

FieldSpec plain_field() {
    FieldConfig cfg;
    cfg.spacing_jitter = 0.0;
    cfg.angle_jitter = 0.0;
    cfg.endpoint_jitter = 0.0;
    cfg.gaps_per_row = 0;
    cfg.roughness_amplitude = 0.0;
    return generate_field(cfg, 1);
}

// Robot centred on row 4 with the camera `dist` before the row end.
Pose2D pose_on_row(const FieldSpec &field, double dist, const CameraModel &cam) {
    const CropRow &row = field.row(4);
    return {row.end.x - dist - cam.mount_forward, row.end.y, 0.0};
}

double min_distance_to_row_lines(const FieldSpec &field, const Vec2 &p) {
    double best = 1e18;
    for (const CropRow &row : field.rows)
        best = std::min(best, std::abs(row.direction().cross(p - row.start)));
    return best;
}

double min_distance_to_row_segments(const FieldSpec &field, const Vec2 &p) {
    double best = 1e18;
    for (const CropRow &row : field.rows) {
        Vec2 d = row.end - row.start;
        double t = std::clamp((p - row.start).dot(d) / d.norm2(), 0.0, 1.0);
        best = std::min(best, (p - (row.start + d * t)).norm());
    }
    return best;
}

}  // namespace

TEST_CASE("render: centred robot puts a skeleton through the image centre") {
    FieldSpec field = plain_field();
    CameraModel cam;
    SegMask mask;
    render(field, pose_on_row(field, 2.0, cam), cam, mask, nullptr);

    int populated_rows = 0;
    for (int v = mask.height / 2; v < mask.height; ++v) {
        int lo = -1, hi = -1;
        for (int u = 0; u < mask.width; ++u) {
            // Only look near the centre: side rows appear far from it.
            if (std::abs(u - cam.cx) < 40 && mask.at(u, v)) {
                if (lo < 0) lo = u;
                hi = u;
            }
        }
        if (lo < 0) continue;
        ++populated_rows;
        CHECK(std::abs(lo - cam.cx) <= 2.0);
        CHECK(std::abs(hi - cam.cx) <= 2.0);
    }
    CHECK(populated_rows > 100);
}

TEST_CASE("render/back-project round trip lands on a crop row") {
    FieldSpec field = plain_field();
    CameraModel cam;
    Pose2D pose = pose_on_row(field, 1.5, cam);
    SegMask mask;
    DepthImage depth;
    render(field, pose, cam, mask, &depth);
    CameraView view = make_view(cam, pose);

    int checked = 0;
    for (int v = 0; v < mask.height; ++v)
        for (int u = 0; u < mask.width; ++u) {
            if (!mask.at(u, v)) continue;
            float r = depth.at(u, v);
            REQUIRE(r > 0.0f);  // ground visible under every skeleton pixel
            Vec3 dir = view.right * ((u - cam.cx) / cam.fx) +
                       view.down * ((v - cam.cy) / cam.fy) + view.forward;
            Vec3 p = view.origin + dir * (r / dir.norm());
            CHECK(std::abs(p.z) < 1e-6);
            // Within a centimetre of the row line; along the row the pixel
            // grid allows a small overhang at the row's very end.
            CHECK(min_distance_to_row_lines(field, {p.x, p.y}) <= 0.01);
            CHECK(min_distance_to_row_segments(field, {p.x, p.y}) <= 0.04);
            ++checked;
        }
    CHECK(checked > 300);
}

TEST_CASE("render: camera that cannot see the ground is an error") {
    FieldSpec field = plain_field();
    CameraModel cam;
    cam.pitch = deg2rad(-5.0);  // tilted up
    SegMask mask;
    CHECK_THROWS_AS(render(field, {0, 0, 0}, cam, mask, nullptr), std::runtime_error);
}

TEST_CASE("render: empty scene beyond the field") {
    FieldSpec field = plain_field();
    CameraModel cam;
    // Deep in the headland, facing away from the rows.
    Pose2D pose{field.field_edge.point.x + 1.0, 2.0, 0.0};
    SegMask mask;
    render(field, pose, cam, mask, nullptr);
    int count = 0;
    for (uint8_t p : mask.data) count += p;
    CHECK(count == 0);
}

TEST_CASE("detect_eor on synthetic masks") {
    SegMask mask;
    mask.resize(90, 60);
    CHECK_FALSE(detect_eor(mask).valid);  // empty

    for (int v = 0; v < 60; ++v) mask.set(45, v, 1);
    EorDetection det = detect_eor(mask);
    CHECK(det.valid);
    CHECK(det.image_row == 0);

    // A speck shorter than the smoothing window is ignored.
    mask.resize(90, 60);
    mask.set(45, 3, 1);
    mask.set(45, 4, 1);
    for (int v = 20; v < 60; ++v) mask.set(45, v, 1);
    det = detect_eor(mask);
    CHECK(det.valid);
    CHECK(det.image_row == 20);

    // Skeleton only outside the central third: invalid.
    mask.resize(90, 60);
    for (int v = 0; v < 60; ++v) mask.set(5, v, 1);
    CHECK_FALSE(detect_eor(mask).valid);
}

TEST_CASE("detect_eor distance accuracy and monotonicity") {
    FieldSpec field = plain_field();
    CameraModel cam;
    SegMask mask;
    int prev_row = -1;
    for (double dist = 2.0; dist >= 0.8; dist -= 0.05) {
        Pose2D pose = pose_on_row(field, dist, cam);
        render(field, pose, cam, mask, nullptr);
        EorDetection det = detect_eor(mask);
        REQUIRE(det.valid);
        CHECK(det.image_row >= prev_row);  // EOR line moves down the image
        prev_row = det.image_row;

        ReferenceScene probe = capture_reference(mask, det, cam, pose);
        REQUIRE(probe.valid);
        // Back-projected EOR position vs the true row end.
        CHECK(std::abs((probe.eor_ground_point - field.row(4).end).norm()) <= 0.05);
    }
}

TEST_CASE("similarity score: identity, decay, and stop point") {
    FieldSpec field = plain_field();
    CameraModel cam;
    SimilarityConfig cfg;
    Pose2D pose_a = pose_on_row(field, 1.45, cam);
    SegMask mask;
    render(field, pose_a, cam, mask, nullptr);
    EorDetection eor = detect_eor(mask);
    REQUIRE(eor.valid);
    ReferenceScene ref = capture_reference(mask, eor, cam, pose_a);
    REQUIRE(ref.valid);
    FootprintOverlapScorer scorer(cam, ref, cfg);

    CHECK(scorer.score(pose_a) == doctest::Approx(1.0).epsilon(1e-9));

    // Non-increasing along the forward ray; crosses the threshold within
    // 10 cm of the robot front reaching the true row end.
    double prev = 1.0;
    double crossing = -1.0;
    RobotSpec robot;
    for (double s = 0.0; s <= 2.5; s += 0.01) {
        Pose2D p = pose_a;
        p.x += s;
        double sc = scorer.score(p);
        CHECK(sc <= prev + 1e-9);
        if (crossing < 0.0 && sc < cfg.threshold) crossing = s;
        prev = sc;
    }
    REQUIRE(crossing > 0.0);
    Pose2D stop = pose_a;
    stop.x += crossing;
    double front_past_end = robot.front_of(stop).x - field.row(4).end.x;
    CHECK(std::abs(front_past_end) <= 0.10);

    // Far past the reference footprint the score reaches zero.
    Pose2D far = pose_a;
    far.x += 3.0;
    CHECK(scorer.score(far) == doctest::Approx(0.0));

    ReferenceScene missing;
    CHECK_THROWS_AS(FootprintOverlapScorer(cam, missing, cfg), std::runtime_error);
}
