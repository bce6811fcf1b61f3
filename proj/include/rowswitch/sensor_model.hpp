#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "rowswitch/field_model.hpp"
#include "rowswitch/geometry.hpp"
#include "rowswitch/raster.hpp"
#include "rowswitch/robot_model.hpp"

namespace rowswitch {

// Generic pinhole model of the front-mounted depth camera. The mask and the
// depth image share intrinsics and resolution. The mount is expressed in the
// robot body frame (x forward, y left, z up); pitch tilts the optical axis
// down. Defaults place the camera at the front edge of the default robot.
struct CameraModel {
    int width = 640;
    int height = 480;
    double fx = 460.0;
    double fy = 460.0;
    double cx = 319.5;
    double cy = 239.5;
    double mount_forward = 0.263;
    double mount_lateral = 0.0;
    double mount_height = 0.30;
    double pitch = deg2rad(25.0);
};

struct SegMask {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> data;

    void resize(int w, int h) {
        width = w;
        height = h;
        data.assign(static_cast<size_t>(w) * h, 0);
    }
    bool inside(int u, int v) const { return u >= 0 && v >= 0 && u < width && v < height; }
    uint8_t at(int u, int v) const { return data[static_cast<size_t>(v) * width + u]; }
    uint8_t at(PxPoint p) const { return at(p.u, p.v); }
    void set(int u, int v, uint8_t x) { data[static_cast<size_t>(v) * width + u] = x; }
};

struct DepthImage {
    int width = 0;
    int height = 0;
    std::vector<float> data;  // range along the pixel ray in metres, 0 = invalid

    void resize(int w, int h) {
        width = w;
        height = h;
        data.assign(static_cast<size_t>(w) * h, 0.0f);
    }
    float at(int u, int v) const { return data[static_cast<size_t>(v) * width + u]; }
    void set(int u, int v, float d) { data[static_cast<size_t>(v) * width + u] = d; }
};

struct EorDetection {
    int image_row = -1;
    bool valid = false;
};

// World-frame camera placement for one robot pose.
struct CameraView {
    Vec3 origin;
    Vec3 right;    // image u
    Vec3 down;     // image v
    Vec3 forward;  // optical axis
    Vec2 ground;   // camera position projected on the ground plane
    const CameraModel *cam = nullptr;
};

CameraView make_view(const CameraModel &cam, const Pose2D &robot);

struct PixelHit {
    double u = 0.0;
    double v = 0.0;
    double range = 0.0;
};

// Projects a world point; empty when behind the near plane.
std::optional<PixelHit> project(const CameraView &view, const Vec3 &world);
// Ray-ground intersection for a (possibly fractional) pixel; empty above the
// horizon. Returns the world-frame ground point.
std::optional<Vec3> backproject_ground(const CameraView &view, double u, double v);
// Range along the ray for a ground-plane pixel; 0 above the horizon.
double ground_range(const CameraView &view, double u, double v);
// Point in camera coordinates at the given range along the pixel ray.
Vec3 camera_point(const CameraModel &cam, double u, double v, double range);
// Body-frame coordinates of a camera-frame point (x forward, y left, z up).
Vec3 camera_to_body(const CameraModel &cam, const Vec3 &cam_pt);

struct RenderOptions {
    bool with_depth = false;
    // Range cap keeps the rasterized skeleton within a pixel of the true
    // ground line (one pixel at 4 m is under a centimetre laterally).
    double max_range = 4.0;
    double sample_step = 0.02;  // world-space sampling of row polylines
    double near_clip = 0.05;
    double salt_prob = 0.0;    // spurious skeleton pixels
    double pepper_prob = 0.0;  // dropped skeleton pixels
    int dilate = 0;            // optional mask dilation radius
};

// Projects every visible non-gap row segment into a 1-px skeleton polyline;
// optionally fills a dense ground-plane depth image.
void render(const FieldSpec &field, const Pose2D &robot, const CameraModel &cam,
            SegMask &mask, DepthImage *depth, const RenderOptions &opts = {},
            std::mt19937_64 *rng = nullptr);

// Topmost image row of the central skeleton trace, smoothed by requiring a
// run of `smooth_window` consecutive populated rows; invalid when the central
// third of the image holds no skeleton.
EorDetection detect_eor(const SegMask &mask, int smooth_window = 5);

struct SimilarityConfig {
    double threshold = 0.3;
    // Ground patch tracked beyond the detected end of row. The depth default
    // is calibrated so the noise-free score crosses the default threshold
    // when the robot front reaches the end of the row.
    double ref_depth = 0.32;
    double ref_half_width = 0.15;
    double far_clip = 6.0;
};

// What the robot keeps from state A: capture pose, EOR detection, the mask
// cropped below the EOR line, and the back-projected EOR ground point.
struct ReferenceScene {
    Pose2D pose;
    EorDetection eor;
    SegMask cropped;
    Vec2 eor_ground_point;
    double eor_ground_distance = 0.0;
    bool valid = false;
};

ReferenceScene capture_reference(const SegMask &mask, const EorDetection &eor,
                                 const CameraModel &cam, const Pose2D &robot);

// Scene similarity against the reference captured at state A. Pluggable so a
// feature-based scorer can replace the geometric default.
class SceneSimilarityScorer {
  public:
    virtual ~SceneSimilarityScorer() = default;
    virtual double score(const Pose2D &current) const = 0;
};

// Default scorer: fraction of the reference ground footprint (a fixed-width
// patch beyond the EOR captured at state A) still inside the current camera
// footprint. 1 at the capture pose, non-increasing as the robot advances.
class FootprintOverlapScorer : public SceneSimilarityScorer {
  public:
    FootprintOverlapScorer(const CameraModel &cam, const ReferenceScene &ref,
                           const SimilarityConfig &cfg);

    double score(const Pose2D &current) const override;
    const Polygon &reference_footprint() const { return ref_footprint_; }

  private:
    CameraModel cam_;
    SimilarityConfig cfg_;
    Polygon ref_footprint_;
    double ref_area_ = 0.0;
};

std::unique_ptr<SceneSimilarityScorer> make_default_scorer(const CameraModel &cam,
                                                           const ReferenceScene &ref,
                                                           const SimilarityConfig &cfg);

}  // namespace rowswitch
