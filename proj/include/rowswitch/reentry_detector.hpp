#pragma once

#include <optional>
#include <vector>

#include "rowswitch/raster.hpp"
#include "rowswitch/sensor_model.hpp"

namespace rowswitch {

enum class TurnDirection { Left, Right };

inline int turn_sign(TurnDirection t) { return t == TurnDirection::Left ? 1 : -1; }
inline const char *turn_name(TurnDirection t) {
    return t == TurnDirection::Left ? "left" : "right";
}

// Scan region for the re-entry point search. A and B anchor the central row's
// skeleton trace; L1/L2 are the image corners on the turn side. The P scan
// sweeps corner_path (L1 down the side edge to L2, then across to B); the
// second scan sweeps top_segment (A to L1).
struct ScanRoi {
    TurnDirection side = TurnDirection::Left;
    PxPoint A, B, L1, L2;
    std::vector<PxPoint> corner_path;
    std::vector<PxPoint> top_segment;
    bool valid = false;
};

struct ReentryResult {
    PxPoint R_px;
    Vec3 R_3d;        // camera frame, metres
    double d_r = 0.0; // lateral distance to the next row in the ground frame
    PxPoint P_t, A_t;
    bool valid = false;
};

// Sum of mask values along the rasterized segment a-b (endpoint order does
// not matter).
long line_pixel_sum(const SegMask &mask, PxPoint a, PxPoint b);

ScanRoi build_roi(const SegMask &mask, const EorDetection &eor, TurnDirection turn);

// argmax over P on the corner path of the pixel sum along A-P; ties resolve
// to the earliest P in path order. Empty when no line collects anything
// beyond the anchor pixel itself.
std::optional<PxPoint> scan_pt(const SegMask &mask, PxPoint A, const ScanRoi &roi);

// argmax over A' on the top segment of the pixel sum along A'-P_t; same tie
// rule, scanning from A toward L1.
std::optional<PxPoint> scan_at(const SegMask &mask, PxPoint P_t, const ScanRoi &roi);

// Full detection: ROI construction, the two scans (run on a working mask with
// the central trace suppressed so the scans lock onto the adjacent row),
// intersection with the EOR image row, and depth back-projection.
ReentryResult locate_reentry(const SegMask &mask, const DepthImage &depth,
                             const EorDetection &eor, const CameraModel &cam,
                             TurnDirection turn);

// Erases skeleton pixels within `radius` pixels of the segment a-b.
void suppress_trace(SegMask &mask, PxPoint a, PxPoint b, int radius);

}  // namespace rowswitch
