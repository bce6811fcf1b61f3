#include "rowswitch/reentry_detector.hpp"

#include <algorithm>
#include <cmath>

namespace rowswitch {

long line_pixel_sum(const SegMask &mask, PxPoint a, PxPoint b) {
    long sum = 0;
    for (const PxPoint &p : raster_line(a, b))
        if (mask.inside(p.u, p.v)) sum += mask.at(p);
    return sum;
}

namespace {

// Skeleton pixel in the central-third column band nearest the centre column,
// searching rows [v0, v1).
std::optional<PxPoint> central_band_pixel(const SegMask &mask, int v0, int v1) {
    int lo = mask.width / 3, hi = 2 * mask.width / 3;
    double cx = (mask.width - 1) * 0.5;
    for (int v = std::max(0, v0); v < std::min(mask.height, v1); ++v) {
        int best = -1;
        for (int u = lo; u < hi; ++u)
            if (mask.at(u, v) && (best < 0 || std::abs(u - cx) < std::abs(best - cx)))
                best = u;
        if (best >= 0) return PxPoint{best, v};
    }
    return std::nullopt;
}

void append_path(std::vector<PxPoint> &path, PxPoint a, PxPoint b) {
    std::vector<PxPoint> px = raster_path(a, b);
    size_t skip = (!path.empty() && !px.empty() && path.back() == px.front()) ? 1 : 0;
    path.insert(path.end(), px.begin() + skip, px.end());
}

}  // namespace

ScanRoi build_roi(const SegMask &mask, const EorDetection &eor, TurnDirection turn) {
    ScanRoi roi;
    roi.side = turn;
    if (!eor.valid || mask.width < 2 || mask.height < 2) return roi;

    // A: top of the central trace, at the detected EOR row.
    auto a = central_band_pixel(mask, eor.image_row, eor.image_row + 8);
    if (!a) return roi;
    roi.A = *a;

    // B: bottom of the central trace.
    std::optional<PxPoint> b;
    for (int v = mask.height - 1; v > roi.A.v && !b; --v)
        b = central_band_pixel(mask, v, v + 1);
    if (!b || b->v <= roi.A.v) return roi;
    roi.B = *b;

    int side_u = turn == TurnDirection::Left ? 0 : mask.width - 1;
    roi.L1 = {side_u, 0};
    roi.L2 = {side_u, mask.height - 1};

    append_path(roi.corner_path, roi.L1, roi.L2);
    append_path(roi.corner_path, roi.L2, roi.B);
    roi.top_segment = raster_path(roi.A, roi.L1);
    roi.valid = true;
    return roi;
}

std::optional<PxPoint> scan_pt(const SegMask &mask, PxPoint A, const ScanRoi &roi) {
    if (!roi.valid || roi.corner_path.empty()) return std::nullopt;
    long best = -1;
    PxPoint best_p{};
    for (const PxPoint &p : roi.corner_path) {
        long s = line_pixel_sum(mask, A, p);
        if (s > best) {
            best = s;
            best_p = p;
        }
    }
    long anchor = mask.inside(A.u, A.v) ? mask.at(A) : 0;
    if (best - anchor <= 0) return std::nullopt;  // nothing beyond the anchor pixel
    return best_p;
}

std::optional<PxPoint> scan_at(const SegMask &mask, PxPoint P_t, const ScanRoi &roi) {
    if (!roi.valid || roi.top_segment.empty()) return std::nullopt;
    long best = -1;
    PxPoint best_a{};
    for (const PxPoint &a : roi.top_segment) {
        long s = line_pixel_sum(mask, a, P_t);
        if (s > best) {
            best = s;
            best_a = a;
        }
    }
    long anchor = mask.inside(P_t.u, P_t.v) ? mask.at(P_t) : 0;
    if (best - anchor <= 0) return std::nullopt;
    return best_a;
}

void suppress_trace(SegMask &mask, PxPoint a, PxPoint b, int radius) {
    for (const PxPoint &p : raster_line(a, b))
        for (int dv = -radius; dv <= radius; ++dv)
            for (int du = -radius; du <= radius; ++du)
                if (mask.inside(p.u + du, p.v + dv)) mask.set(p.u + du, p.v + dv, 0);
}

namespace {

// Keeps only the skeleton of the row physically adjacent on the turn side:
// every pixel is back-projected through the depth image into the body frame,
// pixels are clustered by lateral offset, the robot's own row is the cluster
// nearest the centreline, and the scan target is the next cluster beyond it.
SegMask isolate_adjacent_row(const SegMask &mask, const DepthImage &depth,
                             const EorDetection &eor, const CameraModel &cam,
                             TurnDirection turn) {
    struct Px {
        double lat;
        int u, v;
    };
    std::vector<Px> pts;
    for (int v = eor.image_row; v < mask.height; ++v) {
        for (int u = 0; u < mask.width; ++u) {
            if (!mask.at(u, v)) continue;
            float r = v < depth.height && u < depth.width ? depth.at(u, v) : 0.0f;
            if (r <= 0.0f) continue;
            Vec3 body = camera_to_body(cam, camera_point(cam, u, v, r));
            pts.push_back({body.y, u, v});
        }
    }
    SegMask out;
    out.resize(mask.width, mask.height);
    if (pts.size() < 4) return out;

    std::sort(pts.begin(), pts.end(), [](const Px &a, const Px &b) { return a.lat < b.lat; });
    std::vector<std::pair<size_t, size_t>> clusters;
    size_t lo = 0;
    for (size_t i = 1; i <= pts.size(); ++i) {
        if (i == pts.size() || pts[i].lat - pts[i - 1].lat > 0.2) {
            if (i - lo >= 4) clusters.emplace_back(lo, i);
            lo = i;
        }
    }
    if (clusters.empty()) return out;

    auto median_of = [&](const std::pair<size_t, size_t> &c) {
        return pts[c.first + (c.second - c.first) / 2].lat;
    };
    size_t own = 0;
    for (size_t i = 1; i < clusters.size(); ++i)
        if (std::abs(median_of(clusters[i])) < std::abs(median_of(clusters[own]))) own = i;

    const double side = turn_sign(turn);
    double own_lat = median_of(clusters[own]);
    int best = -1;
    double best_gap = 1e18;
    for (size_t i = 0; i < clusters.size(); ++i) {
        if (i == own) continue;
        double gap = side * (median_of(clusters[i]) - own_lat);
        if (gap > 0.05 && gap < best_gap) {
            best_gap = gap;
            best = static_cast<int>(i);
        }
    }
    if (best < 0) return out;
    // Dilated by one pixel: near-tangent scan lines then accumulate decisive
    // sums, which keeps the two argmax stages from settling on a grazing
    // crossing of the thin skeleton.
    for (size_t i = clusters[best].first; i < clusters[best].second; ++i)
        for (int dv = -1; dv <= 1; ++dv)
            for (int du = -1; du <= 1; ++du)
                if (out.inside(pts[i].u + du, pts[i].v + dv))
                    out.set(pts[i].u + du, pts[i].v + dv, 1);
    return out;
}

}  // namespace

ReentryResult locate_reentry(const SegMask &mask, const DepthImage &depth,
                             const EorDetection &eor, const CameraModel &cam,
                             TurnDirection turn) {
    ReentryResult res;
    ScanRoi roi = build_roi(mask, eor, turn);
    if (!roi.valid) return res;

    SegMask scan_mask = isolate_adjacent_row(mask, depth, eor, cam, turn);

    // Stage-1 anchor: the central trace's chord extended to the image top,
    // toward the vanishing point the near-parallel rows share. Scan lines
    // from up there run nearly along the adjacent trace, so the argmax peaks
    // where the line rides it instead of at an arbitrary grazing crossing.
    PxPoint apex = roi.A;
    if (roi.B.v > roi.A.v) {
        double slope = static_cast<double>(roi.B.u - roi.A.u) / (roi.B.v - roi.A.v);
        double u0 = roi.A.u - slope * roi.A.v;
        apex = {static_cast<int>(std::lround(std::clamp(u0, 0.0, mask.width - 1.0))), 0};
    }

    auto p_t = scan_pt(scan_mask, apex, roi);
    if (!p_t) return res;
    auto a_t = scan_at(scan_mask, *p_t, roi);
    if (!a_t) return res;
    res.P_t = *p_t;
    res.A_t = *a_t;

    double dv = static_cast<double>(p_t->v - a_t->v);
    if (std::abs(dv) < 1e-9) return res;  // line parallel to the EOR row
    double t = (eor.image_row - a_t->v) / dv;
    double u_r = a_t->u + t * (p_t->u - a_t->u);
    if (u_r < 0.0 || u_r > mask.width - 1) return res;

    res.R_px = {static_cast<int>(std::lround(u_r)), eor.image_row};
    if (res.R_px.v < 0 || res.R_px.v >= depth.height || res.R_px.u >= depth.width)
        return res;
    float range = depth.at(res.R_px.u, res.R_px.v);
    if (range <= 0.0f) return res;

    res.R_3d = camera_point(cam, u_r, eor.image_row, range);
    Vec3 body = camera_to_body(cam, res.R_3d);
    res.d_r = std::abs(body.y);
    res.valid = res.d_r > 0.0;
    return res;
}

}  // namespace rowswitch
