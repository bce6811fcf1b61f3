#pragma once

#include <cstdint>
#include <vector>

namespace rowswitch {

struct PxPoint {
    int u = 0;  // column
    int v = 0;  // row
    bool operator==(const PxPoint &) const = default;
};

// Midpoint line rasterization with exact integer arithmetic. The pixel set is
// independent of endpoint order (the traversal is canonicalized to start at
// the smaller (v,u) endpoint) and ties round toward the start coordinate,
// which keeps the result consistent under horizontal mirroring.
std::vector<PxPoint> raster_line(PxPoint a, PxPoint b);

// Same pixel set as raster_line but ordered from a to b.
std::vector<PxPoint> raster_path(PxPoint a, PxPoint b);

}  // namespace rowswitch
