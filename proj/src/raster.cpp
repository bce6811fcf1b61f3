#include "rowswitch/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace rowswitch {

namespace {

int64_t floor_div(int64_t a, int64_t b) {
    int64_t q = a / b, r = a % b;
    return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}

int64_t ceil_div(int64_t a, int64_t b) { return -floor_div(-a, b); }

// Nearest integer to n/d (d > 0), ties toward negative infinity.
int64_t round_half_down(int64_t n, int64_t d) { return ceil_div(2 * n - d, 2 * d); }
// Nearest integer to n/d (d > 0), ties toward positive infinity.
int64_t round_half_up(int64_t n, int64_t d) { return floor_div(2 * n + d, 2 * d); }

}  // namespace

std::vector<PxPoint> raster_line(PxPoint a, PxPoint b) {
    if (b.v < a.v || (b.v == a.v && b.u < a.u)) std::swap(a, b);
    const int64_t du = b.u - a.u;
    const int64_t dv = b.v - a.v;  // >= 0 after canonicalization
    std::vector<PxPoint> out;

    if (dv >= std::abs(du)) {
        // v-major: one pixel per image row.
        out.reserve(static_cast<size_t>(dv) + 1);
        if (dv == 0) {
            out.push_back(a);
            return out;
        }
        for (int64_t step = 0; step <= dv; ++step) {
            int64_t n = static_cast<int64_t>(a.u) * dv + step * du;
            int64_t u = du >= 0 ? round_half_down(n, dv) : round_half_up(n, dv);
            out.push_back({static_cast<int>(u), static_cast<int>(a.v + step)});
        }
    } else {
        // u-major: one pixel per image column, stepping toward b.u.
        const int64_t su = du > 0 ? 1 : -1;
        const int64_t adu = std::abs(du);
        out.reserve(static_cast<size_t>(adu) + 1);
        for (int64_t step = 0; step <= adu; ++step) {
            int64_t n = static_cast<int64_t>(a.v) * adu + step * dv;
            int64_t v = round_half_down(n, adu);  // dv >= 0, ties toward a.v
            out.push_back({static_cast<int>(a.u + step * su), static_cast<int>(v)});
        }
    }
    return out;
}

std::vector<PxPoint> raster_path(PxPoint a, PxPoint b) {
    std::vector<PxPoint> px = raster_line(a, b);
    if (!px.empty() && !(px.front() == a)) std::reverse(px.begin(), px.end());
    return px;
}

}  // namespace rowswitch
