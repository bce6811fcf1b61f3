#pragma once

#include <cmath>
#include <vector>

namespace rowswitch {

constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

// Wrap to (-pi, pi].
inline double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    if (a > kPi) a -= 2.0 * kPi;
    return a;
}

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2 &o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2 &o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }
    Vec2 &operator+=(const Vec2 &o) {
        x += o.x;
        y += o.y;
        return *this;
    }

    double dot(const Vec2 &o) const { return x * o.x + y * o.y; }
    double cross(const Vec2 &o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    double norm2() const { return x * x + y * y; }
    Vec2 normalized() const {
        double n = norm();
        return n > 0.0 ? Vec2{x / n, y / n} : Vec2{0.0, 0.0};
    }
    // 90 degree counter-clockwise rotation.
    Vec2 perp() const { return {-y, x}; }
    Vec2 rotated(double a) const {
        double c = std::cos(a), s = std::sin(a);
        return {c * x - s * y, s * x + c * y};
    }
};

inline Vec2 operator*(double s, const Vec2 &v) { return v * s; }

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 operator+(const Vec3 &o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3 &o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3 &o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3 &o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(x * x + y * y + z * z); }
    Vec3 normalized() const {
        double n = norm();
        return n > 0.0 ? Vec3{x / n, y / n, z / n} : Vec3{};
    }
};

// Signed angle from a to b in (-pi, pi].
inline double signed_angle(const Vec2 &a, const Vec2 &b) {
    return std::atan2(a.cross(b), a.dot(b));
}

using Polygon = std::vector<Vec2>;

// Shoelace area, positive for counter-clockwise winding.
inline double polygon_area(const Polygon &p) {
    if (p.size() < 3) return 0.0;
    double s = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        const Vec2 &a = p[i];
        const Vec2 &b = p[(i + 1) % p.size()];
        s += a.cross(b);
    }
    return 0.5 * s;
}

// Sutherland-Hodgman clip of a subject polygon against a convex clip polygon
// (counter-clockwise winding required for the clip polygon).
inline Polygon clip_convex(const Polygon &subject, const Polygon &clip) {
    Polygon out = subject;
    for (size_t i = 0; i < clip.size() && !out.empty(); ++i) {
        const Vec2 &ca = clip[i];
        const Vec2 &cb = clip[(i + 1) % clip.size()];
        Vec2 edge = cb - ca;
        Polygon in = std::move(out);
        out.clear();
        for (size_t j = 0; j < in.size(); ++j) {
            const Vec2 &p = in[j];
            const Vec2 &q = in[(j + 1) % in.size()];
            double sp = edge.cross(p - ca);
            double sq = edge.cross(q - ca);
            if (sp >= 0.0) out.push_back(p);
            if ((sp > 0.0 && sq < 0.0) || (sp < 0.0 && sq > 0.0)) {
                double t = sp / (sp - sq);
                out.push_back(p + (q - p) * t);
            }
        }
    }
    return out;
}

}  // namespace rowswitch
