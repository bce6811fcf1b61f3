#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rowswitch/geometry.hpp"

namespace rowswitch {

// One crop row as a world-frame segment. Gaps are closed intervals in [0,1]
// parameterizing missing stretches along start->end.
struct CropRow {
    int index = 0;
    Vec2 start;
    Vec2 end;
    std::vector<std::pair<double, double>> gaps;

    double length() const { return (end - start).norm(); }
    Vec2 direction() const { return (end - start).normalized(); }
    Vec2 point_at(double t) const { return start + (end - start) * t; }
    // Complement of the gaps, ordered, within [0,1].
    std::vector<std::pair<double, double>> solid_intervals() const;
};

struct RegressionLine {
    Vec2 point;
    Vec2 direction;  // unit

    // Signed perpendicular offset of p from the line (positive on the
    // counter-clockwise side of direction).
    double offset_of(const Vec2 &p) const { return direction.cross(p - point); }
    // Arc-length parameter of the projection of p.
    double param_of(const Vec2 &p) const { return direction.dot(p - point); }
    Vec2 at(double s) const { return point + direction * s; }
};

struct HeadlandBuffer {
    Polygon polygon;  // 4 vertices, counter-clockwise
};

// Smooth per-cell noise over the headland, bilinear-interpolated on queries.
struct RoughnessMap {
    Vec2 origin;
    double cell_size = 0.25;
    int nx = 0;
    int ny = 0;
    std::vector<double> values;  // nx*ny, row-major, in [0,1]

    double at(const Vec2 &p) const;
};

struct FieldSpec {
    std::vector<CropRow> rows;
    double nominal_inter_row = 0.5;
    double headland_depth = 2.0;
    RegressionLine eor_line;     // through the rows' headland-side endpoints
    RegressionLine field_edge;   // parallel bound of the headland
    RoughnessMap roughness;

    int row_count() const { return static_cast<int>(rows.size()); }
    const CropRow &row(int i) const { return rows.at(static_cast<size_t>(i)); }
};

struct FieldConfig {
    int row_count = 10;
    double row_length = 12.0;
    double nominal_inter_row = 0.5;
    double headland_depth = 2.0;
    // Fraction of nominal_inter_row the spacing may deviate, in [0,1).
    double spacing_jitter = 0.15;
    // Max pairwise direction deviation between rows (radians).
    double angle_jitter = deg2rad(1.5);
    // Endpoint jitter along the row direction (m).
    double endpoint_jitter = 0.05;
    int gaps_per_row = 2;
    double gap_length = 0.3;  // m
    double roughness_cell = 0.25;
    double roughness_amplitude = 1.0;  // 0 disables terrain roughness
};

FieldSpec generate_field(const FieldConfig &config, uint64_t seed);

// Least-squares line through points sampled every 0.05 m along the row's
// non-gap segments. Throws on a fully gapped row.
RegressionLine ground_truth_line(const FieldSpec &field, int row_index);

// Headland quadrilateral ahead of a row: eor_line edge, field_edge edge, and
// the mid-lines of the two adjacent inter-row spaces as lateral edges.
HeadlandBuffer headland_buffer(const FieldSpec &field, int row_index);

// Perpendicular distance between the regression lines of two adjacent rows,
// anchored at row_a's headland-side endpoint.
double inter_row_distance(const FieldSpec &field, int row_a, int row_b);

// JSON fixture round trip.
std::string field_to_json(const FieldSpec &field);
FieldSpec field_from_json(const std::string &text);
void save_field(const FieldSpec &field, const std::string &path);
FieldSpec load_field(const std::string &path);

}  // namespace rowswitch
