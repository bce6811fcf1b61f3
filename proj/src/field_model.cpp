#include "rowswitch/field_model.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace rowswitch {

std::vector<std::pair<double, double>> CropRow::solid_intervals() const {
    std::vector<std::pair<double, double>> sorted = gaps;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::pair<double, double>> out;
    double cursor = 0.0;
    for (const auto &[a, b] : sorted) {
        if (a > cursor) out.emplace_back(cursor, a);
        cursor = std::max(cursor, b);
    }
    if (cursor < 1.0) out.emplace_back(cursor, 1.0);
    return out;
}

double RoughnessMap::at(const Vec2 &p) const {
    if (nx <= 0 || ny <= 0) return 0.0;
    double gx = (p.x - origin.x) / cell_size;
    double gy = (p.y - origin.y) / cell_size;
    gx = std::clamp(gx, 0.0, static_cast<double>(nx - 1));
    gy = std::clamp(gy, 0.0, static_cast<double>(ny - 1));
    int ix = std::min(static_cast<int>(gx), nx - 2 >= 0 ? nx - 2 : 0);
    int iy = std::min(static_cast<int>(gy), ny - 2 >= 0 ? ny - 2 : 0);
    double fx = gx - ix;
    double fy = gy - iy;
    auto v = [&](int cx, int cy) {
        cx = std::clamp(cx, 0, nx - 1);
        cy = std::clamp(cy, 0, ny - 1);
        return values[static_cast<size_t>(cy) * nx + cx];
    };
    double a = v(ix, iy) * (1.0 - fx) + v(ix + 1, iy) * fx;
    double b = v(ix, iy + 1) * (1.0 - fx) + v(ix + 1, iy + 1) * fx;
    return a * (1.0 - fy) + b * fy;
}

namespace {

// Intersection of a line with the (near-vertical) eor/edge line.
Vec2 line_intersect(const RegressionLine &a, const RegressionLine &b) {
    double denom = a.direction.cross(b.direction);
    if (std::abs(denom) < 1e-12)
        throw std::runtime_error("degenerate line intersection");
    double t = (b.point - a.point).cross(b.direction) / denom;
    return a.at(t);
}

RegressionLine fit_line(const std::vector<Vec2> &pts) {
    // Ordinary least squares of y on x; rows are near-horizontal by
    // construction so the fit is well conditioned.
    if (pts.size() < 2) throw std::runtime_error("cannot fit line on <2 points");
    double sx = 0, sy = 0;
    for (const Vec2 &p : pts) {
        sx += p.x;
        sy += p.y;
    }
    double mx = sx / pts.size(), my = sy / pts.size();
    double sxx = 0, sxy = 0;
    for (const Vec2 &p : pts) {
        sxx += (p.x - mx) * (p.x - mx);
        sxy += (p.x - mx) * (p.y - my);
    }
    if (sxx < 1e-12) throw std::runtime_error("degenerate row: no x spread");
    double slope = sxy / sxx;
    return {{mx, my}, Vec2{1.0, slope}.normalized()};
}

}  // namespace

FieldSpec generate_field(const FieldConfig &config, uint64_t seed) {
    if (config.row_count < 2)
        throw std::invalid_argument("field config: row_count must be >= 2");
    if (config.row_length <= 0.0 || config.nominal_inter_row <= 0.0 ||
        config.headland_depth <= 0.0)
        throw std::invalid_argument("field config: lengths must be positive");
    if (config.spacing_jitter < 0.0 || config.spacing_jitter >= 1.0)
        throw std::invalid_argument("field config: spacing_jitter must be in [0,1)");
    if (config.gap_length < 0.0 || config.gaps_per_row < 0)
        throw std::invalid_argument("field config: bad gap parameters");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    FieldSpec field;
    field.nominal_inter_row = config.nominal_inter_row;
    field.headland_depth = config.headland_depth;

    // Rows run along +x, indexed along +y. Endpoints on the headland side sit
    // near x = row_length; the headland extends beyond them.
    double gap_frac = config.gap_length / config.row_length;
    double y = 0.0;
    for (int i = 0; i < config.row_count; ++i) {
        if (i > 0) {
            double j = config.spacing_jitter;
            double spacing = config.nominal_inter_row * (1.0 + j * (2.0 * unit(rng) - 1.0));
            y += spacing;
        }
        double angle = 0.5 * config.angle_jitter * (2.0 * unit(rng) - 1.0);
        double ex = config.row_length + config.endpoint_jitter * (2.0 * unit(rng) - 1.0);
        double sx = config.endpoint_jitter * (2.0 * unit(rng) - 1.0);

        CropRow row;
        row.index = i;
        row.end = {ex, y};
        double len = ex - sx;
        row.start = row.end - Vec2{std::cos(angle), std::sin(angle)} * len;

        for (int g = 0; g < config.gaps_per_row; ++g) {
            // Rejection-sample a gap disjoint from the ones already placed.
            for (int attempt = 0; attempt < 64; ++attempt) {
                double a = unit(rng) * (1.0 - gap_frac);
                double b = a + gap_frac;
                bool overlaps = false;
                for (const auto &[ga, gb] : row.gaps)
                    if (a < gb && ga < b) overlaps = true;
                if (!overlaps) {
                    row.gaps.emplace_back(a, b);
                    break;
                }
            }
        }
        std::sort(row.gaps.begin(), row.gaps.end());
        field.rows.push_back(std::move(row));
    }

    std::vector<Vec2> ends;
    for (const CropRow &r : field.rows) ends.push_back(r.end);
    // The end line is near-vertical; fit x on y by swapping coordinates.
    std::vector<Vec2> swapped;
    for (const Vec2 &e : ends) swapped.push_back({e.y, e.x});
    RegressionLine sw = fit_line(swapped);
    field.eor_line = {{sw.point.y, sw.point.x}, Vec2{sw.direction.y, sw.direction.x}.normalized()};
    // Normal pointing into the headland (+x side).
    Vec2 normal = field.eor_line.direction.perp();
    if (normal.x < 0.0) normal = normal * -1.0;
    field.field_edge = {field.eor_line.point + normal * config.headland_depth,
                        field.eor_line.direction};

    // Roughness grid covering the headland strip plus a margin.
    RoughnessMap &rough = field.roughness;
    rough.cell_size = config.roughness_cell;
    double x_lo = field.eor_line.point.x - 1.0;
    double x_hi = field.field_edge.point.x + 1.0;
    double y_lo = -config.nominal_inter_row - 1.0;
    double y_hi = y + config.nominal_inter_row + 1.0;
    rough.origin = {x_lo, y_lo};
    rough.nx = std::max(2, static_cast<int>(std::ceil((x_hi - x_lo) / rough.cell_size)) + 1);
    rough.ny = std::max(2, static_cast<int>(std::ceil((y_hi - y_lo) / rough.cell_size)) + 1);
    rough.values.assign(static_cast<size_t>(rough.nx) * rough.ny, 0.0);
    if (config.roughness_amplitude > 0.0) {
        for (double &v : rough.values) v = unit(rng);
        // Two box-blur passes smooth the white noise into gentle patches.
        for (int pass = 0; pass < 2; ++pass) {
            std::vector<double> blurred = rough.values;
            for (int cy = 0; cy < rough.ny; ++cy) {
                for (int cx = 0; cx < rough.nx; ++cx) {
                    double sum = 0.0;
                    int n = 0;
                    for (int dy = -1; dy <= 1; ++dy) {
                        for (int dx = -1; dx <= 1; ++dx) {
                            int qx = cx + dx, qy = cy + dy;
                            if (qx < 0 || qy < 0 || qx >= rough.nx || qy >= rough.ny) continue;
                            sum += rough.values[static_cast<size_t>(qy) * rough.nx + qx];
                            ++n;
                        }
                    }
                    blurred[static_cast<size_t>(cy) * rough.nx + cx] = sum / n;
                }
            }
            rough.values = std::move(blurred);
        }
        double lo = 1.0, hi = 0.0;
        for (double v : rough.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        double span = hi > lo ? hi - lo : 1.0;
        for (double &v : rough.values)
            v = config.roughness_amplitude * (v - lo) / span;
    }
    return field;
}

RegressionLine ground_truth_line(const FieldSpec &field, int row_index) {
    const CropRow &row = field.row(row_index);
    const double step = 0.05;
    double len = row.length();
    std::vector<Vec2> pts;
    for (const auto &[a, b] : row.solid_intervals()) {
        double s0 = a * len, s1 = b * len;
        for (double s = s0; s <= s1 + 1e-9; s += step)
            pts.push_back(row.point_at(std::min(s, s1) / len));
    }
    if (pts.size() < 2)
        throw std::runtime_error("degenerate row: fully gapped");
    RegressionLine line = fit_line(pts);
    if (line.direction.dot(row.direction()) < 0.0)
        line.direction = line.direction * -1.0;
    return line;
}

HeadlandBuffer headland_buffer(const FieldSpec &field, int row_index) {
    const int n = field.row_count();
    if (row_index < 0 || row_index >= n)
        throw std::invalid_argument("headland_buffer: bad row index");

    // Supporting line of a row extended into the headland.
    auto row_line = [&](int i) {
        const CropRow &r = field.row(i);
        return RegressionLine{r.start, r.direction()};
    };
    auto anchor_pair = [&](int i) {
        RegressionLine l = row_line(i);
        return std::pair<Vec2, Vec2>{line_intersect(l, field.eor_line),
                                     line_intersect(l, field.field_edge)};
    };

    auto [e_c, f_c] = anchor_pair(row_index);
    Vec2 half_offset = row_line(row_index).direction.perp() * (field.nominal_inter_row * 0.5);

    Vec2 e_lo, f_lo, e_hi, f_hi;
    if (row_index > 0) {
        auto [e_n, f_n] = anchor_pair(row_index - 1);
        e_lo = (e_c + e_n) * 0.5;
        f_lo = (f_c + f_n) * 0.5;
    } else {
        e_lo = e_c - half_offset;
        f_lo = f_c - half_offset;
    }
    if (row_index + 1 < n) {
        auto [e_n, f_n] = anchor_pair(row_index + 1);
        e_hi = (e_c + e_n) * 0.5;
        f_hi = (f_c + f_n) * 0.5;
    } else {
        e_hi = e_c + half_offset;
        f_hi = f_c + half_offset;
    }

    HeadlandBuffer buf;
    buf.polygon = {e_lo, f_lo, f_hi, e_hi};
    if (polygon_area(buf.polygon) < 0.0)
        std::reverse(buf.polygon.begin(), buf.polygon.end());
    return buf;
}

double inter_row_distance(const FieldSpec &field, int row_a, int row_b) {
    if (std::abs(row_a - row_b) != 1)
        throw std::invalid_argument("inter_row_distance: rows must be adjacent");
    RegressionLine la = ground_truth_line(field, row_a);
    RegressionLine lb = ground_truth_line(field, row_b);
    // Anchor at row_a's headland-side endpoint projected onto its own line.
    Vec2 anchor = la.at(la.param_of(field.row(row_a).end));
    return std::abs(lb.offset_of(anchor));
}

std::string field_to_json(const FieldSpec &field) {
    nlohmann::json j;
    j["nominal_inter_row"] = field.nominal_inter_row;
    j["headland_depth"] = field.headland_depth;
    j["rows"] = nlohmann::json::array();
    for (const CropRow &r : field.rows) {
        nlohmann::json jr;
        jr["index"] = r.index;
        jr["start"] = {r.start.x, r.start.y};
        jr["end"] = {r.end.x, r.end.y};
        jr["gaps"] = nlohmann::json::array();
        for (const auto &[a, b] : r.gaps) jr["gaps"].push_back({a, b});
        j["rows"].push_back(std::move(jr));
    }
    j["eor_line"] = {{"point", {field.eor_line.point.x, field.eor_line.point.y}},
                     {"direction", {field.eor_line.direction.x, field.eor_line.direction.y}}};
    j["field_edge"] = {{"point", {field.field_edge.point.x, field.field_edge.point.y}},
                       {"direction", {field.field_edge.direction.x, field.field_edge.direction.y}}};
    const RoughnessMap &r = field.roughness;
    j["roughness"] = {{"origin", {r.origin.x, r.origin.y}},
                      {"cell_size", r.cell_size},
                      {"nx", r.nx},
                      {"ny", r.ny},
                      {"values", r.values}};
    return j.dump(2);
}

FieldSpec field_from_json(const std::string &text) {
    nlohmann::json j = nlohmann::json::parse(text);
    FieldSpec field;
    field.nominal_inter_row = j.at("nominal_inter_row").get<double>();
    field.headland_depth = j.at("headland_depth").get<double>();
    for (const auto &jr : j.at("rows")) {
        CropRow r;
        r.index = jr.at("index").get<int>();
        r.start = {jr.at("start")[0].get<double>(), jr.at("start")[1].get<double>()};
        r.end = {jr.at("end")[0].get<double>(), jr.at("end")[1].get<double>()};
        for (const auto &g : jr.at("gaps"))
            r.gaps.emplace_back(g[0].get<double>(), g[1].get<double>());
        field.rows.push_back(std::move(r));
    }
    auto load_line = [&](const nlohmann::json &jl) {
        RegressionLine l;
        l.point = {jl.at("point")[0].get<double>(), jl.at("point")[1].get<double>()};
        l.direction = {jl.at("direction")[0].get<double>(), jl.at("direction")[1].get<double>()};
        return l;
    };
    field.eor_line = load_line(j.at("eor_line"));
    field.field_edge = load_line(j.at("field_edge"));
    const auto &jr = j.at("roughness");
    field.roughness.origin = {jr.at("origin")[0].get<double>(), jr.at("origin")[1].get<double>()};
    field.roughness.cell_size = jr.at("cell_size").get<double>();
    field.roughness.nx = jr.at("nx").get<int>();
    field.roughness.ny = jr.at("ny").get<int>();
    field.roughness.values = jr.at("values").get<std::vector<double>>();
    return field;
}

void save_field(const FieldSpec &field, const std::string &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write field file: " + path);
    out << field_to_json(field) << "\n";
}

FieldSpec load_field(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read field file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return field_from_json(ss.str());
}

}  // namespace rowswitch
