#include "rowswitch/svg.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace rowswitch {

namespace {
std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}
}  // namespace

SvgCanvas::SvgCanvas(int px_width, int px_height, double x_min, double x_max, double y_min,
                     double y_max)
    : width_(px_width), height_(px_height), x_min_(x_min), x_max_(x_max), y_min_(y_min),
      y_max_(y_max) {}

double SvgCanvas::px(double x) const {
    return (x - x_min_) / (x_max_ - x_min_) * (width_ - 80) + 50;
}

double SvgCanvas::py(double y) const {
    return height_ - 40 - (y - y_min_) / (y_max_ - y_min_) * (height_ - 80);
}

void SvgCanvas::line(Vec2 a, Vec2 b, const std::string &color, double width,
                     const std::string &dash) {
    body_ += "<line x1=\"" + fmt(px(a.x)) + "\" y1=\"" + fmt(py(a.y)) + "\" x2=\"" +
             fmt(px(b.x)) + "\" y2=\"" + fmt(py(b.y)) + "\" stroke=\"" + color +
             "\" stroke-width=\"" + fmt(width) + "\"";
    if (!dash.empty()) body_ += " stroke-dasharray=\"" + dash + "\"";
    body_ += "/>\n";
}

void SvgCanvas::polyline(const std::vector<Vec2> &pts, const std::string &color, double width,
                         const std::string &dash) {
    if (pts.size() < 2) return;
    body_ += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" + fmt(width) +
             "\"";
    if (!dash.empty()) body_ += " stroke-dasharray=\"" + dash + "\"";
    body_ += " points=\"";
    for (const Vec2 &p : pts) body_ += fmt(px(p.x)) + "," + fmt(py(p.y)) + " ";
    body_ += "\"/>\n";
}

void SvgCanvas::circle(Vec2 c, double px_radius, const std::string &color) {
    body_ += "<circle cx=\"" + fmt(px(c.x)) + "\" cy=\"" + fmt(py(c.y)) + "\" r=\"" +
             fmt(px_radius) + "\" fill=\"" + color + "\"/>\n";
}

void SvgCanvas::rect(Vec2 lo, Vec2 hi, const std::string &stroke, const std::string &fill) {
    double x0 = px(lo.x), x1 = px(hi.x);
    double y0 = py(hi.y), y1 = py(lo.y);
    body_ += "<rect x=\"" + fmt(x0) + "\" y=\"" + fmt(y0) + "\" width=\"" + fmt(x1 - x0) +
             "\" height=\"" + fmt(y1 - y0) + "\" stroke=\"" + stroke + "\" fill=\"" + fill +
             "\"/>\n";
}

void SvgCanvas::text(Vec2 at, const std::string &s, int px_size, const std::string &color) {
    body_ += "<text x=\"" + fmt(px(at.x)) + "\" y=\"" + fmt(py(at.y)) + "\" font-size=\"" +
             std::to_string(px_size) + "\" font-family=\"sans-serif\" fill=\"" + color +
             "\">" + s + "</text>\n";
}

void SvgCanvas::save(const std::string &path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write svg: " + path);
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_ << "\" height=\""
        << height_ << "\" viewBox=\"0 0 " << width_ << " " << height_ << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << body_ << "</svg>\n";
}

}  // namespace rowswitch
