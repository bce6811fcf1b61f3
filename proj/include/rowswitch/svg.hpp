#pragma once

#include <string>
#include <vector>

#include "rowswitch/geometry.hpp"

namespace rowswitch {

// Minimal self-contained SVG canvas. World coordinates are mapped into a
// fixed pixel viewport with y up.
class SvgCanvas {
  public:
    SvgCanvas(int px_width, int px_height, double x_min, double x_max, double y_min,
              double y_max);

    void line(Vec2 a, Vec2 b, const std::string &color, double width = 1.0,
              const std::string &dash = "");
    void polyline(const std::vector<Vec2> &pts, const std::string &color, double width = 1.0,
                  const std::string &dash = "");
    void circle(Vec2 c, double px_radius, const std::string &color);
    void rect(Vec2 lo, Vec2 hi, const std::string &stroke, const std::string &fill = "none");
    void text(Vec2 at, const std::string &s, int px_size = 12,
              const std::string &color = "#333");
    void save(const std::string &path) const;

  private:
    double px(double x) const;
    double py(double y) const;

    int width_, height_;
    double x_min_, x_max_, y_min_, y_max_;
    std::string body_;
};

}  // namespace rowswitch
