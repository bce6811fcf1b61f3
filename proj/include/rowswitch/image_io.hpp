#pragma once

#include <array>
#include <string>

#include "rowswitch/sensor_model.hpp"

namespace rowswitch {

// Binary mask as 8-bit PGM (skeleton pixels = 255).
void save_mask_pgm(const SegMask &mask, const std::string &path);
SegMask load_mask_pgm(const std::string &path);

// Depth as 16-bit PGM in millimetres (0 = invalid).
void save_depth_pgm(const DepthImage &depth, const std::string &path);
DepthImage load_depth_pgm(const std::string &path);

// key=value sidecar describing the camera the images came from.
void save_intrinsics(const CameraModel &cam, const std::string &path);
CameraModel load_intrinsics(const std::string &path);

// 24-bit PPM overlay support.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> data;  // rgb triplets

    void resize(int w, int h) {
        width = w;
        height = h;
        data.assign(static_cast<size_t>(w) * h * 3, 0);
    }
    void set(int u, int v, std::array<uint8_t, 3> rgb) {
        size_t i = (static_cast<size_t>(v) * width + u) * 3;
        data[i] = rgb[0];
        data[i + 1] = rgb[1];
        data[i + 2] = rgb[2];
    }
    bool inside(int u, int v) const { return u >= 0 && v >= 0 && u < width && v < height; }
};

void save_ppm(const RgbImage &img, const std::string &path);

}  // namespace rowswitch
