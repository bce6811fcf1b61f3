#include "rowswitch/image_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rowswitch {

namespace {

void write_pnm_header(std::ofstream &out, const char *magic, int w, int h, int maxval) {
    out << magic << "\n" << w << " " << h << "\n" << maxval << "\n";
}

struct PnmHeader {
    std::string magic;
    int width = 0, height = 0, maxval = 0;
};

PnmHeader read_pnm_header(std::ifstream &in, const std::string &path) {
    PnmHeader h;
    in >> h.magic;
    auto next_int = [&](int &v) {
        // Skip whitespace and '#' comments.
        while (true) {
            int c = in.peek();
            if (c == '#') {
                std::string skip;
                std::getline(in, skip);
            } else if (std::isspace(c)) {
                in.get();
            } else {
                break;
            }
        }
        if (!(in >> v)) throw std::runtime_error("bad pnm header: " + path);
    };
    next_int(h.width);
    next_int(h.height);
    next_int(h.maxval);
    in.get();  // single whitespace before the raster
    if (h.width <= 0 || h.height <= 0) throw std::runtime_error("bad pnm size: " + path);
    return h;
}

}  // namespace

void save_mask_pgm(const SegMask &mask, const std::string &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write pgm: " + path);
    write_pnm_header(out, "P5", mask.width, mask.height, 255);
    std::vector<uint8_t> buf(mask.data.size());
    for (size_t i = 0; i < mask.data.size(); ++i) buf[i] = mask.data[i] ? 255 : 0;
    out.write(reinterpret_cast<const char *>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

SegMask load_mask_pgm(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read pgm: " + path);
    PnmHeader h = read_pnm_header(in, path);
    if (h.magic != "P5" || h.maxval > 255)
        throw std::runtime_error("expected 8-bit P5 pgm: " + path);
    SegMask mask;
    mask.resize(h.width, h.height);
    std::vector<uint8_t> buf(static_cast<size_t>(h.width) * h.height);
    in.read(reinterpret_cast<char *>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!in) throw std::runtime_error("truncated pgm: " + path);
    for (size_t i = 0; i < buf.size(); ++i) mask.data[i] = buf[i] ? 1 : 0;
    return mask;
}

void save_depth_pgm(const DepthImage &depth, const std::string &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write pgm: " + path);
    write_pnm_header(out, "P5", depth.width, depth.height, 65535);
    std::vector<uint8_t> buf(static_cast<size_t>(depth.width) * depth.height * 2);
    for (size_t i = 0; i < depth.data.size(); ++i) {
        double mm = std::clamp(std::lround(depth.data[i] * 1000.0), 0l, 65535l);
        uint16_t q = static_cast<uint16_t>(mm);
        buf[2 * i] = static_cast<uint8_t>(q >> 8);  // big-endian per pnm convention
        buf[2 * i + 1] = static_cast<uint8_t>(q & 0xff);
    }
    out.write(reinterpret_cast<const char *>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

DepthImage load_depth_pgm(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read pgm: " + path);
    PnmHeader h = read_pnm_header(in, path);
    if (h.magic != "P5" || h.maxval != 65535)
        throw std::runtime_error("expected 16-bit P5 pgm: " + path);
    DepthImage depth;
    depth.resize(h.width, h.height);
    std::vector<uint8_t> buf(static_cast<size_t>(h.width) * h.height * 2);
    in.read(reinterpret_cast<char *>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!in) throw std::runtime_error("truncated pgm: " + path);
    for (size_t i = 0; i < depth.data.size(); ++i) {
        uint16_t q = static_cast<uint16_t>((buf[2 * i] << 8) | buf[2 * i + 1]);
        depth.data[i] = static_cast<float>(q) / 1000.0f;
    }
    return depth;
}

void save_intrinsics(const CameraModel &cam, const std::string &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write intrinsics: " + path);
    out.precision(17);
    out << "width=" << cam.width << "\n"
        << "height=" << cam.height << "\n"
        << "fx=" << cam.fx << "\n"
        << "fy=" << cam.fy << "\n"
        << "cx=" << cam.cx << "\n"
        << "cy=" << cam.cy << "\n"
        << "mount_forward=" << cam.mount_forward << "\n"
        << "mount_lateral=" << cam.mount_lateral << "\n"
        << "mount_height=" << cam.mount_height << "\n"
        << "pitch_deg=" << rad2deg(cam.pitch) << "\n"
        << "depth_scale=0.001\n";
}

CameraModel load_intrinsics(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read intrinsics: " + path);
    CameraModel cam;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq);
        double val = std::stod(line.substr(eq + 1));
        if (key == "width") cam.width = static_cast<int>(val);
        else if (key == "height") cam.height = static_cast<int>(val);
        else if (key == "fx") cam.fx = val;
        else if (key == "fy") cam.fy = val;
        else if (key == "cx") cam.cx = val;
        else if (key == "cy") cam.cy = val;
        else if (key == "mount_forward") cam.mount_forward = val;
        else if (key == "mount_lateral") cam.mount_lateral = val;
        else if (key == "mount_height") cam.mount_height = val;
        else if (key == "pitch_deg") cam.pitch = deg2rad(val);
    }
    return cam;
}

void save_ppm(const RgbImage &img, const std::string &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write ppm: " + path);
    write_pnm_header(out, "P6", img.width, img.height, 255);
    out.write(reinterpret_cast<const char *>(img.data.data()),
              static_cast<std::streamsize>(img.data.size()));
}

}  // namespace rowswitch
