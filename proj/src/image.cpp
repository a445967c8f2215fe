#include "augbound/image.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace augbound {

static_assert(std::endian::native == std::endian::little,
              "raw exports assume a little-endian host");

Image::Image(int side_, double fill) : side(side_) {
    if (side_ < 2) throw std::invalid_argument("Image: side must be >= 2");
    pixels.assign(static_cast<std::size_t>(side_) * side_ * kNumChannels, fill);
}

SemanticMap::SemanticMap(int side_, int fill) : side(side_) {
    if (side_ < 2) throw std::invalid_argument("SemanticMap: side must be >= 2");
    labels.assign(static_cast<std::size_t>(side_) * side_, fill);
}

double frobenius_distance(const Image& a, const Image& b) {
    if (a.side != b.side) throw std::invalid_argument("frobenius_distance: side mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = a.pixels[i] - b.pixels[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

double frobenius_norm(const Image& a) {
    double acc = 0.0;
    for (double v : a.pixels) acc += v * v;
    return std::sqrt(acc);
}

std::vector<double> flatten(const Image& img) {
    return img.pixels;
}

void write_raw_f32(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_raw_f32: cannot open " + path);
    for (double v : img.pixels) {
        const float f = static_cast<float>(v);
        out.write(reinterpret_cast<const char*>(&f), sizeof(f));
    }
    if (!out) throw std::runtime_error("write_raw_f32: write failed for " + path);
}

Image read_raw_f32(const std::string& path, int side) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_raw_f32: cannot open " + path);
    Image img(side);
    for (double& v : img.pixels) {
        float f = 0.0f;
        in.read(reinterpret_cast<char*>(&f), sizeof(f));
        if (!in) throw std::runtime_error("read_raw_f32: truncated file " + path);
        v = static_cast<double>(f);
    }
    return img;
}

void write_ppm(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_ppm: cannot open " + path);
    double maxv = 1.0;
    for (double v : img.pixels) maxv = std::max(maxv, v);
    out << "P6\n" << img.side << " " << img.side << "\n255\n";
    for (double v : img.pixels) {
        const int byte = static_cast<int>(std::lround(255.0 * std::clamp(v / maxv, 0.0, 1.0)));
        out.put(static_cast<char>(byte));
    }
    if (!out) throw std::runtime_error("write_ppm: write failed for " + path);
}

void write_pgm(const SemanticMap& map, int num_labels, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_pgm: cannot open " + path);
    out << "P5\n" << map.side << " " << map.side << "\n255\n";
    const int denom = std::max(1, num_labels - 1);
    for (int label : map.labels) {
        const int byte = std::clamp(label * 255 / denom, 0, 255);
        out.put(static_cast<char>(byte));
    }
    if (!out) throw std::runtime_error("write_pgm: write failed for " + path);
}

}  // namespace augbound
