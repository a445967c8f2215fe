#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace augbound {

inline constexpr int kNumChannels = 3;

// Square 3-channel image with nonnegative pixel intensities. There is no upper
// clamp: brightness scaling may push values past 1.
struct Image {
    int side = 0;
    std::vector<double> pixels;  // layout: (row * side + col) * 3 + channel

    Image() = default;
    explicit Image(int side_, double fill = 0.0);

    double& at(int row, int col, int channel) {
        return pixels[static_cast<std::size_t>((row * side + col) * kNumChannels + channel)];
    }
    double at(int row, int col, int channel) const {
        return pixels[static_cast<std::size_t>((row * side + col) * kNumChannels + channel)];
    }

    bool operator==(const Image&) const = default;
};

// Per-pixel semantic label map. Labels are 0-based in [0, T); label T-1 is the
// background by convention.
struct SemanticMap {
    int side = 0;
    std::vector<int> labels;  // layout: row * side + col

    SemanticMap() = default;
    explicit SemanticMap(int side_, int fill = 0);

    int& at(int row, int col) { return labels[static_cast<std::size_t>(row * side + col)]; }
    int at(int row, int col) const { return labels[static_cast<std::size_t>(row * side + col)]; }

    bool operator==(const SemanticMap&) const = default;
};

double frobenius_distance(const Image& a, const Image& b);
double frobenius_norm(const Image& a);

// Row-major, channel-interleaved copy of the pixel buffer.
std::vector<double> flatten(const Image& img);

// Flat little-endian float32 dump of the pixel buffer, in storage order.
void write_raw_f32(const Image& img, const std::string& path);
Image read_raw_f32(const std::string& path, int side);

// 8-bit previews for eyeballing; intensities are scaled by the image maximum
// when it exceeds 1.
void write_ppm(const Image& img, const std::string& path);
void write_pgm(const SemanticMap& map, int num_labels, const std::string& path);

}  // namespace augbound
