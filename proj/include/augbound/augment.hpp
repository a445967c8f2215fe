#pragma once

#include <array>
#include <variant>
#include <vector>

#include <json.hpp>

#include "augbound/image.hpp"
#include "augbound/rng.hpp"

namespace augbound {

// Random resized crop: window [tau_u, tau_u + scale] x [tau_v, tau_v + scale]
// in unit coordinates, resampled back to the input resolution. The window is
// clipped into the frame at application time, and the scale is floored at one
// pixel (1/side) so the window never degenerates.
struct CropParams {
    double scale = 1.0;     // theta
    double offset_u = 0.0;  // tau  (rows)
    double offset_v = 0.0;  // tau' (cols)
};

// Per-channel brightness gains in (0, b].
struct ColorParams {
    std::array<double, 3> gain{1.0, 1.0, 1.0};
};

struct FlipStep {};
struct GrayStep {};

using AugStep = std::variant<CropParams, ColorParams, FlipStep, GrayStep>;

// An applied transform sequence with its sampled parameters. An empty step
// list is the identity.
struct Augmentation {
    std::vector<AugStep> steps;

    bool is_identity() const { return steps.empty(); }
};

// Distribution over augmentations: crop always applied with
// theta ~ Unif(scale_min, scale_max], offsets ~ Unif[0,1]; flip/color/gray
// applied independently with their probabilities; gains ~ Unif(0, brightness_bound].
// The identity transform is always part of the support (it is the candidate
// every estimator includes explicitly).
struct AugDistribution {
    double crop_scale_min = 0.2;
    double crop_scale_max = 1.0;
    double brightness_bound = 2.0;
    double flip_prob = 0.5;
    double color_prob = 0.8;
    double gray_prob = 0.2;

    void validate() const;  // throws ConfigError naming the field
};

Augmentation identity_augmentation();
Augmentation sample_augmentation(const AugDistribution& dist, Rng& rng);

Image apply_crop(const Image& img, const CropParams& p);
Image apply_color(const Image& img, const ColorParams& p);
Image apply_flip(const Image& img);
Image apply_gray(const Image& img);

// Nearest-neighbor label resampling over the same window as apply_crop.
SemanticMap crop_semantic_map(const SemanticMap& map, const CropParams& p);

// Replays the recorded steps in order. Pure: same (image, params) in, same
// pixels out, bit for bit.
Image apply(const Augmentation& aug, const Image& img);
SemanticMap apply_to_map(const Augmentation& aug, const SemanticMap& map);

// Effective crop window after the pixel floor and frame clipping, as
// (scale, offset_u, offset_v) in unit coordinates.
CropParams effective_crop(const CropParams& p, int side);

nlohmann::json to_json(const Augmentation& aug);
Augmentation augmentation_from_json(const nlohmann::json& j);

}  // namespace augbound
