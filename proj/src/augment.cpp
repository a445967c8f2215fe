#include "augbound/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "augbound/errors.hpp"

namespace augbound {

void AugDistribution::validate() const {
    if (!(crop_scale_min > 0.0))
        throw ConfigError("augmentation.crop_scale_min: must be > 0");
    if (crop_scale_min > crop_scale_max)
        throw ConfigError("augmentation.crop_scale_min: must be <= crop_scale_max");
    if (crop_scale_max > 1.0)
        throw ConfigError("augmentation.crop_scale_max: must be <= 1");
    if (!(brightness_bound > 0.0))
        throw ConfigError("augmentation.brightness_bound: must be > 0");
    for (auto [p, name] : {std::pair{flip_prob, "flip_prob"}, {color_prob, "color_prob"},
                           {gray_prob, "gray_prob"}}) {
        if (p < 0.0 || p > 1.0)
            throw ConfigError(std::string("augmentation.") + name + ": must be in [0,1]");
    }
}

Augmentation identity_augmentation() {
    return Augmentation{};
}

Augmentation sample_augmentation(const AugDistribution& dist, Rng& rng) {
    Augmentation aug;
    CropParams crop;
    crop.scale = rng.uniform_open_below(dist.crop_scale_min, dist.crop_scale_max);
    crop.offset_u = rng.uniform();
    crop.offset_v = rng.uniform();
    aug.steps.emplace_back(crop);
    if (rng.bernoulli(dist.flip_prob)) aug.steps.emplace_back(FlipStep{});
    if (rng.bernoulli(dist.color_prob)) {
        ColorParams color;
        for (int i = 0; i < 3; ++i)
            color.gain[static_cast<std::size_t>(i)] =
                rng.uniform_open_below(0.0, dist.brightness_bound);
        aug.steps.emplace_back(color);
    }
    if (rng.bernoulli(dist.gray_prob)) aug.steps.emplace_back(GrayStep{});
    return aug;
}

CropParams effective_crop(const CropParams& p, int side) {
    CropParams e = p;
    // floor the scale at one pixel and clip the window into the unit frame
    e.scale = std::clamp(p.scale, 1.0 / side, 1.0);
    e.offset_u = std::clamp(p.offset_u, 0.0, 1.0 - e.scale);
    e.offset_v = std::clamp(p.offset_v, 0.0, 1.0 - e.scale);
    return e;
}

namespace {

// a + w*(b-a): exact for w == 0 and for a == b, which keeps identity crops and
// crops of constant images bit-exact.
inline double lerp_exact(double a, double b, double w) {
    return a + w * (b - a);
}

inline double sample_bilinear(const Image& img, double si, double sj, int ch) {
    const int d = img.side;
    si = std::clamp(si, 0.0, static_cast<double>(d - 1));
    sj = std::clamp(sj, 0.0, static_cast<double>(d - 1));
    int i0 = static_cast<int>(si);
    int j0 = static_cast<int>(sj);
    if (i0 > d - 2) i0 = d - 2;
    if (j0 > d - 2) j0 = d - 2;
    const double wi = si - i0;
    const double wj = sj - j0;
    const double top = lerp_exact(img.at(i0, j0, ch), img.at(i0, j0 + 1, ch), wj);
    const double bot = lerp_exact(img.at(i0 + 1, j0, ch), img.at(i0 + 1, j0 + 1, ch), wj);
    return lerp_exact(top, bot, wi);
}

}  // namespace

Image apply_crop(const Image& img, const CropParams& p) {
    const int d = img.side;
    const CropParams e = effective_crop(p, d);
    Image out(d);
    for (int r = 0; r < d; ++r) {
        // source coordinate of the output pixel center, in pixel units; the
        // identity window (scale 1, offset 0) maps r to exactly r
        const double si = e.offset_u * d + e.scale * (r + 0.5) - 0.5;
        for (int c = 0; c < d; ++c) {
            const double sj = e.offset_v * d + e.scale * (c + 0.5) - 0.5;
            for (int ch = 0; ch < kNumChannels; ++ch)
                out.at(r, c, ch) = sample_bilinear(img, si, sj, ch);
        }
    }
    return out;
}

Image apply_color(const Image& img, const ColorParams& p) {
    Image out = img;
    const std::size_t n = out.pixels.size();
    for (std::size_t i = 0; i < n; ++i)
        out.pixels[i] *= p.gain[i % kNumChannels];
    return out;
}

Image apply_flip(const Image& img) {
    const int d = img.side;
    Image out(d);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c)
            for (int ch = 0; ch < kNumChannels; ++ch)
                out.at(r, c, ch) = img.at(r, d - 1 - c, ch);
    return out;
}

Image apply_gray(const Image& img) {
    const int d = img.side;
    Image out(d);
    for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) {
            const double mean =
                (img.at(r, c, 0) + img.at(r, c, 1) + img.at(r, c, 2)) / 3.0;
            for (int ch = 0; ch < kNumChannels; ++ch) out.at(r, c, ch) = mean;
        }
    }
    return out;
}

SemanticMap crop_semantic_map(const SemanticMap& map, const CropParams& p) {
    const int d = map.side;
    const CropParams e = effective_crop(p, d);
    SemanticMap out(d);
    for (int r = 0; r < d; ++r) {
        const double si = e.offset_u * d + e.scale * (r + 0.5) - 0.5;
        const int i = std::clamp(static_cast<int>(std::lround(si)), 0, d - 1);
        for (int c = 0; c < d; ++c) {
            const double sj = e.offset_v * d + e.scale * (c + 0.5) - 0.5;
            const int j = std::clamp(static_cast<int>(std::lround(sj)), 0, d - 1);
            out.at(r, c) = map.at(i, j);
        }
    }
    return out;
}

Image apply(const Augmentation& aug, const Image& img) {
    Image out = img;
    for (const auto& step : aug.steps) {
        out = std::visit(
            [&](const auto& s) -> Image {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, CropParams>) return apply_crop(out, s);
                else if constexpr (std::is_same_v<T, ColorParams>) return apply_color(out, s);
                else if constexpr (std::is_same_v<T, FlipStep>) return apply_flip(out);
                else return apply_gray(out);
            },
            step);
    }
    return out;
}

SemanticMap apply_to_map(const Augmentation& aug, const SemanticMap& map) {
    SemanticMap out = map;
    for (const auto& step : aug.steps) {
        if (const auto* crop = std::get_if<CropParams>(&step)) {
            out = crop_semantic_map(out, *crop);
        } else if (std::holds_alternative<FlipStep>(step)) {
            SemanticMap flipped(out.side);
            for (int r = 0; r < out.side; ++r)
                for (int c = 0; c < out.side; ++c)
                    flipped.at(r, c) = out.at(r, out.side - 1 - c);
            out = flipped;
        }
        // color and gray do not move pixels
    }
    return out;
}

nlohmann::json to_json(const Augmentation& aug) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& step : aug.steps) {
        if (const auto* crop = std::get_if<CropParams>(&step)) {
            steps.push_back({{"type", "crop"},
                             {"scale", crop->scale},
                             {"offset_u", crop->offset_u},
                             {"offset_v", crop->offset_v}});
        } else if (const auto* color = std::get_if<ColorParams>(&step)) {
            steps.push_back({{"type", "color"}, {"gain", color->gain}});
        } else if (std::holds_alternative<FlipStep>(step)) {
            steps.push_back({{"type", "flip"}});
        } else {
            steps.push_back({{"type", "gray"}});
        }
    }
    return {{"steps", steps}};
}

Augmentation augmentation_from_json(const nlohmann::json& j) {
    Augmentation aug;
    for (const auto& step : j.at("steps")) {
        const std::string type = step.at("type").get<std::string>();
        if (type == "crop") {
            CropParams crop;
            crop.scale = step.at("scale").get<double>();
            crop.offset_u = step.at("offset_u").get<double>();
            crop.offset_v = step.at("offset_v").get<double>();
            aug.steps.emplace_back(crop);
        } else if (type == "color") {
            ColorParams color;
            const auto& g = step.at("gain");
            for (int i = 0; i < 3; ++i)
                color.gain[static_cast<std::size_t>(i)] = g.at(i).get<double>();
            aug.steps.emplace_back(color);
        } else if (type == "flip") {
            aug.steps.emplace_back(FlipStep{});
        } else if (type == "gray") {
            aug.steps.emplace_back(GrayStep{});
        } else {
            throw ConfigError("augmentation step type '" + type + "' unknown");
        }
    }
    return aug;
}

}  // namespace augbound
