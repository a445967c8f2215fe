#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "augbound/augment.hpp"
#include "augbound/encoder.hpp"
#include "augbound/metrics.hpp"
#include "augbound/pixel_model.hpp"

namespace augbound {

enum class ExperimentKind {
    PixelDistances,
    ReprDistances,
    BoundReportKind,
    DecompCheck,
    TrainSweep,
};

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& s);

struct DatasetConfig {
    int images_per_class = 8;
    int test_images_per_class = 8;  // train-sweep only
};

struct EncoderConfig {
    std::string arch = "linear";  // "flatten" | "linear" | "mlp1"
    int output_dim = 8;
    int hidden_dim = 16;
    bool normalize = true;
    std::string checkpoint;  // load instead of constructing when nonempty
};

struct BoundsConfig {
    int num_negatives = 4;      // K
    double delta = 0.05;
    int risk_samples = 200;     // n for the empirical and MC risks
    int rademacher_draws = 200;
    double weight_bound = 1.0;  // fallback when the encoder has no weights
    double centering_tolerance = 0.05;
    int centering_samples = 64;
    int centering_images = 8;
};

struct WorldConfig {
    int num_worlds = 20;
    int max_classes = 3;
    int max_negatives = 3;
    int max_images_per_class = 3;
    int max_augmentations = 3;
    int side = 3;
    int encoder_dim = 4;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::PixelDistances;
    std::uint64_t seed = 0;
    std::string out_dir = ".";

    GenerativeConfig generative;
    AugDistribution augmentation;
    std::vector<double> sweep_crop_scale_min;  // delta_min sweep values
    std::vector<double> sweep_color_prob;
    DatasetConfig dataset;
    ClassDistanceCounts mc;
    EncoderConfig encoder;
    TrainConfig train;
    int probe_epochs = 100;
    BoundsConfig bounds;
    WorldConfig world;
    std::string embeddings_path;  // repr-distances alternative input

    void validate() const;  // throws ConfigError with a path-to-field message
};

ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json experiment_config_to_json(const ExperimentConfig& config);

// Runs the experiment and returns the paths of the files written (relative to
// out_dir). Fully deterministic given the config.
std::vector<std::string> run(const ExperimentConfig& config);

struct EmbeddingTable {
    int n = 0;
    int dim = 0;
    int num_classes = 0;
    std::vector<int> labels;
    std::vector<double> vectors;  // n x dim

    std::span<const double> row(int i) const {
        return {vectors.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
    }
};

// Binary format: magic "AEMB1", u32 n, u32 dim, u32 num_classes, n x u32
// labels, n x dim little-endian float32. Files ending in .csv are parsed as
// label,v1,...,vd rows instead.
EmbeddingTable load_embeddings(const std::string& path);
void save_embeddings(const EmbeddingTable& table, const std::string& path);

// RFC-4180-style CSV: fields containing commas, quotes, or newlines are quoted.
std::string emit_plot_data(const std::vector<std::string>& header,
                           const std::vector<std::vector<std::string>>& rows);

// Shortest round-trip decimal representation (via std::to_chars).
std::string format_double(double v);

// Labeled synthetic dataset, one derived seed per image.
std::vector<std::pair<Image, int>> build_dataset(const GenerativeConfig& gen, int images_per_class,
                                                 std::uint64_t seed);

}  // namespace augbound
