#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "augbound/image.hpp"

namespace augbound {

struct ContrastiveTuple;
class ContrastiveSampler;

// Toy encoders mapping images to R^output_dim, optionally projected to the
// unit sphere. Architectures:
//   Flatten — raw pixel vector (output_dim == side^2 * 3), no parameters
//   Linear  — W * flatten(x)
//   Mlp1    — W2 * tanh(W1 * flatten(x) + b1) + b2
struct Encoder {
    enum class Arch : std::uint8_t { Flatten = 0, Linear = 1, Mlp1 = 2 };

    Arch arch = Arch::Flatten;
    int input_side = 0;
    int input_dim = 0;
    int hidden_dim = 0;
    int output_dim = 0;
    bool normalize = true;

    std::vector<double> w1;  // Linear: output_dim x input_dim; Mlp1: hidden x input
    std::vector<double> b1;  // Mlp1 only
    std::vector<double> w2;  // Mlp1: output_dim x hidden
    std::vector<double> b2;  // Mlp1 only

    // Zero pre-normalization outputs are replaced by the first basis vector;
    // each replacement is counted here.
    mutable std::atomic<std::uint64_t> degenerate_outputs{0};

    Encoder() = default;
    Encoder(const Encoder& o) { *this = o; }
    Encoder& operator=(const Encoder& o);
    Encoder(Encoder&&) noexcept;
    Encoder& operator=(Encoder&&) noexcept;

    std::size_t parameter_count() const { return w1.size() + b1.size() + w2.size() + b2.size(); }
    double* parameter(std::size_t flat_index);
};

Encoder make_flatten_encoder(int side, bool normalize);
Encoder make_linear_encoder(int side, int output_dim, std::uint64_t seed, bool normalize = true,
                            double init_scale = 0.1);
Encoder make_mlp1_encoder(int side, int hidden_dim, int output_dim, std::uint64_t seed,
                          bool normalize = true, double init_scale = 0.1);

std::vector<double> forward(const Encoder& enc, const Image& img);

// Frobenius norm of the stacked weight matrices (pre-normalization class size).
double weight_frobenius_norm(const Encoder& enc);

struct EncoderGradient {
    std::vector<double> w1, b1, w2, b2;
    double loss = 0.0;  // mean logistic InfoNCE over the batch
};

// Exact gradient of the mean logistic InfoNCE over the batch, including the
// unit-normalization Jacobian. Flatten encoders have no parameters and yield
// empty gradients.
EncoderGradient infonce_gradient(const Encoder& enc, const std::vector<ContrastiveTuple>& batch);

struct TrainConfig {
    double learning_rate = 0.1;
    std::vector<int> decay_epochs;   // sorted, 0-based epoch indices
    double decay_factor = 0.1;
    double weight_decay = 0.0;       // per-step multiplicative shrink, applied independent of lr
    int batch_size = 16;
    int batches_per_epoch = 8;
    int epochs = 100;
    int num_negatives = 4;           // K
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainResult {
    Encoder encoder;
    std::vector<double> epoch_risk;  // mean batch loss per epoch
};

// SGD on freshly sampled contrastive tuples (anchor/positive from one draw,
// negatives from independent draws). Deterministic given cfg.seed. Throws
// std::runtime_error with the partial trace embedded on NaN loss.
TrainResult train(const Encoder& enc, const ContrastiveSampler& sampler, const TrainConfig& cfg);

// Multinomial logistic regression on frozen embeddings via full-batch gradient
// descent; returns test accuracy. Prediction ties break to the lowest class id.
double linear_probe(const Encoder& enc,
                    const std::vector<std::pair<Image, int>>& train_set,
                    const std::vector<std::pair<Image, int>>& test_set,
                    int probe_epochs, double probe_lr = 0.5);

// Versioned binary checkpoint: magic "AENC1", architecture tag, dimensions,
// little-endian float64 parameters.
void save_encoder(const Encoder& enc, const std::string& path);
Encoder load_encoder(const std::string& path);

void write_loss_trace_csv(const std::vector<double>& epoch_risk, const std::string& path);

}  // namespace augbound
