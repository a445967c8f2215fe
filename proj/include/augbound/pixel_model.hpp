#pragma once

#include <array>
#include <vector>

#include "augbound/image.hpp"
#include "augbound/rng.hpp"

namespace augbound {

// Per-semantic pixel value law: one (mean, std) pair per channel. Values are
// drawn from a Gaussian truncated at zero from below.
struct ChannelStats {
    std::array<double, 3> mean{};
    std::array<double, 3> stddev{};
};

// Class-conditional semantic image model. Semantic T-1 is the background and
// must be active in every class (its activation probability is pinned to 1).
struct GenerativeConfig {
    int num_classes = 0;   // C
    int num_semantics = 0; // T
    int side = 0;          // d
    std::vector<double> class_prior;                 // length C, sums to 1
    std::vector<std::vector<double>> semantic_prob;  // C x T, last column == 1
    std::vector<ChannelStats> channel_stats;         // length T

    // Throws ConfigError naming the offending field.
    void validate() const;
};

// Axis-aligned rectangle of the partition, in pixel units, with the semantic
// assigned to it.
struct PartitionCell {
    int row0 = 0;
    int col0 = 0;
    int rows = 0;
    int cols = 0;
    int semantic = 0;
};

struct SemanticImage {
    Image image;
    SemanticMap map;
    int class_label = 0;
    std::vector<PartitionCell> cells;  // the partition used during generation
};

// Splits the d x d grid into n_cells rectangles by recursive random guillotine
// cuts (always splitting the largest remaining cell). Cell semantics are left 0.
std::vector<PartitionCell> guillotine_partition(int side, int n_cells, Rng& rng);

// Draws active semantics Bernoulli(q_c), partitions the grid with one cell per
// active semantic, and fills each pixel channel from the semantic's value law.
SemanticImage sample_semantic_image(const GenerativeConfig& config, int class_label, Rng& rng);

// [d^2 * sum_i std_s(i)^2]^(1/2)
double analytic_sigma(const GenerativeConfig& config, int semantic, int side);

// Euclidean distance between the per-channel mean triples of two semantics.
double analytic_delta_mu(const GenerativeConfig& config, int s1, int s2);

// Largest analytic_delta_mu over unordered pairs from the given semantics.
double max_pairwise_delta_mu(const GenerativeConfig& config, const std::vector<int>& semantics);

}  // namespace augbound
