#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <json.hpp>

#include "augbound/augment.hpp"
#include "augbound/encoder.hpp"
#include "augbound/image.hpp"

namespace augbound {

struct DistanceEstimate {
    double value = 0.0;
    double std_error = 0.0;
    int num_anchor_samples = 0;
    int num_candidate_samples = 0;
};

// Mean over m_a sampled anchor augmentations of the minimum distance to any of
// m_c sampled candidate augmentations of the other image; the candidate set
// always includes the identity. Distances are pixel Frobenius when embed is
// null, Euclidean on embeddings otherwise. Candidate seeds are derived per
// (anchor, candidate) index, so enlarging m_c keeps a shared prefix and the
// estimate is nonincreasing in m_c draw for draw.
DistanceEstimate min_cross_image_distance(const Image& anchor_image, const Image& other_image,
                                          const AugDistribution& dist, const Encoder* embed,
                                          int m_a, int m_c, std::uint64_t seed);

// Maximum pairwise distance over m sampled augmentations of one image plus the
// identity; nondecreasing in m draw for draw under the same seed.
DistanceEstimate max_same_image_distance(const Image& img, const AugDistribution& dist,
                                         const Encoder* embed, int m, std::uint64_t seed);

struct ClassDistanceCounts {
    int anchors = 8;              // m_a per image pair
    int candidates = 16;          // m_c per anchor
    int max_samples = 16;         // m for the same-image maximum
    int max_pairs_per_class = 0;  // 0 = all ordered pairs
};

struct ClassDistanceTerms {
    DistanceEstimate min_term;  // unweighted average over classes
    DistanceEstimate max_term;
    std::vector<double> per_class_min;  // NaN for skipped classes
    std::vector<double> per_class_max;
    std::vector<int> skipped_classes;   // classes with < 2 images (min term only)
};

// Per-class averages of the two estimators over same-class distinct-image
// pairs (min) and per-image augmentation spreads (max), then an unweighted
// average over classes.
ClassDistanceTerms class_distance_terms(const std::vector<std::pair<Image, int>>& dataset,
                                        int num_classes, const AugDistribution& dist,
                                        const Encoder* embed, const ClassDistanceCounts& counts,
                                        std::uint64_t seed);

// max ||f(x) - f(x')|| / ||x - x'|| over the supplied pairs; zero-distance
// pairs are skipped. A lower bound on the true Lipschitz constant.
double lipschitz_estimate(const Encoder& enc,
                          const std::vector<std::pair<Image, Image>>& pairs);

// || mean_a f(a(x)) - f(x) || over m sampled augmentations.
double centering_residual(const Encoder& enc, const Image& img, const AugDistribution& dist,
                          int m, std::uint64_t seed);

nlohmann::json distance_row_json(const std::string& term, const DistanceEstimate& est,
                                 const nlohmann::json& params);

}  // namespace augbound
