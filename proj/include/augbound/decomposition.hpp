#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "augbound/augment.hpp"
#include "augbound/encoder.hpp"
#include "augbound/risk.hpp"

namespace augbound {

// Finite, exhaustively enumerable instance: per-class image lists and a finite
// augmentation set with explicit probabilities. Used as the ground-truth
// oracle for the risk identities and inequalities.
struct DiscreteWorld {
    int num_negatives = 1;  // K
    ClassPrior prior;
    std::vector<std::vector<Image>> images;   // per class
    std::vector<Augmentation> augmentations;  // should include the identity
    std::vector<double> aug_probs;

    int num_classes() const { return static_cast<int>(images.size()); }
    bool has_identity_augmentation() const;
    void validate() const;

    // Total enumeration cost of one inner risk; guarded against blowup.
    double enumeration_cost() const;
};

inline constexpr double kEnumerationGuard = 1e7;

// Multiset of off-anchor-class negative labels together with the number of
// ordered K-tuples realizing it.
struct Pattern {
    int anchor_class = 0;
    std::vector<int> labels;  // sorted, all != anchor_class; size k <= K
    double multiplicity = 1.0;

    int k() const { return static_cast<int>(labels.size()); }
};

// All multisets of labels != c of size 0..K; multiplicities over ordered
// tuples sum to C^K.
std::vector<Pattern> enumerate_patterns(int num_classes, int anchor_class, int num_negatives);

// multiplicity * prod_m pi_{i_m} * pi_c^{K-k}
double pattern_probability(const ClassPrior& prior, const Pattern& pattern, int num_negatives);

// Embeddings of every (class, image, augmentation) triple plus originals and
// class means, computed once per (world, encoder).
struct WorldEmbeddings {
    std::vector<std::vector<std::vector<std::vector<double>>>> augmented;  // [c][i][a]
    std::vector<std::vector<std::vector<double>>> original;                // [c][i]
    MeanClassifier means;
    bool unit_norm = true;  // all embeddings unit length within 1e-9
};

WorldEmbeddings embed_world(const DiscreteWorld& world, const Encoder& enc);

// Exact inner risk: expectation of the logistic InfoNCE over positives'
// augmentations and the negatives' (image, augmentation) draws, with k
// negatives from the pattern classes and K-k from the anchor class. The anchor
// is the fixed augmented image (class, image_idx, aug_idx).
double r_k_exhaustive(const DiscreteWorld& world, const WorldEmbeddings& emb, int image_idx,
                      int aug_idx, const Pattern& pattern);

// log(1 + (K-k) + sum_m exp(-f(x).(mu_c - mu_{i_m})))
double r_k_sup(const WorldEmbeddings& emb, int anchor_class, int image_idx,
               const Pattern& pattern, int num_negatives);

struct DecompositionRow {
    int anchor_class = 0;
    std::vector<int> labels;
    double probability = 0.0;    // p_k
    double inner_risk = 0.0;     // r_k averaged over (image, anchor augmentation)
};

struct DecompositionReport {
    std::vector<DecompositionRow> rows;
    double reconstructed_risk = 0.0;       // sum over classes/patterns of pi_c p_k r_k
    double direct_risk = 0.0;              // R_un by direct enumeration of ordered tuples
    double abs_gap = 0.0;
    double pattern_probability_error = 0.0;  // max_c |sum_patterns p_k - 1|

    nlohmann::json to_json() const;
};

DecompositionReport decomposition_check(const DiscreteWorld& world, const Encoder& enc);

double unsup_risk_exhaustive(const DiscreteWorld& world, const Encoder& enc);
double rbar_sup_exhaustive(const DiscreteWorld& world, const Encoder& enc);

// Same quantity via direct enumeration of ordered class tuples (no pattern
// grouping); used to cross-check the grouped form.
double rbar_sup_direct(const DiscreteWorld& world, const Encoder& enc);

// Supervised risk of the sampled-task convention: expectation, conditioned on
// a collision-free draw of {c_k}, of the logistic loss against the drawn
// negative classes.
double sup_risk_conditional_exhaustive(const DiscreteWorld& world, const Encoder& enc);

// All-classes supervised risk on the world's images.
double sup_risk_exhaustive(const DiscreteWorld& world, const Encoder& enc);

// E_c E_{x,x' ~ rho_c^2} E_a min_{a'} ||f(a(x)) - f(a'(x'))|| over the finite
// augmentation set (iid pair; x' == x included).
double min_cross_term_exhaustive(const DiscreteWorld& world, const Encoder& enc);

// E_c E_{x ~ rho_c} max_{a,a'} ||f(a(x)) - f(a'(x))||
double max_same_term_exhaustive(const DiscreteWorld& world, const Encoder& enc);

struct BoundCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;  // lhs - rhs for lower bounds, rhs - lhs for upper bounds
};

// Inner-risk lower bound: r_k >= r_k_sup - distance terms, checked pointwise
// over every (image, anchor augmentation) for the given pattern; returns the
// check with the smallest slack (slack = lhs - rhs).
BoundCheck inner_risk_bound_check(const DiscreteWorld& world, const Encoder& enc,
                                  const Pattern& pattern);

// Minimum-slack inner-risk check over all classes and patterns.
BoundCheck inner_risk_bound_check_all(const DiscreteWorld& world, const Encoder& enc);

// Intermediate supervised risk bound: rbar_sup <= R_un + min_term + 5 max_term
// (slack = rhs - lhs). Requires the identity augmentation and a unit-norm
// encoder; both are enforced.
BoundCheck rbar_bound_check(const DiscreteWorld& world, const Encoder& enc);

// Randomly sized world within the given caps, with the identity augmentation
// always present.
struct WorldCaps {
    int max_classes = 3;
    int max_negatives = 3;
    int max_images_per_class = 3;
    int max_augmentations = 3;  // including the identity
    int side = 3;
};

DiscreteWorld random_world(const WorldCaps& caps, std::uint64_t seed);

}  // namespace augbound
