#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "augbound/encoder.hpp"
#include "augbound/image.hpp"
#include "augbound/sampler.hpp"

namespace augbound {

// One contrastive sample: anchor and positive are two augmentations of the
// same source image, negatives are augmentations of independently drawn images.
struct ContrastiveTuple {
    Image anchor;
    Image positive;
    std::vector<Image> negatives;
};

struct ClassPrior {
    std::vector<double> probs;

    int num_classes() const { return static_cast<int>(probs.size()); }
    void validate() const;  // sums to 1 within 1e-12, entries >= 0

    static ClassPrior uniform(int num_classes);
};

// Linear head whose row c is the empirical mean embedding of class-c originals.
struct MeanClassifier {
    int num_classes = 0;
    int dim = 0;
    std::vector<double> rows;  // num_classes x dim

    std::span<const double> row(int c) const {
        return {rows.data() + static_cast<std::size_t>(c) * dim, static_cast<std::size_t>(dim)};
    }
};

enum class InfoNceForm { Softmax, Logistic };

// Softmax form: -log(e^{z.z'} / (e^{z.z'} + sum_k e^{z.z_k}))
// Logistic form: log(1 + sum_k exp(-z.(z' - z_k)))
// The two agree to 1e-12; both are exposed for the equivalence check.
double infonce(std::span<const double> anchor, std::span<const double> positive,
               const std::vector<std::vector<double>>& negatives,
               InfoNceForm form = InfoNceForm::Logistic);

double empirical_unsup_risk(const std::vector<ContrastiveTuple>& samples, const Encoder& enc);

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
    int n = 0;
};

// Monte-Carlo unsupervised risk over freshly generated tuples, following the
// generation order: classes, source images, augmentations.
McEstimate population_unsup_risk_mc(const ContrastiveSampler& sampler, const Encoder& enc,
                                    int n, int num_negatives, std::uint64_t seed);

ContrastiveTuple sample_contrastive_tuple(const ContrastiveSampler& sampler, int num_negatives,
                                          Rng& rng);

// Per-class mean embeddings of original (unaugmented) images. Throws
// std::invalid_argument naming any class with no samples.
MeanClassifier mean_classifier(const Encoder& enc,
                               const std::vector<std::pair<Image, int>>& labeled,
                               int num_classes);

// Mean over samples of log(1 + sum_{c' != c} exp(-f(x).(mu_c - mu_c'))), the
// logistic softmax-cross-entropy of the mean classifier over all other classes.
double sup_risk(const Encoder& enc, const MeanClassifier& mc,
                const std::vector<std::pair<Image, int>>& labeled);

// MC over (c, {c_k}) ~ pi^{K+1} and x ~ class c of
// log(1 + sum_k exp(-f(x).(mu_c - mu_{c_k}))); colliding c_k = c contribute
// exp(0) = 1.
McEstimate intermediate_sup_risk(const Encoder& enc, const MeanClassifier& mc,
                                 const ClassPrior& prior, int num_negatives, int n_mc,
                                 const std::vector<std::pair<Image, int>>& labeled,
                                 std::uint64_t seed);

// tau_K = P(Col != 0) = 1 - sum_c pi_c (1 - pi_c)^K
double tau_k(const ClassPrior& prior, int num_negatives);

// E log(Col + 1) = sum_c pi_c sum_j C(K,j) pi_c^j (1-pi_c)^{K-j} log(j+1)
double collision_log_term(const ClassPrior& prior, int num_negatives);

// Empirical Rademacher complexity of the pre-normalization linear class
// {x -> Wx : ||W||_F <= weight_bound}; the inner supremum is closed-form
// weight_bound * ||M(eps)||_F per sign draw.
McEstimate rademacher_linear(const std::vector<ContrastiveTuple>& samples, double weight_bound,
                             int output_dim, int n_sign_draws, std::uint64_t seed);

// Exhaustive version over all 2^(3nK d_out) sign patterns; guarded.
double rademacher_linear_exact(const std::vector<ContrastiveTuple>& samples, double weight_bound,
                               int output_dim);

// Loss bound B = log(1 + K e^{2 R^2}) for encoders with ||f|| <= R.
double infonce_loss_bound(int num_negatives, double embedding_radius);

nlohmann::json risk_row_json(const std::string& name, double value, double std_error, int n,
                             int num_negatives, std::uint64_t seed);

}  // namespace augbound
