#include "augbound/risk.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "augbound/errors.hpp"

namespace augbound {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("infonce: dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

// mean and standard error of a sample
McEstimate summarize(const std::vector<double>& values) {
    McEstimate est;
    est.n = static_cast<int>(values.size());
    if (values.empty()) return est;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    if (values.size() > 1) var /= static_cast<double>(values.size() - 1);
    est.value = mean;
    est.std_error = std::sqrt(var / static_cast<double>(values.size()));
    return est;
}

double binomial_coefficient(int n, int k) {
    double acc = 1.0;
    for (int i = 1; i <= k; ++i) acc = acc * (n - k + i) / i;
    return acc;
}

}  // namespace

void ClassPrior::validate() const {
    if (probs.empty()) throw ConfigError("class_prior: must be nonempty");
    double total = 0.0;
    for (std::size_t c = 0; c < probs.size(); ++c) {
        if (probs[c] < 0.0)
            throw ConfigError("class_prior[" + std::to_string(c) + "]: must be >= 0");
        total += probs[c];
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw ConfigError("class_prior: must sum to 1 within 1e-12");
}

ClassPrior ClassPrior::uniform(int num_classes) {
    ClassPrior prior;
    prior.probs.assign(static_cast<std::size_t>(num_classes),
                       1.0 / static_cast<double>(num_classes));
    return prior;
}

double infonce(std::span<const double> anchor, std::span<const double> positive,
               const std::vector<std::vector<double>>& negatives, InfoNceForm form) {
    if (negatives.empty()) throw std::invalid_argument("infonce: needs at least one negative");
    const double s_pos = dot(anchor, positive);
    if (form == InfoNceForm::Softmax) {
        // -log(e^{s_pos} / (e^{s_pos} + sum e^{s_k})), evaluated as
        // logsumexp(s_pos, s_1, ..., s_K) - s_pos
        double maxs = s_pos;
        std::vector<double> scores(negatives.size());
        for (std::size_t k = 0; k < negatives.size(); ++k) {
            scores[k] = dot(anchor, negatives[k]);
            maxs = std::max(maxs, scores[k]);
        }
        double acc = std::exp(s_pos - maxs);
        for (double s : scores) acc += std::exp(s - maxs);
        return maxs + std::log(acc) - s_pos;
    }
    double acc = 0.0;
    for (const auto& neg : negatives) acc += std::exp(dot(anchor, neg) - s_pos);
    return std::log1p(acc);
}

double empirical_unsup_risk(const std::vector<ContrastiveTuple>& samples, const Encoder& enc) {
    if (samples.empty()) throw std::invalid_argument("empirical_unsup_risk: empty sample set");
    double total = 0.0;
    for (const auto& tuple : samples) {
        const auto z = forward(enc, tuple.anchor);
        const auto zp = forward(enc, tuple.positive);
        std::vector<std::vector<double>> zn;
        zn.reserve(tuple.negatives.size());
        for (const auto& img : tuple.negatives) zn.push_back(forward(enc, img));
        total += infonce(z, zp, zn);
    }
    return total / static_cast<double>(samples.size());
}

ContrastiveTuple sample_contrastive_tuple(const ContrastiveSampler& sampler, int num_negatives,
                                          Rng& rng) {
    // generation order: classes, then source images, then augmentations
    const int c = sampler.sample_class(rng);
    std::vector<int> neg_classes(static_cast<std::size_t>(num_negatives));
    for (int k = 0; k < num_negatives; ++k) neg_classes[static_cast<std::size_t>(k)] = sampler.sample_class(rng);

    const Image source = sampler.sample_image(c, rng);
    std::vector<Image> neg_sources;
    neg_sources.reserve(static_cast<std::size_t>(num_negatives));
    for (int k = 0; k < num_negatives; ++k)
        neg_sources.push_back(sampler.sample_image(neg_classes[static_cast<std::size_t>(k)], rng));

    ContrastiveTuple tuple;
    tuple.anchor = apply(sampler.sample_augmentation(rng), source);
    tuple.positive = apply(sampler.sample_augmentation(rng), source);
    tuple.negatives.reserve(static_cast<std::size_t>(num_negatives));
    for (int k = 0; k < num_negatives; ++k)
        tuple.negatives.push_back(
            apply(sampler.sample_augmentation(rng), neg_sources[static_cast<std::size_t>(k)]));
    return tuple;
}

McEstimate population_unsup_risk_mc(const ContrastiveSampler& sampler, const Encoder& enc,
                                    int n, int num_negatives, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("population_unsup_risk_mc: n must be >= 1");
    if (num_negatives < 1)
        throw std::invalid_argument("population_unsup_risk_mc: K must be >= 1");
    std::vector<double> losses;
    losses.reserve(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(j), 0, 0x707));
        const auto tuple = sample_contrastive_tuple(sampler, num_negatives, rng);
        const auto z = forward(enc, tuple.anchor);
        const auto zp = forward(enc, tuple.positive);
        std::vector<std::vector<double>> zn;
        zn.reserve(tuple.negatives.size());
        for (const auto& img : tuple.negatives) zn.push_back(forward(enc, img));
        losses.push_back(infonce(z, zp, zn));
    }
    return summarize(losses);
}

MeanClassifier mean_classifier(const Encoder& enc,
                               const std::vector<std::pair<Image, int>>& labeled,
                               int num_classes) {
    if (labeled.empty()) throw std::invalid_argument("mean_classifier: empty dataset");
    MeanClassifier mc;
    mc.num_classes = num_classes;
    std::vector<int> counts(static_cast<std::size_t>(num_classes), 0);
    for (const auto& [img, label] : labeled) {
        if (label < 0 || label >= num_classes)
            throw std::invalid_argument("mean_classifier: label out of range");
        const auto z = forward(enc, img);
        if (mc.dim == 0) {
            mc.dim = static_cast<int>(z.size());
            mc.rows.assign(static_cast<std::size_t>(num_classes) * mc.dim, 0.0);
        }
        double* row = mc.rows.data() + static_cast<std::size_t>(label) * mc.dim;
        for (int i = 0; i < mc.dim; ++i) row[i] += z[static_cast<std::size_t>(i)];
        ++counts[static_cast<std::size_t>(label)];
    }
    for (int c = 0; c < num_classes; ++c) {
        if (counts[static_cast<std::size_t>(c)] == 0)
            throw std::invalid_argument("mean_classifier: class " + std::to_string(c) +
                                        " has no samples");
        double* row = mc.rows.data() + static_cast<std::size_t>(c) * mc.dim;
        for (int i = 0; i < mc.dim; ++i) row[i] /= counts[static_cast<std::size_t>(c)];
    }
    return mc;
}

namespace {

double logistic_sup_loss(std::span<const double> z, int label, const MeanClassifier& mc) {
    const auto mu_c = mc.row(label);
    double acc = 0.0;
    for (int other = 0; other < mc.num_classes; ++other) {
        if (other == label) continue;
        const auto mu_o = mc.row(other);
        double gap = 0.0;
        for (int i = 0; i < mc.dim; ++i)
            gap += z[static_cast<std::size_t>(i)] *
                   (mu_c[static_cast<std::size_t>(i)] - mu_o[static_cast<std::size_t>(i)]);
        acc += std::exp(-gap);
    }
    return std::log1p(acc);
}

}  // namespace

double sup_risk(const Encoder& enc, const MeanClassifier& mc,
                const std::vector<std::pair<Image, int>>& labeled) {
    if (labeled.empty()) throw std::invalid_argument("sup_risk: empty dataset");
    double total = 0.0;
    for (const auto& [img, label] : labeled)
        total += logistic_sup_loss(forward(enc, img), label, mc);
    return total / static_cast<double>(labeled.size());
}

McEstimate intermediate_sup_risk(const Encoder& enc, const MeanClassifier& mc,
                                 const ClassPrior& prior, int num_negatives, int n_mc,
                                 const std::vector<std::pair<Image, int>>& labeled,
                                 std::uint64_t seed) {
    if (n_mc < 1) throw std::invalid_argument("intermediate_sup_risk: n_mc must be >= 1");
    prior.validate();
    std::vector<std::vector<std::size_t>> by_class(prior.probs.size());
    for (std::size_t i = 0; i < labeled.size(); ++i)
        by_class[static_cast<std::size_t>(labeled[i].second)].push_back(i);

    std::vector<double> losses;
    losses.reserve(static_cast<std::size_t>(n_mc));
    for (int j = 0; j < n_mc; ++j) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(j), 0, 0x708));
        const int c = static_cast<int>(rng.weighted_index(prior.probs));
        if (by_class[static_cast<std::size_t>(c)].empty())
            throw std::invalid_argument("intermediate_sup_risk: class " + std::to_string(c) +
                                        " has no samples");
        std::vector<int> neg_classes(static_cast<std::size_t>(num_negatives));
        for (int k = 0; k < num_negatives; ++k)
            neg_classes[static_cast<std::size_t>(k)] =
                static_cast<int>(rng.weighted_index(prior.probs));
        const auto& members = by_class[static_cast<std::size_t>(c)];
        const auto& img = labeled[members[rng.uniform_index(members.size())]].first;
        const auto z = forward(enc, img);
        const auto mu_c = mc.row(c);
        double acc = 0.0;
        for (int neg : neg_classes) {
            const auto mu_n = mc.row(neg);
            double gap = 0.0;
            for (int i = 0; i < mc.dim; ++i)
                gap += z[static_cast<std::size_t>(i)] *
                       (mu_c[static_cast<std::size_t>(i)] - mu_n[static_cast<std::size_t>(i)]);
            acc += std::exp(-gap);  // colliding classes give exp(0) = 1
        }
        losses.push_back(std::log1p(acc));
    }
    return summarize(losses);
}

double tau_k(const ClassPrior& prior, int num_negatives) {
    prior.validate();
    if (num_negatives < 1) throw std::invalid_argument("tau_k: K must be >= 1");
    double no_collision = 0.0;
    for (double p : prior.probs) no_collision += p * std::pow(1.0 - p, num_negatives);
    return 1.0 - no_collision;
}

double collision_log_term(const ClassPrior& prior, int num_negatives) {
    prior.validate();
    if (num_negatives < 1) throw std::invalid_argument("collision_log_term: K must be >= 1");
    double total = 0.0;
    for (double p : prior.probs) {
        for (int j = 0; j <= num_negatives; ++j) {
            total += p * binomial_coefficient(num_negatives, j) * std::pow(p, j) *
                     std::pow(1.0 - p, num_negatives - j) * std::log(static_cast<double>(j) + 1.0);
        }
    }
    return total;
}

namespace {

struct RademacherInputs {
    std::vector<std::vector<double>> anchors;
    std::vector<std::vector<double>> positives;
    std::vector<std::vector<std::vector<double>>> negatives;
    int num_negatives = 0;
    std::size_t input_dim = 0;
};

RademacherInputs flatten_tuples(const std::vector<ContrastiveTuple>& samples) {
    if (samples.empty()) throw std::invalid_argument("rademacher_linear: empty sample set");
    RademacherInputs in;
    in.num_negatives = static_cast<int>(samples.front().negatives.size());
    for (const auto& tuple : samples) {
        if (static_cast<int>(tuple.negatives.size()) != in.num_negatives)
            throw std::invalid_argument("rademacher_linear: inconsistent negative counts");
        in.anchors.push_back(flatten(tuple.anchor));
        in.positives.push_back(flatten(tuple.positive));
        in.negatives.emplace_back();
        for (const auto& img : tuple.negatives) in.negatives.back().push_back(flatten(img));
    }
    in.input_dim = in.anchors.front().size();
    return in;
}

// sup over ||W||_F <= bound of the sign-weighted sum is bound * ||M||_F, where
// row t of M collects eps1*x_j + eps2*x'_j + eps3*x_jk over (j,k).
double sign_draw_value(const RademacherInputs& in, double weight_bound, int output_dim,
                       const std::vector<int>& signs) {
    std::vector<double> m(static_cast<std::size_t>(output_dim) * in.input_dim, 0.0);
    std::size_t s = 0;
    for (std::size_t j = 0; j < in.anchors.size(); ++j) {
        for (int k = 0; k < in.num_negatives; ++k) {
            for (int t = 0; t < output_dim; ++t) {
                const double s1 = signs[s++];
                const double s2 = signs[s++];
                const double s3 = signs[s++];
                double* row = m.data() + static_cast<std::size_t>(t) * in.input_dim;
                const auto& xa = in.anchors[j];
                const auto& xp = in.positives[j];
                const auto& xn = in.negatives[j][static_cast<std::size_t>(k)];
                for (std::size_t i = 0; i < in.input_dim; ++i)
                    row[i] += s1 * xa[i] + s2 * xp[i] + s3 * xn[i];
            }
        }
    }
    double acc = 0.0;
    for (double v : m) acc += v * v;
    return weight_bound * std::sqrt(acc);
}

}  // namespace

McEstimate rademacher_linear(const std::vector<ContrastiveTuple>& samples, double weight_bound,
                             int output_dim, int n_sign_draws, std::uint64_t seed) {
    if (n_sign_draws < 1)
        throw std::invalid_argument("rademacher_linear: n_sign_draws must be >= 1");
    const auto in = flatten_tuples(samples);
    const std::size_t n_signs =
        3 * samples.size() * static_cast<std::size_t>(in.num_negatives) * output_dim;
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(n_sign_draws));
    std::vector<int> signs(n_signs);
    for (int draw = 0; draw < n_sign_draws; ++draw) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(draw), 0, 0x709));
        for (auto& s : signs) s = rng.bernoulli(0.5) ? 1 : -1;
        values.push_back(sign_draw_value(in, weight_bound, output_dim, signs));
    }
    return summarize(values);
}

double rademacher_linear_exact(const std::vector<ContrastiveTuple>& samples, double weight_bound,
                               int output_dim) {
    const auto in = flatten_tuples(samples);
    const std::size_t n_signs =
        3 * samples.size() * static_cast<std::size_t>(in.num_negatives) * output_dim;
    if (n_signs > 22)
        throw GuardError("rademacher_linear_exact: 2^" + std::to_string(n_signs) +
                         " sign patterns exceed the enumeration guard");
    const std::size_t patterns = std::size_t{1} << n_signs;
    std::vector<int> signs(n_signs);
    double total = 0.0;
    for (std::size_t mask = 0; mask < patterns; ++mask) {
        for (std::size_t b = 0; b < n_signs; ++b) signs[b] = (mask >> b) & 1 ? 1 : -1;
        total += sign_draw_value(in, weight_bound, output_dim, signs);
    }
    return total / static_cast<double>(patterns);
}

double infonce_loss_bound(int num_negatives, double embedding_radius) {
    const double r2 = embedding_radius * embedding_radius;
    return std::log1p(num_negatives * std::exp(2.0 * r2));
}

nlohmann::json risk_row_json(const std::string& name, double value, double std_error, int n,
                             int num_negatives, std::uint64_t seed) {
    return {{"name", name}, {"value", value},         {"std_error", std_error},
            {"n", n},       {"K", num_negatives},     {"seed", seed}};
}

}  // namespace augbound
