#include "augbound/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "augbound/rng.hpp"

namespace augbound {

namespace {

// Flattened pixel vector or embedding, depending on the level. With a
// non-normalizing flatten encoder the two paths are bit-identical.
std::vector<double> embed_or_pixels(const Image& img, const Encoder* embed) {
    if (embed == nullptr) return flatten(img);
    return forward(*embed, img);
}

double l2_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

struct MeanSe {
    double mean = 0.0;
    double std_error = 0.0;
};

MeanSe summarize(const std::vector<double>& values) {
    MeanSe out;
    if (values.empty()) return out;
    for (double v : values) out.mean += v;
    out.mean /= static_cast<double>(values.size());
    if (values.size() > 1) {
        double var = 0.0;
        for (double v : values) var += (v - out.mean) * (v - out.mean);
        var /= static_cast<double>(values.size() - 1);
        out.std_error = std::sqrt(var / static_cast<double>(values.size()));
    }
    return out;
}

}  // namespace

DistanceEstimate min_cross_image_distance(const Image& anchor_image, const Image& other_image,
                                          const AugDistribution& dist, const Encoder* embed,
                                          int m_a, int m_c, std::uint64_t seed) {
    if (m_a < 1 || m_c < 1)
        throw std::invalid_argument("min_cross_image_distance: sample counts must be >= 1");
    const auto other_id = embed_or_pixels(other_image, embed);  // identity candidate
    std::vector<double> per_anchor;
    per_anchor.reserve(static_cast<std::size_t>(m_a));
    for (int i = 0; i < m_a; ++i) {
        Rng anchor_rng(derive_seed(seed, static_cast<std::uint64_t>(i), 0, 0x401));
        const auto anchor =
            embed_or_pixels(apply(sample_augmentation(dist, anchor_rng), anchor_image), embed);
        double best = l2_distance(anchor, other_id);
        for (int j = 0; j < m_c; ++j) {
            Rng cand_rng(derive_seed(seed, static_cast<std::uint64_t>(i),
                                     static_cast<std::uint64_t>(j) + 1, 0x402));
            const auto candidate =
                embed_or_pixels(apply(sample_augmentation(dist, cand_rng), other_image), embed);
            best = std::min(best, l2_distance(anchor, candidate));
        }
        per_anchor.push_back(best);
    }
    const auto stats = summarize(per_anchor);
    return {stats.mean, stats.std_error, m_a, m_c};
}

DistanceEstimate max_same_image_distance(const Image& img, const AugDistribution& dist,
                                         const Encoder* embed, int m, std::uint64_t seed) {
    if (m < 2) throw std::invalid_argument("max_same_image_distance: m must be >= 2");
    std::vector<std::vector<double>> views;
    views.reserve(static_cast<std::size_t>(m) + 1);
    views.push_back(embed_or_pixels(img, embed));  // identity view
    for (int i = 0; i < m; ++i) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i), 0, 0x403));
        views.push_back(embed_or_pixels(apply(sample_augmentation(dist, rng), img), embed));
    }
    double best = 0.0;
    for (std::size_t a = 0; a < views.size(); ++a)
        for (std::size_t b = a + 1; b < views.size(); ++b)
            best = std::max(best, l2_distance(views[a], views[b]));
    // the sample maximum is an exact functional of the drawn set, so no MC
    // standard error is attached here; class-level aggregation reports spread
    // across images
    return {best, 0.0, m, m};
}

ClassDistanceTerms class_distance_terms(const std::vector<std::pair<Image, int>>& dataset,
                                        int num_classes, const AugDistribution& dist,
                                        const Encoder* embed, const ClassDistanceCounts& counts,
                                        std::uint64_t seed) {
    if (num_classes < 1)
        throw std::invalid_argument("class_distance_terms: num_classes must be >= 1");
    std::vector<std::vector<const Image*>> by_class(static_cast<std::size_t>(num_classes));
    for (const auto& [img, label] : dataset) {
        if (label < 0 || label >= num_classes)
            throw std::invalid_argument("class_distance_terms: label out of range");
        by_class[static_cast<std::size_t>(label)].push_back(&img);
    }

    ClassDistanceTerms terms;
    terms.per_class_min.assign(static_cast<std::size_t>(num_classes),
                               std::numeric_limits<double>::quiet_NaN());
    terms.per_class_max.assign(static_cast<std::size_t>(num_classes),
                               std::numeric_limits<double>::quiet_NaN());

    std::vector<double> class_min_values, class_max_values;
    std::vector<double> class_min_se2, class_max_se2;
    for (int c = 0; c < num_classes; ++c) {
        const auto& members = by_class[static_cast<std::size_t>(c)];
        if (members.empty()) {
            terms.skipped_classes.push_back(c);
            continue;
        }

        // same-image maximum, averaged over the class
        std::vector<double> max_values;
        for (std::size_t i = 0; i < members.size(); ++i) {
            const auto est = max_same_image_distance(
                *members[i], dist, embed, counts.max_samples,
                derive_seed(seed, static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(i),
                            0x404));
            max_values.push_back(est.value);
        }
        const auto max_stats = summarize(max_values);
        terms.per_class_max[static_cast<std::size_t>(c)] = max_stats.mean;
        class_max_values.push_back(max_stats.mean);
        class_max_se2.push_back(max_stats.std_error * max_stats.std_error);

        // same-class different-image minimum over ordered pairs
        if (members.size() < 2) {
            terms.skipped_classes.push_back(c);
            continue;
        }
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        for (std::size_t i = 0; i < members.size(); ++i)
            for (std::size_t j = 0; j < members.size(); ++j)
                if (i != j) pairs.emplace_back(i, j);
        if (counts.max_pairs_per_class > 0 &&
            static_cast<int>(pairs.size()) > counts.max_pairs_per_class) {
            Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c), 0, 0x405));
            rng.shuffle(pairs);
            pairs.resize(static_cast<std::size_t>(counts.max_pairs_per_class));
        }
        std::vector<double> min_values;
        std::vector<double> min_se2;
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            const auto [i, j] = pairs[p];
            const auto est = min_cross_image_distance(
                *members[i], *members[j], dist, embed, counts.anchors, counts.candidates,
                derive_seed(seed, static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(p),
                            0x406));
            min_values.push_back(est.value);
            min_se2.push_back(est.std_error * est.std_error);
        }
        const auto min_stats = summarize(min_values);
        terms.per_class_min[static_cast<std::size_t>(c)] = min_stats.mean;
        class_min_values.push_back(min_stats.mean);
        double se2 = 0.0;
        for (double v : min_se2) se2 += v;
        se2 /= static_cast<double>(min_se2.size() * min_se2.size());
        class_min_se2.push_back(se2);
    }

    auto combine = [](const std::vector<double>& values, const std::vector<double>& se2) {
        DistanceEstimate est;
        if (values.empty()) return est;
        double mean = 0.0, var = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
        for (double s : se2) var += s;
        var /= static_cast<double>(values.size() * values.size());
        est.value = mean;
        est.std_error = std::sqrt(var);
        return est;
    };
    terms.min_term = combine(class_min_values, class_min_se2);
    terms.min_term.num_anchor_samples = counts.anchors;
    terms.min_term.num_candidate_samples = counts.candidates;
    terms.max_term = combine(class_max_values, class_max_se2);
    terms.max_term.num_anchor_samples = counts.max_samples;
    terms.max_term.num_candidate_samples = counts.max_samples;
    return terms;
}

double lipschitz_estimate(const Encoder& enc,
                          const std::vector<std::pair<Image, Image>>& pairs) {
    double best = 0.0;
    for (const auto& [a, b] : pairs) {
        const double dx = frobenius_distance(a, b);
        if (dx == 0.0) continue;  // identical inputs carry no slope information
        const double dz = l2_distance(forward(enc, a), forward(enc, b));
        best = std::max(best, dz / dx);
    }
    return best;
}

double centering_residual(const Encoder& enc, const Image& img, const AugDistribution& dist,
                          int m, std::uint64_t seed) {
    if (m < 1) throw std::invalid_argument("centering_residual: m must be >= 1");
    const auto base = forward(enc, img);
    std::vector<double> mean(base.size(), 0.0);
    for (int i = 0; i < m; ++i) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i), 0, 0x407));
        const auto z = forward(enc, apply(sample_augmentation(dist, rng), img));
        for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += z[k];
    }
    for (double& v : mean) v /= static_cast<double>(m);
    return l2_distance(mean, base);
}

nlohmann::json distance_row_json(const std::string& term, const DistanceEstimate& est,
                                 const nlohmann::json& params) {
    return {{"term", term},
            {"value", est.value},
            {"std_error", est.std_error},
            {"params", params}};
}

}  // namespace augbound
