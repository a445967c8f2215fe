#include "augbound/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include "augbound/errors.hpp"

namespace augbound {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double l2_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

}  // namespace

bool DiscreteWorld::has_identity_augmentation() const {
    for (const auto& aug : augmentations)
        if (aug.is_identity()) return true;
    return false;
}

void DiscreteWorld::validate() const {
    if (num_negatives < 1) throw ConfigError("world.num_negatives: must be >= 1");
    prior.validate();
    if (static_cast<int>(images.size()) != prior.num_classes())
        throw ConfigError("world.images: must have one list per class");
    for (std::size_t c = 0; c < images.size(); ++c)
        if (images[c].empty())
            throw ConfigError("world.images[" + std::to_string(c) + "]: must be nonempty");
    if (augmentations.empty()) throw ConfigError("world.augmentations: must be nonempty");
    if (augmentations.size() != aug_probs.size())
        throw ConfigError("world.aug_probs: must match the augmentation count");
    double total = 0.0;
    for (double p : aug_probs) {
        if (p < 0.0) throw ConfigError("world.aug_probs: entries must be >= 0");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw ConfigError("world.aug_probs: must sum to 1 within 1e-12");
}

double DiscreteWorld::enumeration_cost() const {
    std::size_t n_max = 0;
    for (const auto& list : images) n_max = std::max(n_max, list.size());
    const double a = static_cast<double>(augmentations.size());
    const double options = static_cast<double>(n_max) * a;
    const double inner = std::pow(options, num_negatives) * a;
    const double tuples = std::pow(static_cast<double>(num_classes()), num_negatives);
    const double anchors = static_cast<double>(num_classes()) * static_cast<double>(n_max) * a;
    return anchors * tuples * inner;
}

namespace {

void guard_enumeration(const DiscreteWorld& world, const char* op) {
    const double cost = world.enumeration_cost();
    if (cost > kEnumerationGuard)
        throw GuardError(std::string(op) + ": enumeration cost " + std::to_string(cost) +
                         " exceeds guard " + std::to_string(kEnumerationGuard));
}

}  // namespace

std::vector<Pattern> enumerate_patterns(int num_classes, int anchor_class, int num_negatives) {
    if (num_classes < 1 || num_negatives < 1)
        throw std::invalid_argument("enumerate_patterns: C and K must be >= 1");
    if (anchor_class < 0 || anchor_class >= num_classes)
        throw std::invalid_argument("enumerate_patterns: anchor class out of range");

    std::vector<int> others;
    for (int c = 0; c < num_classes; ++c)
        if (c != anchor_class) others.push_back(c);

    auto factorial = [](int n) {
        double acc = 1.0;
        for (int i = 2; i <= n; ++i) acc *= i;
        return acc;
    };

    std::vector<Pattern> patterns;
    std::vector<int> current;
    // multisets as nondecreasing index sequences into `others`
    std::function<void(std::size_t, int)> build = [&](std::size_t start, int remaining) {
        Pattern p;
        p.anchor_class = anchor_class;
        p.labels = current;
        // ordered K-tuples realizing this multiset: K! / ((K-k)! * prod m_j!)
        double denom = factorial(num_negatives - static_cast<int>(current.size()));
        std::size_t i = 0;
        while (i < current.size()) {
            std::size_t j = i;
            while (j < current.size() && current[j] == current[i]) ++j;
            denom *= factorial(static_cast<int>(j - i));
            i = j;
        }
        p.multiplicity = factorial(num_negatives) / denom;
        patterns.push_back(std::move(p));
        if (remaining == 0) return;
        for (std::size_t idx = start; idx < others.size(); ++idx) {
            current.push_back(others[idx]);
            build(idx, remaining - 1);
            current.pop_back();
        }
    };
    build(0, num_negatives);
    return patterns;
}

double pattern_probability(const ClassPrior& prior, const Pattern& pattern, int num_negatives) {
    double p = pattern.multiplicity *
               std::pow(prior.probs[static_cast<std::size_t>(pattern.anchor_class)],
                        num_negatives - pattern.k());
    for (int label : pattern.labels) p *= prior.probs[static_cast<std::size_t>(label)];
    return p;
}

WorldEmbeddings embed_world(const DiscreteWorld& world, const Encoder& enc) {
    WorldEmbeddings emb;
    const int C = world.num_classes();
    emb.augmented.resize(static_cast<std::size_t>(C));
    emb.original.resize(static_cast<std::size_t>(C));
    std::vector<std::pair<Image, int>> labeled;
    for (int c = 0; c < C; ++c) {
        const auto& list = world.images[static_cast<std::size_t>(c)];
        emb.augmented[static_cast<std::size_t>(c)].resize(list.size());
        for (std::size_t i = 0; i < list.size(); ++i) {
            emb.original[static_cast<std::size_t>(c)].push_back(forward(enc, list[i]));
            labeled.emplace_back(list[i], c);
            auto& per_aug = emb.augmented[static_cast<std::size_t>(c)][i];
            per_aug.reserve(world.augmentations.size());
            for (const auto& aug : world.augmentations)
                per_aug.push_back(forward(enc, apply(aug, list[i])));
        }
    }
    emb.means = mean_classifier(enc, labeled, C);
    emb.unit_norm = true;
    for (const auto& per_class : emb.augmented)
        for (const auto& per_image : per_class)
            for (const auto& z : per_image)
                if (std::abs(std::sqrt(dot(z, z)) - 1.0) > 1e-9) emb.unit_norm = false;
    return emb;
}

namespace {

// Per-anchor cache: exponentials of the anchor's dot products against every
// candidate negative view and against its own positive views. The logistic
// loss for a fixed negative combination with E = sum_k e^{s_k} is
// log(1 + e^{-s_pos} * E), so expectations enumerate combinations once and
// reuse E across positive augmentations.
struct AnchorContext {
    const DiscreteWorld* world = nullptr;
    std::vector<std::vector<double>> exp_dots;  // [class][img * A + aug] = e^{za . z}
    std::vector<double> exp_neg_pos;            // [aug'] = e^{-za . z_pos(aug')}
};

AnchorContext make_anchor_context(const DiscreteWorld& world, const WorldEmbeddings& emb,
                                  int anchor_class, int image_idx, int aug_idx) {
    AnchorContext ctx;
    ctx.world = &world;
    const auto& za = emb.augmented[static_cast<std::size_t>(anchor_class)]
                                  [static_cast<std::size_t>(image_idx)]
                                  [static_cast<std::size_t>(aug_idx)];
    const int C = world.num_classes();
    const std::size_t A = world.augmentations.size();
    ctx.exp_dots.resize(static_cast<std::size_t>(C));
    for (int c = 0; c < C; ++c) {
        const auto& per_class = emb.augmented[static_cast<std::size_t>(c)];
        auto& flat = ctx.exp_dots[static_cast<std::size_t>(c)];
        flat.resize(per_class.size() * A);
        for (std::size_t i = 0; i < per_class.size(); ++i)
            for (std::size_t a = 0; a < A; ++a)
                flat[i * A + a] = std::exp(dot(za, per_class[i][a]));
    }
    const auto& anchor_views =
        emb.augmented[static_cast<std::size_t>(anchor_class)][static_cast<std::size_t>(image_idx)];
    ctx.exp_neg_pos.resize(A);
    for (std::size_t a = 0; a < A; ++a)
        ctx.exp_neg_pos[a] = std::exp(-dot(za, anchor_views[a]));
    return ctx;
}

// E over negatives' (image, augmentation) draws and the positive augmentation
// of the logistic InfoNCE, with negative classes fixed.
double expected_loss(const AnchorContext& ctx, const std::vector<int>& neg_classes) {
    const DiscreteWorld& world = *ctx.world;
    const std::size_t A = world.augmentations.size();
    double total = 0.0;
    std::function<void(std::size_t, double, double)> rec = [&](std::size_t m, double weight,
                                                               double e_sum) {
        if (m == neg_classes.size()) {
            for (std::size_t a = 0; a < A; ++a)
                total += weight * world.aug_probs[a] * std::log1p(ctx.exp_neg_pos[a] * e_sum);
            return;
        }
        const int cm = neg_classes[m];
        const auto& flat = ctx.exp_dots[static_cast<std::size_t>(cm)];
        const double img_w = 1.0 / static_cast<double>(world.images[static_cast<std::size_t>(cm)].size());
        for (std::size_t i = 0; i < world.images[static_cast<std::size_t>(cm)].size(); ++i)
            for (std::size_t a = 0; a < A; ++a)
                rec(m + 1, weight * img_w * world.aug_probs[a], e_sum + flat[i * A + a]);
    };
    rec(0, 1.0, 0.0);
    return total;
}

std::vector<int> pattern_negative_classes(const Pattern& pattern, int num_negatives) {
    std::vector<int> classes = pattern.labels;
    classes.resize(static_cast<std::size_t>(num_negatives), pattern.anchor_class);
    return classes;
}

}  // namespace

double r_k_exhaustive(const DiscreteWorld& world, const WorldEmbeddings& emb, int image_idx,
                      int aug_idx, const Pattern& pattern) {
    guard_enumeration(world, "r_k_exhaustive");
    const auto ctx = make_anchor_context(world, emb, pattern.anchor_class, image_idx, aug_idx);
    return expected_loss(ctx, pattern_negative_classes(pattern, world.num_negatives));
}

double r_k_sup(const WorldEmbeddings& emb, int anchor_class, int image_idx,
               const Pattern& pattern, int num_negatives) {
    const auto& z = emb.original[static_cast<std::size_t>(anchor_class)]
                                [static_cast<std::size_t>(image_idx)];
    const auto mu_c = emb.means.row(anchor_class);
    double acc = static_cast<double>(num_negatives - pattern.k());
    for (int label : pattern.labels) {
        const auto mu_m = emb.means.row(label);
        double gap = 0.0;
        for (int i = 0; i < emb.means.dim; ++i)
            gap += z[static_cast<std::size_t>(i)] *
                   (mu_c[static_cast<std::size_t>(i)] - mu_m[static_cast<std::size_t>(i)]);
        acc += std::exp(-gap);
    }
    return std::log1p(acc);
}

nlohmann::json DecompositionReport::to_json() const {
    nlohmann::json rows_json = nlohmann::json::array();
    for (const auto& row : rows) {
        rows_json.push_back({{"anchor_class", row.anchor_class},
                             {"labels", row.labels},
                             {"probability", row.probability},
                             {"inner_risk", row.inner_risk}});
    }
    return {{"rows", rows_json},
            {"reconstructed_risk", reconstructed_risk},
            {"direct_risk", direct_risk},
            {"abs_gap", abs_gap},
            {"pattern_probability_error", pattern_probability_error}};
}

DecompositionReport decomposition_check(const DiscreteWorld& world, const Encoder& enc) {
    world.validate();
    guard_enumeration(world, "decomposition_check");
    const auto emb = embed_world(world, enc);
    const int C = world.num_classes();
    const int K = world.num_negatives;
    const std::size_t A = world.augmentations.size();

    DecompositionReport report;
    double reconstructed = 0.0;
    for (int c = 0; c < C; ++c) {
        const auto patterns = enumerate_patterns(C, c, K);
        const auto& list = world.images[static_cast<std::size_t>(c)];
        const double img_w = 1.0 / static_cast<double>(list.size());

        double prob_total = 0.0;
        std::vector<double> pattern_risks(patterns.size(), 0.0);
        for (std::size_t i = 0; i < list.size(); ++i) {
            for (std::size_t a = 0; a < A; ++a) {
                const auto ctx = make_anchor_context(world, emb, c, static_cast<int>(i),
                                                     static_cast<int>(a));
                for (std::size_t p = 0; p < patterns.size(); ++p) {
                    const double r = expected_loss(
                        ctx, pattern_negative_classes(patterns[p], K));
                    pattern_risks[p] += img_w * world.aug_probs[a] * r;
                }
            }
        }
        for (std::size_t p = 0; p < patterns.size(); ++p) {
            const double prob = pattern_probability(world.prior, patterns[p], K);
            prob_total += prob;
            reconstructed += world.prior.probs[static_cast<std::size_t>(c)] * prob *
                             pattern_risks[p];
            report.rows.push_back(
                {c, patterns[p].labels, prob, pattern_risks[p]});
        }
        report.pattern_probability_error =
            std::max(report.pattern_probability_error, std::abs(prob_total - 1.0));
    }
    report.reconstructed_risk = reconstructed;
    report.direct_risk = unsup_risk_exhaustive(world, enc);
    report.abs_gap = std::abs(report.reconstructed_risk - report.direct_risk);
    return report;
}

double unsup_risk_exhaustive(const DiscreteWorld& world, const Encoder& enc) {
    world.validate();
    guard_enumeration(world, "unsup_risk_exhaustive");
    const auto emb = embed_world(world, enc);
    const int C = world.num_classes();
    const int K = world.num_negatives;
    const std::size_t A = world.augmentations.size();

    double total = 0.0;
    for (int c = 0; c < C; ++c) {
        const auto& list = world.images[static_cast<std::size_t>(c)];
        const double img_w = 1.0 / static_cast<double>(list.size());
        for (std::size_t i = 0; i < list.size(); ++i) {
            for (std::size_t a = 0; a < A; ++a) {
                const auto ctx = make_anchor_context(world, emb, c, static_cast<int>(i),
                                                     static_cast<int>(a));
                // direct enumeration of ordered negative-class tuples
                std::vector<int> digits(static_cast<std::size_t>(K), 0);
                while (true) {
                    double tuple_prob = 1.0;
                    for (int d : digits) tuple_prob *= world.prior.probs[static_cast<std::size_t>(d)];
                    total += world.prior.probs[static_cast<std::size_t>(c)] * img_w *
                             world.aug_probs[a] * tuple_prob * expected_loss(ctx, digits);
                    int pos = 0;
                    while (pos < K && ++digits[static_cast<std::size_t>(pos)] == C) {
                        digits[static_cast<std::size_t>(pos)] = 0;
                        ++pos;
                    }
                    if (pos == K) break;
                }
            }
        }
    }
    return total;
}

namespace {

double rbar_sup_pattern_term(const DiscreteWorld& world, const WorldEmbeddings& emb, int c,
                             const Pattern& pattern) {
    const auto& list = world.images[static_cast<std::size_t>(c)];
    double acc = 0.0;
    for (std::size_t i = 0; i < list.size(); ++i)
        acc += r_k_sup(emb, c, static_cast<int>(i), pattern, world.num_negatives);
    return acc / static_cast<double>(list.size());
}

}  // namespace

double rbar_sup_exhaustive(const DiscreteWorld& world, const Encoder& enc) {
    world.validate();
    const auto emb = embed_world(world, enc);
    double total = 0.0;
    for (int c = 0; c < world.num_classes(); ++c) {
        for (const auto& pattern : enumerate_patterns(world.num_classes(), c, world.num_negatives)) {
            total += world.prior.probs[static_cast<std::size_t>(c)] *
                     pattern_probability(world.prior, pattern, world.num_negatives) *
                     rbar_sup_pattern_term(world, emb, c, pattern);
        }
    }
    return total;
}

double rbar_sup_direct(const DiscreteWorld& world, const Encoder& enc) {
    world.validate();
    const auto emb = embed_world(world, enc);
    const int C = world.num_classes();
    const int K = world.num_negatives;
    double total = 0.0;
    for (int c = 0; c < C; ++c) {
        const auto& list = world.images[static_cast<std::size_t>(c)];
        const auto mu_c = emb.means.row(c);
        std::vector<int> digits(static_cast<std::size_t>(K), 0);
        while (true) {
            double tuple_prob = world.prior.probs[static_cast<std::size_t>(c)];
            for (int d : digits) tuple_prob *= world.prior.probs[static_cast<std::size_t>(d)];
            double avg = 0.0;
            for (std::size_t i = 0; i < list.size(); ++i) {
                const auto& z = emb.original[static_cast<std::size_t>(c)][i];
                double acc = 0.0;
                for (int d : digits) {
                    const auto mu_d = emb.means.row(d);
                    double gap = 0.0;
                    for (int t = 0; t < emb.means.dim; ++t)
                        gap += z[static_cast<std::size_t>(t)] *
                               (mu_c[static_cast<std::size_t>(t)] - mu_d[static_cast<std::size_t>(t)]);
                    acc += std::exp(-gap);
                }
                avg += std::log1p(acc);
            }
            total += tuple_prob * avg / static_cast<double>(list.size());
            int pos = 0;
            while (pos < K && ++digits[static_cast<std::size_t>(pos)] == C) {
                digits[static_cast<std::size_t>(pos)] = 0;
                ++pos;
            }
            if (pos == K) break;
        }
    }
    return total;
}

double sup_risk_conditional_exhaustive(const DiscreteWorld& world, const Encoder& enc) {
    world.validate();
    const auto emb = embed_world(world, enc);
    const int K = world.num_negatives;
    double numerator = 0.0;
    double no_collision = 0.0;
    for (int c = 0; c < world.num_classes(); ++c) {
        const double pi_c = world.prior.probs[static_cast<std::size_t>(c)];
        no_collision += pi_c * std::pow(1.0 - pi_c, K);
        for (const auto& pattern : enumerate_patterns(world.num_classes(), c, K)) {
            if (pattern.k() != K) continue;  // collision-free draws only
            numerator += pi_c * pattern_probability(world.prior, pattern, K) *
                         rbar_sup_pattern_term(world, emb, c, pattern);
        }
    }
    if (no_collision < 1e-12)
        throw GuardError("sup_risk_conditional_exhaustive: collision probability is 1");
    return numerator / no_collision;
}

double sup_risk_exhaustive(const DiscreteWorld& world, const Encoder& enc) {
    world.validate();
    std::vector<std::pair<Image, int>> labeled;
    for (int c = 0; c < world.num_classes(); ++c)
        for (const auto& img : world.images[static_cast<std::size_t>(c)])
            labeled.emplace_back(img, c);
    const auto mc = mean_classifier(enc, labeled, world.num_classes());
    // class-weighted by the prior rather than the image counts
    double total = 0.0;
    for (int c = 0; c < world.num_classes(); ++c) {
        const auto& list = world.images[static_cast<std::size_t>(c)];
        std::vector<std::pair<Image, int>> class_set;
        for (const auto& img : list) class_set.emplace_back(img, c);
        total += world.prior.probs[static_cast<std::size_t>(c)] * sup_risk(enc, mc, class_set);
    }
    return total;
}

double min_cross_term_exhaustive(const DiscreteWorld& world, const Encoder& enc) {
    world.validate();
    const auto emb = embed_world(world, enc);
    const std::size_t A = world.augmentations.size();
    double total = 0.0;
    for (int c = 0; c < world.num_classes(); ++c) {
        const auto& per_class = emb.augmented[static_cast<std::size_t>(c)];
        const double img_w = 1.0 / static_cast<double>(per_class.size());
        double class_term = 0.0;
        for (std::size_t x = 0; x < per_class.size(); ++x) {
            for (std::size_t xp = 0; xp < per_class.size(); ++xp) {
                for (std::size_t a = 0; a < A; ++a) {
                    double best = 1e300;
                    for (std::size_t ap = 0; ap < A; ++ap)
                        best = std::min(best, l2_distance(per_class[x][a], per_class[xp][ap]));
                    class_term += img_w * img_w * world.aug_probs[a] * best;
                }
            }
        }
        total += world.prior.probs[static_cast<std::size_t>(c)] * class_term;
    }
    return total;
}

double max_same_term_exhaustive(const DiscreteWorld& world, const Encoder& enc) {
    world.validate();
    const auto emb = embed_world(world, enc);
    const std::size_t A = world.augmentations.size();
    double total = 0.0;
    for (int c = 0; c < world.num_classes(); ++c) {
        const auto& per_class = emb.augmented[static_cast<std::size_t>(c)];
        double class_term = 0.0;
        for (const auto& views : per_class) {
            double best = 0.0;
            for (std::size_t a = 0; a < A; ++a)
                for (std::size_t ap = a + 1; ap < A; ++ap)
                    best = std::max(best, l2_distance(views[a], views[ap]));
            class_term += best;
        }
        total += world.prior.probs[static_cast<std::size_t>(c)] * class_term /
                 static_cast<double>(per_class.size());
    }
    return total;
}

namespace {

// Distance terms of the inner-risk inequality, cached per world.
struct WorldDistanceTerms {
    std::vector<double> max_term;                      // per class
    std::vector<std::vector<double>> min_term;         // [c][image] (anchor-image specific)
    std::vector<std::vector<std::vector<double>>> anchor_residual;  // [c][image][aug]
};

WorldDistanceTerms world_distance_terms(const DiscreteWorld& world, const WorldEmbeddings& emb) {
    WorldDistanceTerms terms;
    const int C = world.num_classes();
    const std::size_t A = world.augmentations.size();

    terms.max_term.resize(static_cast<std::size_t>(C), 0.0);
    for (int c = 0; c < C; ++c) {
        const auto& per_class = emb.augmented[static_cast<std::size_t>(c)];
        double acc = 0.0;
        for (const auto& views : per_class) {
            double best = 0.0;
            for (std::size_t a = 0; a < A; ++a)
                for (std::size_t ap = a + 1; ap < A; ++ap)
                    best = std::max(best, l2_distance(views[a], views[ap]));
            acc += best;
        }
        terms.max_term[static_cast<std::size_t>(c)] = acc / static_cast<double>(per_class.size());
    }

    terms.min_term.resize(static_cast<std::size_t>(C));
    terms.anchor_residual.resize(static_cast<std::size_t>(C));
    for (int c = 0; c < C; ++c) {
        const auto& per_class = emb.augmented[static_cast<std::size_t>(c)];
        auto& min_c = terms.min_term[static_cast<std::size_t>(c)];
        auto& res_c = terms.anchor_residual[static_cast<std::size_t>(c)];
        min_c.resize(per_class.size(), 0.0);
        res_c.resize(per_class.size());
        for (std::size_t x = 0; x < per_class.size(); ++x) {
            // E_{x' ~ rho_c} E_{a'} min_{a''} ||f(a'(x)) - f(a''(x'))||
            double acc = 0.0;
            for (std::size_t xp = 0; xp < per_class.size(); ++xp) {
                for (std::size_t ap = 0; ap < A; ++ap) {
                    double best = 1e300;
                    for (std::size_t app = 0; app < A; ++app)
                        best = std::min(best, l2_distance(per_class[x][ap], per_class[xp][app]));
                    acc += world.aug_probs[ap] * best;
                }
            }
            min_c[x] = acc / static_cast<double>(per_class.size());
            res_c[x].resize(A, 0.0);
            for (std::size_t a = 0; a < A; ++a)
                res_c[x][a] = l2_distance(per_class[x][a],
                                          emb.original[static_cast<std::size_t>(c)][x]);
        }
    }
    return terms;
}

BoundCheck inner_risk_bound_check_impl(const DiscreteWorld& world, const WorldEmbeddings& emb,
                                       const WorldDistanceTerms& terms, const Pattern& pattern) {
    const int c = pattern.anchor_class;
    const std::size_t A = world.augmentations.size();
    const auto& list = world.images[static_cast<std::size_t>(c)];

    BoundCheck worst;
    worst.slack = 1e300;
    for (std::size_t i = 0; i < list.size(); ++i) {
        const double sup = r_k_sup(emb, c, static_cast<int>(i), pattern, world.num_negatives);
        for (std::size_t a = 0; a < A; ++a) {
            const double lhs = r_k_exhaustive(world, emb, static_cast<int>(i),
                                              static_cast<int>(a), pattern);
            double subtract = terms.min_term[static_cast<std::size_t>(c)][i] +
                              terms.max_term[static_cast<std::size_t>(c)];
            if (pattern.k() > 0) {
                double off_max = 0.0;
                for (int label : pattern.labels)
                    off_max = std::max(off_max, terms.max_term[static_cast<std::size_t>(label)]);
                subtract += 2.0 * terms.anchor_residual[static_cast<std::size_t>(c)][i][a] +
                            terms.max_term[static_cast<std::size_t>(c)] + off_max;
            }
            const double rhs = sup - subtract;
            const double slack = lhs - rhs;
            if (slack < worst.slack) worst = {lhs, rhs, slack};
        }
    }
    return worst;
}

void require_bound_preconditions(const DiscreteWorld& world, const WorldEmbeddings& emb,
                                 const char* op) {
    if (!world.has_identity_augmentation())
        throw std::invalid_argument(std::string(op) +
                                    ": augmentation set must contain the identity");
    if (!emb.unit_norm)
        throw std::invalid_argument(std::string(op) + ": encoder outputs must be unit norm");
}

}  // namespace

BoundCheck inner_risk_bound_check(const DiscreteWorld& world, const Encoder& enc,
                                  const Pattern& pattern) {
    world.validate();
    guard_enumeration(world, "inner_risk_bound_check");
    const auto emb = embed_world(world, enc);
    require_bound_preconditions(world, emb, "inner_risk_bound_check");
    const auto terms = world_distance_terms(world, emb);
    return inner_risk_bound_check_impl(world, emb, terms, pattern);
}

BoundCheck inner_risk_bound_check_all(const DiscreteWorld& world, const Encoder& enc) {
    world.validate();
    guard_enumeration(world, "inner_risk_bound_check_all");
    const auto emb = embed_world(world, enc);
    require_bound_preconditions(world, emb, "inner_risk_bound_check_all");
    const auto terms = world_distance_terms(world, emb);
    BoundCheck worst;
    worst.slack = 1e300;
    for (int c = 0; c < world.num_classes(); ++c) {
        for (const auto& pattern :
             enumerate_patterns(world.num_classes(), c, world.num_negatives)) {
            const auto check = inner_risk_bound_check_impl(world, emb, terms, pattern);
            if (check.slack < worst.slack) worst = check;
        }
    }
    return worst;
}

BoundCheck rbar_bound_check(const DiscreteWorld& world, const Encoder& enc) {
    world.validate();
    guard_enumeration(world, "rbar_bound_check");
    const auto emb = embed_world(world, enc);
    require_bound_preconditions(world, emb, "rbar_bound_check");
    BoundCheck check;
    check.lhs = rbar_sup_exhaustive(world, enc);
    check.rhs = unsup_risk_exhaustive(world, enc) + min_cross_term_exhaustive(world, enc) +
                5.0 * max_same_term_exhaustive(world, enc);
    check.slack = check.rhs - check.lhs;
    return check;
}

DiscreteWorld random_world(const WorldCaps& caps, std::uint64_t seed) {
    Rng rng(seed);
    DiscreteWorld world;
    const int C = 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(caps.max_classes)));
    world.num_negatives =
        1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(caps.max_negatives)));

    world.prior.probs.resize(static_cast<std::size_t>(C));
    double total = 0.0;
    for (double& p : world.prior.probs) {
        p = 0.2 + rng.uniform();
        total += p;
    }
    for (double& p : world.prior.probs) p /= total;
    // renormalize exactly enough for the 1e-12 validation
    double check = 0.0;
    for (std::size_t i = 0; i + 1 < world.prior.probs.size(); ++i) check += world.prior.probs[i];
    world.prior.probs.back() = 1.0 - check;

    world.images.resize(static_cast<std::size_t>(C));
    for (int c = 0; c < C; ++c) {
        const int n = 1 + static_cast<int>(
                              rng.uniform_index(static_cast<std::uint64_t>(caps.max_images_per_class)));
        for (int i = 0; i < n; ++i) {
            Image img(caps.side);
            for (double& v : img.pixels) v = rng.uniform();
            world.images[static_cast<std::size_t>(c)].push_back(std::move(img));
        }
    }

    const int A = 1 + static_cast<int>(
                          rng.uniform_index(static_cast<std::uint64_t>(caps.max_augmentations)));
    world.augmentations.push_back(identity_augmentation());
    for (int a = 1; a < A; ++a) {
        Augmentation aug;
        if (rng.bernoulli(0.8)) {
            CropParams crop;
            crop.scale = rng.uniform(0.3, 1.0);
            crop.offset_u = rng.uniform();
            crop.offset_v = rng.uniform();
            aug.steps.emplace_back(crop);
        }
        if (rng.bernoulli(0.5)) aug.steps.emplace_back(FlipStep{});
        if (rng.bernoulli(0.5)) {
            ColorParams color;
            for (int i = 0; i < 3; ++i)
                color.gain[static_cast<std::size_t>(i)] = rng.uniform(0.5, 1.5);
            aug.steps.emplace_back(color);
        }
        if (rng.bernoulli(0.2)) aug.steps.emplace_back(GrayStep{});
        world.augmentations.push_back(std::move(aug));
    }
    world.aug_probs.resize(world.augmentations.size());
    double aug_total = 0.0;
    for (double& p : world.aug_probs) {
        p = 0.2 + rng.uniform();
        aug_total += p;
    }
    for (double& p : world.aug_probs) p /= aug_total;
    double aug_check = 0.0;
    for (std::size_t i = 0; i + 1 < world.aug_probs.size(); ++i) aug_check += world.aug_probs[i];
    world.aug_probs.back() = 1.0 - aug_check;
    return world;
}

}  // namespace augbound
