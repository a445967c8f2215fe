#include "augbound/pixel_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "augbound/errors.hpp"

namespace augbound {

void GenerativeConfig::validate() const {
    if (num_classes < 1) throw ConfigError("generative.num_classes: must be >= 1");
    if (num_semantics < 1) throw ConfigError("generative.num_semantics: must be >= 1");
    if (side < 2) throw ConfigError("generative.side: must be >= 2");
    if (static_cast<int>(class_prior.size()) != num_classes)
        throw ConfigError("generative.class_prior: expected " + std::to_string(num_classes) +
                          " entries, got " + std::to_string(class_prior.size()));
    double total = 0.0;
    for (std::size_t c = 0; c < class_prior.size(); ++c) {
        if (class_prior[c] < 0.0)
            throw ConfigError("generative.class_prior[" + std::to_string(c) + "]: must be >= 0");
        total += class_prior[c];
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw ConfigError("generative.class_prior: must sum to 1 within 1e-12 (got " +
                          std::to_string(total) + ")");
    if (static_cast<int>(semantic_prob.size()) != num_classes)
        throw ConfigError("generative.semantic_prob: expected " + std::to_string(num_classes) +
                          " rows");
    for (int c = 0; c < num_classes; ++c) {
        const auto& row = semantic_prob[static_cast<std::size_t>(c)];
        if (static_cast<int>(row.size()) != num_semantics)
            throw ConfigError("generative.semantic_prob[" + std::to_string(c) + "]: expected " +
                              std::to_string(num_semantics) + " entries");
        for (int t = 0; t < num_semantics; ++t) {
            const double q = row[static_cast<std::size_t>(t)];
            if (q < 0.0 || q > 1.0)
                throw ConfigError("generative.semantic_prob[" + std::to_string(c) + "][" +
                                  std::to_string(t) + "]: must be in [0,1]");
        }
        if (row.back() != 1.0)
            throw ConfigError("generative.semantic_prob[" + std::to_string(c) +
                              "]: background column (last) must be 1");
    }
    if (static_cast<int>(channel_stats.size()) != num_semantics)
        throw ConfigError("generative.channel_stats: expected " + std::to_string(num_semantics) +
                          " entries");
    for (int t = 0; t < num_semantics; ++t) {
        const auto& cs = channel_stats[static_cast<std::size_t>(t)];
        for (int i = 0; i < 3; ++i) {
            if (cs.mean[static_cast<std::size_t>(i)] < 0.0)
                throw ConfigError("generative.channel_stats[" + std::to_string(t) +
                                  "].mean: must be >= 0");
            if (cs.stddev[static_cast<std::size_t>(i)] < 0.0)
                throw ConfigError("generative.channel_stats[" + std::to_string(t) +
                                  "].stddev: must be >= 0");
        }
    }
}

std::vector<PartitionCell> guillotine_partition(int side, int n_cells, Rng& rng) {
    if (side < 2) throw std::invalid_argument("guillotine_partition: side must be >= 2");
    if (n_cells < 1 || n_cells > side * side)
        throw std::invalid_argument("guillotine_partition: n_cells out of range");

    std::vector<PartitionCell> cells{{0, 0, side, side, 0}};
    while (static_cast<int>(cells.size()) < n_cells) {
        // split the largest remaining cell so all cells stay splittable as
        // long as pixels remain
        std::size_t best = 0;
        int best_area = 0;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const int area = cells[i].rows * cells[i].cols;
            if (area > best_area) {
                best_area = area;
                best = i;
            }
        }
        PartitionCell cell = cells[best];
        const bool can_h = cell.rows >= 2;
        const bool can_v = cell.cols >= 2;
        bool horizontal;
        if (can_h && can_v) {
            horizontal = rng.bernoulli(0.5);
        } else {
            horizontal = can_h;
        }
        if (horizontal) {
            const int cut = 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(cell.rows - 1)));
            PartitionCell top = cell, bottom = cell;
            top.rows = cut;
            bottom.row0 = cell.row0 + cut;
            bottom.rows = cell.rows - cut;
            cells[best] = top;
            cells.push_back(bottom);
        } else {
            const int cut = 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(cell.cols - 1)));
            PartitionCell left = cell, right = cell;
            left.cols = cut;
            right.col0 = cell.col0 + cut;
            right.cols = cell.cols - cut;
            cells[best] = left;
            cells.push_back(right);
        }
    }
    return cells;
}

SemanticImage sample_semantic_image(const GenerativeConfig& config, int class_label, Rng& rng) {
    config.validate();
    if (class_label < 0 || class_label >= config.num_classes)
        throw std::invalid_argument("sample_semantic_image: class_label out of range");

    const auto& q = config.semantic_prob[static_cast<std::size_t>(class_label)];
    std::vector<int> active;
    for (int t = 0; t < config.num_semantics; ++t) {
        if (rng.bernoulli(q[static_cast<std::size_t>(t)])) active.push_back(t);
    }
    // q's background column is 1 and uniform() < 1 always holds, so active is
    // never empty
    const int n_active = std::min<int>(static_cast<int>(active.size()),
                                       config.side * config.side);

    auto cells = guillotine_partition(config.side, n_active, rng);
    rng.shuffle(active);
    for (int i = 0; i < n_active; ++i)
        cells[static_cast<std::size_t>(i)].semantic = active[static_cast<std::size_t>(i)];

    SemanticImage out;
    out.class_label = class_label;
    out.map = SemanticMap(config.side);
    out.image = Image(config.side);
    out.cells = cells;

    for (const auto& cell : cells) {
        for (int r = cell.row0; r < cell.row0 + cell.rows; ++r)
            for (int c = cell.col0; c < cell.col0 + cell.cols; ++c)
                out.map.at(r, c) = cell.semantic;
    }
    for (int r = 0; r < config.side; ++r) {
        for (int c = 0; c < config.side; ++c) {
            const auto& stats = config.channel_stats[static_cast<std::size_t>(out.map.at(r, c))];
            for (int i = 0; i < kNumChannels; ++i) {
                out.image.at(r, c, i) =
                    rng.truncated_normal(stats.mean[static_cast<std::size_t>(i)],
                                         stats.stddev[static_cast<std::size_t>(i)]);
            }
        }
    }
    return out;
}

double analytic_sigma(const GenerativeConfig& config, int semantic, int side) {
    if (semantic < 0 || semantic >= config.num_semantics)
        throw std::invalid_argument("analytic_sigma: semantic out of range");
    const auto& cs = config.channel_stats[static_cast<std::size_t>(semantic)];
    double sum = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double s = cs.stddev[static_cast<std::size_t>(i)];
        sum += s * s;
    }
    return std::sqrt(static_cast<double>(side) * side * sum);
}

double analytic_delta_mu(const GenerativeConfig& config, int s1, int s2) {
    if (s1 < 0 || s1 >= config.num_semantics || s2 < 0 || s2 >= config.num_semantics)
        throw std::invalid_argument("analytic_delta_mu: semantic out of range");
    const auto& a = config.channel_stats[static_cast<std::size_t>(s1)];
    const auto& b = config.channel_stats[static_cast<std::size_t>(s2)];
    double sum = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double d = a.mean[static_cast<std::size_t>(i)] - b.mean[static_cast<std::size_t>(i)];
        sum += d * d;
    }
    return std::sqrt(sum);
}

double max_pairwise_delta_mu(const GenerativeConfig& config, const std::vector<int>& semantics) {
    double best = 0.0;
    for (std::size_t i = 0; i < semantics.size(); ++i)
        for (std::size_t j = i + 1; j < semantics.size(); ++j)
            best = std::max(best, analytic_delta_mu(config, semantics[i], semantics[j]));
    return best;
}

}  // namespace augbound
