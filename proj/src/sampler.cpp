#include "augbound/sampler.hpp"

#include <stdexcept>
#include <string>

namespace augbound {

FixedDatasetSampler::FixedDatasetSampler(const std::vector<std::pair<Image, int>>& dataset,
                                         int num_classes, AugDistribution aug)
    : by_class_(static_cast<std::size_t>(num_classes)), aug_(aug) {
    if (dataset.empty()) throw std::invalid_argument("FixedDatasetSampler: empty dataset");
    for (const auto& [img, label] : dataset) {
        if (label < 0 || label >= num_classes)
            throw std::invalid_argument("FixedDatasetSampler: label out of range");
        by_class_[static_cast<std::size_t>(label)].push_back(img);
    }
    prior_.resize(static_cast<std::size_t>(num_classes));
    for (int c = 0; c < num_classes; ++c) {
        if (by_class_[static_cast<std::size_t>(c)].empty())
            throw std::invalid_argument("FixedDatasetSampler: class " + std::to_string(c) +
                                        " has no images");
        prior_[static_cast<std::size_t>(c)] =
            static_cast<double>(by_class_[static_cast<std::size_t>(c)].size()) /
            static_cast<double>(dataset.size());
    }
}

Image FixedDatasetSampler::sample_image(int class_label, Rng& rng) const {
    const auto& list = by_class_.at(static_cast<std::size_t>(class_label));
    return list[rng.uniform_index(list.size())];
}

}  // namespace augbound
