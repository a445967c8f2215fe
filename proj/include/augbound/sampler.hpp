#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "augbound/augment.hpp"
#include "augbound/image.hpp"
#include "augbound/pixel_model.hpp"
#include "augbound/rng.hpp"

namespace augbound {

// Source of the contrastive data generation process: classes from a prior,
// class-conditional images, and augmentations. Implementations must be pure
// given the caller's generator.
class ContrastiveSampler {
public:
    virtual ~ContrastiveSampler() = default;

    virtual int num_classes() const = 0;
    virtual const std::vector<double>& class_prior() const = 0;
    virtual Image sample_image(int class_label, Rng& rng) const = 0;
    virtual Augmentation sample_augmentation(Rng& rng) const = 0;

    int sample_class(Rng& rng) const {
        return static_cast<int>(rng.weighted_index(class_prior()));
    }
};

// Fresh synthetic images from the generative model.
class SyntheticSampler : public ContrastiveSampler {
public:
    SyntheticSampler(GenerativeConfig gen, AugDistribution aug)
        : gen_(std::move(gen)), aug_(aug) {}

    int num_classes() const override { return gen_.num_classes; }
    const std::vector<double>& class_prior() const override { return gen_.class_prior; }
    Image sample_image(int class_label, Rng& rng) const override {
        return sample_semantic_image(gen_, class_label, rng).image;
    }
    Augmentation sample_augmentation(Rng& rng) const override {
        return augbound::sample_augmentation(aug_, rng);
    }

    const GenerativeConfig& generative() const { return gen_; }
    const AugDistribution& augmentation() const { return aug_; }

private:
    GenerativeConfig gen_;
    AugDistribution aug_;
};

// Uniform draws from a fixed labeled dataset; the prior is the empirical class
// frequency.
class FixedDatasetSampler : public ContrastiveSampler {
public:
    FixedDatasetSampler(const std::vector<std::pair<Image, int>>& dataset, int num_classes,
                        AugDistribution aug);

    int num_classes() const override { return static_cast<int>(by_class_.size()); }
    const std::vector<double>& class_prior() const override { return prior_; }
    Image sample_image(int class_label, Rng& rng) const override;
    Augmentation sample_augmentation(Rng& rng) const override {
        return augbound::sample_augmentation(aug_, rng);
    }

private:
    std::vector<std::vector<Image>> by_class_;
    std::vector<double> prior_;
    AugDistribution aug_;
};

}  // namespace augbound
