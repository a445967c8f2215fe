#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace augbound {

// splitmix64 finalizer, used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derives the seed of a sub-stream from a base seed and up to three indices.
// Parallel and serial evaluation orders see identical sub-streams.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = mix_seed(base ^ 0xa0761d6478bd642fULL);
    s = mix_seed(s ^ a);
    s = mix_seed(s ^ b);
    s = mix_seed(s ^ c);
    return s;
}

// Seeded generator with explicitly implemented distributions. std::*_distribution
// output is implementation-defined, which would break byte-identical replay, so
// uniform/normal draws are spelled out here on top of mt19937_64.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // [0, 1)
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // (lo, hi]; lo == hi yields hi.
    double uniform_open_below(double lo, double hi) {
        return hi - (hi - lo) * uniform();
    }

    bool bernoulli(double p) { return uniform() < p; }

    // uniform integer in [0, n), rejection-sampled to avoid modulo bias
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::uniform_index: n must be positive");
        const std::uint64_t limit = n * (UINT64_MAX / n);
        std::uint64_t r;
        do {
            r = gen_();
        } while (r >= limit);
        return r % n;
    }

    // standard normal via Marsaglia polar; the spare value is cached
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

    double normal(double mu, double sigma) { return mu + sigma * normal(); }

    // Gaussian truncated at zero from below; sigma == 0 collapses to mu.
    // Requires mu >= 0 so rejection accepts with probability >= 1/2.
    double truncated_normal(double mu, double sigma) {
        if (sigma <= 0.0) return mu;
        double x;
        do {
            x = normal(mu, sigma);
        } while (x < 0.0);
        return x;
    }

    // index drawn according to an unnormalized nonnegative weight vector
    template <typename Container>
    std::size_t weighted_index(const Container& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        if (total <= 0.0) throw std::invalid_argument("Rng::weighted_index: weights sum to zero");
        double u = uniform() * total;
        std::size_t last = 0;
        std::size_t i = 0;
        for (double w : weights) {
            if (w > 0.0) {
                if (u < w) return i;
                u -= w;
                last = i;
            }
            ++i;
        }
        return last;  // guards against accumulated rounding
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[uniform_index(i)]);
        }
    }

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace augbound
