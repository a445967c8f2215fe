#include "augbound/encoder.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "augbound/risk.hpp"
#include "augbound/rng.hpp"
#include "augbound/sampler.hpp"

namespace augbound {

namespace {

constexpr double kDegenerateNorm = 1e-30;

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double l2_norm(const std::vector<double>& v) {
    return std::sqrt(dot(v, v));
}

// y = M x, M is rows x cols row-major
std::vector<double> matvec(const std::vector<double>& m, int rows, int cols,
                           const std::vector<double>& x) {
    std::vector<double> y(static_cast<std::size_t>(rows), 0.0);
    for (int r = 0; r < rows; ++r) {
        const double* row = m.data() + static_cast<std::size_t>(r) * cols;
        double acc = 0.0;
        for (int c = 0; c < cols; ++c) acc += row[c] * x[static_cast<std::size_t>(c)];
        y[static_cast<std::size_t>(r)] = acc;
    }
    return y;
}

// g_x = M^T g_y
std::vector<double> matvec_t(const std::vector<double>& m, int rows, int cols,
                             const std::vector<double>& gy) {
    std::vector<double> gx(static_cast<std::size_t>(cols), 0.0);
    for (int r = 0; r < rows; ++r) {
        const double* row = m.data() + static_cast<std::size_t>(r) * cols;
        const double g = gy[static_cast<std::size_t>(r)];
        for (int c = 0; c < cols; ++c) gx[static_cast<std::size_t>(c)] += row[c] * g;
    }
    return gx;
}

void accumulate_outer(std::vector<double>& m, int rows, int cols,
                      const std::vector<double>& gy, const std::vector<double>& x,
                      double scale) {
    for (int r = 0; r < rows; ++r) {
        double* row = m.data() + static_cast<std::size_t>(r) * cols;
        const double g = gy[static_cast<std::size_t>(r)] * scale;
        for (int c = 0; c < cols; ++c) row[c] += g * x[static_cast<std::size_t>(c)];
    }
}

struct ForwardCache {
    std::vector<double> input;    // flattened image
    std::vector<double> hidden;   // tanh activations (Mlp1)
    std::vector<double> pre;      // pre-normalization output
    std::vector<double> out;      // final embedding
    double pre_norm = 0.0;
    bool degenerate = false;
};

ForwardCache forward_cached(const Encoder& enc, const Image& img) {
    if (img.side != enc.input_side)
        throw std::invalid_argument("forward: image side does not match encoder input");
    ForwardCache cache;
    cache.input = flatten(img);
    switch (enc.arch) {
        case Encoder::Arch::Flatten:
            cache.pre = cache.input;
            break;
        case Encoder::Arch::Linear:
            cache.pre = matvec(enc.w1, enc.output_dim, enc.input_dim, cache.input);
            break;
        case Encoder::Arch::Mlp1: {
            auto u = matvec(enc.w1, enc.hidden_dim, enc.input_dim, cache.input);
            for (int i = 0; i < enc.hidden_dim; ++i)
                u[static_cast<std::size_t>(i)] =
                    std::tanh(u[static_cast<std::size_t>(i)] + enc.b1[static_cast<std::size_t>(i)]);
            cache.hidden = std::move(u);
            cache.pre = matvec(enc.w2, enc.output_dim, enc.hidden_dim, cache.hidden);
            for (int i = 0; i < enc.output_dim; ++i)
                cache.pre[static_cast<std::size_t>(i)] += enc.b2[static_cast<std::size_t>(i)];
            break;
        }
    }
    if (!enc.normalize) {
        cache.out = cache.pre;
        return cache;
    }
    cache.pre_norm = l2_norm(cache.pre);
    if (cache.pre_norm < kDegenerateNorm) {
        cache.degenerate = true;
        enc.degenerate_outputs.fetch_add(1, std::memory_order_relaxed);
        cache.out.assign(cache.pre.size(), 0.0);
        cache.out[0] = 1.0;
        return cache;
    }
    cache.out = cache.pre;
    for (double& v : cache.out) v /= cache.pre_norm;
    return cache;
}

// dL/d(pre) from dL/d(out) through y = z / ||z||:  (g - (g.y) y) / ||z||
std::vector<double> normalize_backward(const ForwardCache& cache, const std::vector<double>& gy) {
    std::vector<double> gz(gy.size(), 0.0);
    if (cache.degenerate) return gz;  // replacement output is constant
    const double gdoty = dot(gy, cache.out);
    for (std::size_t i = 0; i < gy.size(); ++i)
        gz[i] = (gy[i] - gdoty * cache.out[i]) / cache.pre_norm;
    return gz;
}

void backward_params(const Encoder& enc, const ForwardCache& cache,
                     const std::vector<double>& g_out, EncoderGradient& grad, double scale) {
    std::vector<double> g_pre = enc.normalize ? normalize_backward(cache, g_out) : g_out;
    switch (enc.arch) {
        case Encoder::Arch::Flatten:
            break;  // no parameters
        case Encoder::Arch::Linear:
            accumulate_outer(grad.w1, enc.output_dim, enc.input_dim, g_pre, cache.input, scale);
            break;
        case Encoder::Arch::Mlp1: {
            accumulate_outer(grad.w2, enc.output_dim, enc.hidden_dim, g_pre, cache.hidden, scale);
            for (int i = 0; i < enc.output_dim; ++i)
                grad.b2[static_cast<std::size_t>(i)] += scale * g_pre[static_cast<std::size_t>(i)];
            auto g_h = matvec_t(enc.w2, enc.output_dim, enc.hidden_dim, g_pre);
            for (int i = 0; i < enc.hidden_dim; ++i) {
                const double h = cache.hidden[static_cast<std::size_t>(i)];
                g_h[static_cast<std::size_t>(i)] *= 1.0 - h * h;
            }
            accumulate_outer(grad.w1, enc.hidden_dim, enc.input_dim, g_h, cache.input, scale);
            for (int i = 0; i < enc.hidden_dim; ++i)
                grad.b1[static_cast<std::size_t>(i)] += scale * g_h[static_cast<std::size_t>(i)];
            break;
        }
    }
}

void fill_gaussian(std::vector<double>& v, Rng& rng, double scale) {
    for (double& x : v) x = scale * rng.normal();
}

}  // namespace

Encoder& Encoder::operator=(const Encoder& o) {
    if (this == &o) return *this;
    arch = o.arch;
    input_side = o.input_side;
    input_dim = o.input_dim;
    hidden_dim = o.hidden_dim;
    output_dim = o.output_dim;
    normalize = o.normalize;
    w1 = o.w1;
    b1 = o.b1;
    w2 = o.w2;
    b2 = o.b2;
    degenerate_outputs.store(o.degenerate_outputs.load(std::memory_order_relaxed),
                             std::memory_order_relaxed);
    return *this;
}

Encoder::Encoder(Encoder&& o) noexcept { *this = o; }
Encoder& Encoder::operator=(Encoder&& o) noexcept {
    *this = static_cast<const Encoder&>(o);
    return *this;
}

double* Encoder::parameter(std::size_t flat_index) {
    if (flat_index < w1.size()) return &w1[flat_index];
    flat_index -= w1.size();
    if (flat_index < b1.size()) return &b1[flat_index];
    flat_index -= b1.size();
    if (flat_index < w2.size()) return &w2[flat_index];
    flat_index -= w2.size();
    if (flat_index < b2.size()) return &b2[flat_index];
    throw std::out_of_range("Encoder::parameter: index out of range");
}

Encoder make_flatten_encoder(int side, bool normalize) {
    Encoder enc;
    enc.arch = Encoder::Arch::Flatten;
    enc.input_side = side;
    enc.input_dim = side * side * kNumChannels;
    enc.output_dim = enc.input_dim;
    enc.normalize = normalize;
    return enc;
}

Encoder make_linear_encoder(int side, int output_dim, std::uint64_t seed, bool normalize,
                            double init_scale) {
    Encoder enc;
    enc.arch = Encoder::Arch::Linear;
    enc.input_side = side;
    enc.input_dim = side * side * kNumChannels;
    enc.output_dim = output_dim;
    enc.normalize = normalize;
    enc.w1.assign(static_cast<std::size_t>(output_dim) * enc.input_dim, 0.0);
    Rng rng(derive_seed(seed, 0xE0C0));
    fill_gaussian(enc.w1, rng, init_scale);
    return enc;
}

Encoder make_mlp1_encoder(int side, int hidden_dim, int output_dim, std::uint64_t seed,
                          bool normalize, double init_scale) {
    Encoder enc;
    enc.arch = Encoder::Arch::Mlp1;
    enc.input_side = side;
    enc.input_dim = side * side * kNumChannels;
    enc.hidden_dim = hidden_dim;
    enc.output_dim = output_dim;
    enc.normalize = normalize;
    enc.w1.assign(static_cast<std::size_t>(hidden_dim) * enc.input_dim, 0.0);
    enc.b1.assign(static_cast<std::size_t>(hidden_dim), 0.0);
    enc.w2.assign(static_cast<std::size_t>(output_dim) * hidden_dim, 0.0);
    enc.b2.assign(static_cast<std::size_t>(output_dim), 0.0);
    Rng rng(derive_seed(seed, 0xE0C1));
    fill_gaussian(enc.w1, rng, init_scale);
    fill_gaussian(enc.w2, rng, init_scale);
    return enc;
}

std::vector<double> forward(const Encoder& enc, const Image& img) {
    return forward_cached(enc, img).out;
}

double weight_frobenius_norm(const Encoder& enc) {
    double acc = 0.0;
    for (const auto* block : {&enc.w1, &enc.w2})
        for (double v : *block) acc += v * v;
    return std::sqrt(acc);
}

EncoderGradient infonce_gradient(const Encoder& enc, const std::vector<ContrastiveTuple>& batch) {
    if (batch.empty()) throw std::invalid_argument("infonce_gradient: empty batch");
    EncoderGradient grad;
    grad.w1.assign(enc.w1.size(), 0.0);
    grad.b1.assign(enc.b1.size(), 0.0);
    grad.w2.assign(enc.w2.size(), 0.0);
    grad.b2.assign(enc.b2.size(), 0.0);

    const double inv_n = 1.0 / static_cast<double>(batch.size());
    double total_loss = 0.0;
    for (const auto& tuple : batch) {
        if (tuple.negatives.empty())
            throw std::invalid_argument("infonce_gradient: tuple without negatives");
        const auto anchor = forward_cached(enc, tuple.anchor);
        const auto positive = forward_cached(enc, tuple.positive);
        std::vector<ForwardCache> negatives;
        negatives.reserve(tuple.negatives.size());
        for (const auto& img : tuple.negatives) negatives.push_back(forward_cached(enc, img));

        // logistic InfoNCE: L = log(1 + sum_k exp(s_k - s_pos))
        const double s_pos = dot(anchor.out, positive.out);
        std::vector<double> t(negatives.size());
        double denom = 1.0;
        for (std::size_t k = 0; k < negatives.size(); ++k) {
            t[k] = std::exp(dot(anchor.out, negatives[k].out) - s_pos);
            denom += t[k];
        }
        total_loss += std::log(denom);

        const std::size_t dim = anchor.out.size();
        std::vector<double> g_anchor(dim, 0.0);
        std::vector<double> g_positive(dim, 0.0);
        double w_total = 0.0;
        for (std::size_t k = 0; k < negatives.size(); ++k) {
            const double w = t[k] / denom;
            w_total += w;
            for (std::size_t i = 0; i < dim; ++i)
                g_anchor[i] += w * negatives[k].out[i];
            std::vector<double> g_neg(dim);
            for (std::size_t i = 0; i < dim; ++i) g_neg[i] = w * anchor.out[i];
            backward_params(enc, negatives[k], g_neg, grad, inv_n);
        }
        for (std::size_t i = 0; i < dim; ++i) {
            g_anchor[i] -= w_total * positive.out[i];
            g_positive[i] = -w_total * anchor.out[i];
        }
        backward_params(enc, anchor, g_anchor, grad, inv_n);
        backward_params(enc, positive, g_positive, grad, inv_n);
    }
    grad.loss = total_loss * inv_n;
    return grad;
}

void TrainConfig::validate() const {
    if (learning_rate < 0.0) throw std::invalid_argument("train.learning_rate: must be >= 0");
    if (decay_factor <= 0.0) throw std::invalid_argument("train.decay_factor: must be > 0");
    if (weight_decay < 0.0 || weight_decay >= 1.0)
        throw std::invalid_argument("train.weight_decay: must be in [0,1)");
    if (batch_size < 1) throw std::invalid_argument("train.batch_size: must be >= 1");
    if (batches_per_epoch < 1) throw std::invalid_argument("train.batches_per_epoch: must be >= 1");
    if (epochs < 0) throw std::invalid_argument("train.epochs: must be >= 0");
    if (num_negatives < 1) throw std::invalid_argument("train.num_negatives: must be >= 1");
    if (!std::is_sorted(decay_epochs.begin(), decay_epochs.end()))
        throw std::invalid_argument("train.decay_epochs: must be sorted");
}

TrainResult train(const Encoder& enc, const ContrastiveSampler& sampler, const TrainConfig& cfg) {
    cfg.validate();
    TrainResult result;
    result.encoder = enc;
    Encoder& model = result.encoder;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double lr = cfg.learning_rate;
        for (int decay_at : cfg.decay_epochs)
            if (epoch >= decay_at) lr *= cfg.decay_factor;

        double epoch_loss = 0.0;
        for (int batch_idx = 0; batch_idx < cfg.batches_per_epoch; ++batch_idx) {
            Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch),
                                static_cast<std::uint64_t>(batch_idx), 0x7121));
            std::vector<ContrastiveTuple> batch;
            batch.reserve(static_cast<std::size_t>(cfg.batch_size));
            for (int b = 0; b < cfg.batch_size; ++b)
                batch.push_back(sample_contrastive_tuple(sampler, cfg.num_negatives, rng));

            const auto grad = infonce_gradient(model, batch);
            if (!std::isfinite(grad.loss)) {
                std::ostringstream trace;
                trace << "training diverged at epoch " << epoch << " batch " << batch_idx
                      << " (loss=" << grad.loss << "); trace:";
                for (double r : result.epoch_risk) trace << " " << r;
                throw std::runtime_error(trace.str());
            }
            epoch_loss += grad.loss;

            // decoupled weight decay, then the gradient step
            if (cfg.weight_decay > 0.0) {
                for (auto* block : {&model.w1, &model.w2})
                    for (double& v : *block) v *= 1.0 - cfg.weight_decay;
            }
            auto step = [lr](std::vector<double>& param, const std::vector<double>& g) {
                for (std::size_t i = 0; i < param.size(); ++i) param[i] -= lr * g[i];
            };
            step(model.w1, grad.w1);
            step(model.b1, grad.b1);
            step(model.w2, grad.w2);
            step(model.b2, grad.b2);
        }
        result.epoch_risk.push_back(epoch_loss / cfg.batches_per_epoch);
    }
    return result;
}

double linear_probe(const Encoder& enc,
                    const std::vector<std::pair<Image, int>>& train_set,
                    const std::vector<std::pair<Image, int>>& test_set,
                    int probe_epochs, double probe_lr) {
    if (train_set.empty() || test_set.empty())
        throw std::invalid_argument("linear_probe: empty dataset");
    int num_classes = 0;
    for (const auto& [img, label] : train_set) num_classes = std::max(num_classes, label + 1);
    {
        const int first = train_set.front().second;
        bool single = true;
        for (const auto& [img, label] : train_set)
            if (label != first) { single = false; break; }
        if (single) throw std::invalid_argument("linear_probe: training set has a single class");
    }

    std::vector<std::vector<double>> train_emb, test_emb;
    train_emb.reserve(train_set.size());
    for (const auto& [img, label] : train_set) train_emb.push_back(forward(enc, img));
    test_emb.reserve(test_set.size());
    for (const auto& [img, label] : test_set) test_emb.push_back(forward(enc, img));

    const int dim = static_cast<int>(train_emb.front().size());
    std::vector<double> weights(static_cast<std::size_t>(num_classes) * dim, 0.0);
    std::vector<double> bias(static_cast<std::size_t>(num_classes), 0.0);

    const double inv_n = 1.0 / static_cast<double>(train_set.size());
    std::vector<double> logits(static_cast<std::size_t>(num_classes));
    for (int epoch = 0; epoch < probe_epochs; ++epoch) {
        std::vector<double> g_w(weights.size(), 0.0);
        std::vector<double> g_b(bias.size(), 0.0);
        for (std::size_t s = 0; s < train_set.size(); ++s) {
            const auto& x = train_emb[s];
            const int label = train_set[s].second;
            double maxl = -1e300;
            for (int c = 0; c < num_classes; ++c) {
                double acc = bias[static_cast<std::size_t>(c)];
                const double* row = weights.data() + static_cast<std::size_t>(c) * dim;
                for (int i = 0; i < dim; ++i) acc += row[i] * x[static_cast<std::size_t>(i)];
                logits[static_cast<std::size_t>(c)] = acc;
                maxl = std::max(maxl, acc);
            }
            double z = 0.0;
            for (int c = 0; c < num_classes; ++c)
                z += std::exp(logits[static_cast<std::size_t>(c)] - maxl);
            for (int c = 0; c < num_classes; ++c) {
                const double p = std::exp(logits[static_cast<std::size_t>(c)] - maxl) / z;
                const double g = (p - (c == label ? 1.0 : 0.0)) * inv_n;
                double* row = g_w.data() + static_cast<std::size_t>(c) * dim;
                for (int i = 0; i < dim; ++i) row[i] += g * x[static_cast<std::size_t>(i)];
                g_b[static_cast<std::size_t>(c)] += g;
            }
        }
        for (std::size_t i = 0; i < weights.size(); ++i) weights[i] -= probe_lr * g_w[i];
        for (std::size_t i = 0; i < bias.size(); ++i) bias[i] -= probe_lr * g_b[i];
    }

    int correct = 0;
    for (std::size_t s = 0; s < test_set.size(); ++s) {
        const auto& x = test_emb[s];
        int best = 0;
        double best_logit = -1e300;
        for (int c = 0; c < num_classes; ++c) {
            double acc = bias[static_cast<std::size_t>(c)];
            const double* row = weights.data() + static_cast<std::size_t>(c) * dim;
            for (int i = 0; i < dim; ++i) acc += row[i] * x[static_cast<std::size_t>(i)];
            if (acc > best_logit) {  // strict: ties stay with the lowest class id
                best_logit = acc;
                best = c;
            }
        }
        if (best == test_set[s].second) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(test_set.size());
}

namespace {

constexpr char kCheckpointMagic[5] = {'A', 'E', 'N', 'C', '1'};

template <typename T>
void write_value(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T read_value(std::ifstream& in, const std::string& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw std::runtime_error("load_encoder: truncated checkpoint " + path);
    return v;
}

}  // namespace

void save_encoder(const Encoder& enc, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_encoder: cannot open " + path);
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    write_value<std::uint8_t>(out, static_cast<std::uint8_t>(enc.arch));
    write_value<std::uint8_t>(out, enc.normalize ? 1 : 0);
    write_value<std::uint32_t>(out, static_cast<std::uint32_t>(enc.input_side));
    write_value<std::uint32_t>(out, static_cast<std::uint32_t>(enc.hidden_dim));
    write_value<std::uint32_t>(out, static_cast<std::uint32_t>(enc.output_dim));
    for (const auto* block : {&enc.w1, &enc.b1, &enc.w2, &enc.b2})
        for (double v : *block) write_value<double>(out, v);
    if (!out) throw std::runtime_error("save_encoder: write failed for " + path);
}

Encoder load_encoder(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_encoder: cannot open " + path);
    char magic[5] = {};
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
        throw std::runtime_error("load_encoder: bad magic in " + path);
    const auto arch = static_cast<Encoder::Arch>(read_value<std::uint8_t>(in, path));
    const bool normalize = read_value<std::uint8_t>(in, path) != 0;
    const int side = static_cast<int>(read_value<std::uint32_t>(in, path));
    const int hidden = static_cast<int>(read_value<std::uint32_t>(in, path));
    const int out_dim = static_cast<int>(read_value<std::uint32_t>(in, path));

    Encoder enc;
    switch (arch) {
        case Encoder::Arch::Flatten:
            enc = make_flatten_encoder(side, normalize);
            break;
        case Encoder::Arch::Linear:
            enc = make_linear_encoder(side, out_dim, 0, normalize);
            break;
        case Encoder::Arch::Mlp1:
            enc = make_mlp1_encoder(side, hidden, out_dim, 0, normalize);
            break;
        default:
            throw std::runtime_error("load_encoder: unknown architecture tag in " + path);
    }
    for (auto* block : {&enc.w1, &enc.b1, &enc.w2, &enc.b2})
        for (double& v : *block) v = read_value<double>(in, path);
    return enc;
}

void write_loss_trace_csv(const std::vector<double>& epoch_risk, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_loss_trace_csv: cannot open " + path);
    out << "epoch,risk\n";
    char buf[64];
    for (std::size_t i = 0; i < epoch_risk.size(); ++i) {
        const int len = std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, epoch_risk[i]);
        out.write(buf, len);
    }
}

}  // namespace augbound
