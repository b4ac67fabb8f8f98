#include "ald/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "ald/errors.hpp"
#include "ald/hash.hpp"
#include "ald/kernels.hpp"
#include "ald/metrics.hpp"
#include "ald/parallel.hpp"
#include "ald/rng.hpp"

namespace ald {

namespace {

constexpr uint64_t kTagInit = 0x494e4954ull;    // "INIT"
constexpr uint64_t kTagBatch = 0x42415443ull;   // "BATC"
constexpr uint64_t kTagDropout = 0x44524f50ull; // "DROP"
constexpr uint64_t kTagDonor = 0x444f4e4full;   // "DONO"

struct Tensor {
    int c = 0, h = 0, w = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int c_, int h_, int w_) : c(c_), h(h_), w(w_), data(static_cast<size_t>(c_) * h_ * w_) {}
    [[nodiscard]] size_t plane_size() const { return static_cast<size_t>(h) * w; }
    double* plane(int ci) { return data.data() + static_cast<size_t>(ci) * plane_size(); }
    [[nodiscard]] const double* plane(int ci) const {
        return data.data() + static_cast<size_t>(ci) * plane_size();
    }
};

Tensor to_input_tensor(const ModelParams& params, const RangeImage& img) {
    const ArchSpec& arch = params.arch;
    if (img.k != arch.in_channels)
        throw ConfigError("input has " + std::to_string(img.k) + " channels, model expects " +
                          std::to_string(arch.in_channels));
    Tensor t(img.k, img.h, img.w);
    for (int c = 0; c < img.k; ++c) {
        double s = arch.input_scale.empty() ? 1.0 : arch.input_scale[static_cast<size_t>(c)];
        const double* src = img.plane(c);
        double* dst = t.plane(c);
        for (size_t i = 0; i < t.plane_size(); ++i) dst[i] = s * src[i];
    }
    return t;
}

void conv_forward(const ModelParams::Layer& layer, const Tensor& in, Tensor& out) {
    const int h = in.h, w = in.w;
    out = Tensor(layer.out_c, h, w);
    for (int oc = 0; oc < layer.out_c; ++oc) {
        double* op = out.plane(oc);
        std::fill(op, op + out.plane_size(), layer.b[static_cast<size_t>(oc)]);
    }
    if (layer.kind == LayerKind::Conv1x1) {
        for (int oc = 0; oc < layer.out_c; ++oc)
            for (int ic = 0; ic < layer.in_c; ++ic)
                kern::axpy(layer.w[static_cast<size_t>(oc) * layer.in_c + ic], in.plane(ic),
                           out.plane(oc), in.plane_size());
        return;
    }
    for (int oc = 0; oc < layer.out_c; ++oc) {
        double* op = out.plane(oc);
        for (int ic = 0; ic < layer.in_c; ++ic) {
            const double* ip = in.plane(ic);
            for (int ky = 0; ky < 3; ++ky) {
                int dy = ky - 1;
                int y0 = std::max(0, -dy), y1 = h - std::max(0, dy);
                for (int kx = 0; kx < 3; ++kx) {
                    int dx = kx - 1;
                    int x0 = std::max(0, -dx), x1 = w - std::max(0, dx);
                    if (x1 <= x0) continue;
                    double wgt =
                        layer.w[((static_cast<size_t>(oc) * layer.in_c + ic) * 3 + ky) * 3 + kx];
                    for (int y = y0; y < y1; ++y)
                        kern::axpy(wgt, ip + static_cast<size_t>(y + dy) * w + (x0 + dx),
                                   op + static_cast<size_t>(y) * w + x0,
                                   static_cast<size_t>(x1 - x0));
                }
            }
        }
    }
}

struct LayerGrad {
    std::vector<double> w, b;
};

// d_out is consumed; returns gradient w.r.t. the layer input.
Tensor conv_backward(const ModelParams::Layer& layer, const Tensor& in, const Tensor& d_out,
                     LayerGrad& grad) {
    const int h = in.h, w = in.w;
    Tensor d_in(layer.in_c, h, w);
    grad.w.assign(layer.w.size(), 0.0);
    grad.b.assign(layer.b.size(), 0.0);
    if (layer.kind == LayerKind::Conv1x1) {
        for (int oc = 0; oc < layer.out_c; ++oc) {
            const double* dop = d_out.plane(oc);
            grad.b[static_cast<size_t>(oc)] = kern::reduce_sum(dop, d_out.plane_size());
            for (int ic = 0; ic < layer.in_c; ++ic) {
                grad.w[static_cast<size_t>(oc) * layer.in_c + ic] =
                    kern::dot(in.plane(ic), dop, in.plane_size());
                kern::axpy(layer.w[static_cast<size_t>(oc) * layer.in_c + ic], dop,
                           d_in.plane(ic), in.plane_size());
            }
        }
        return d_in;
    }
    for (int oc = 0; oc < layer.out_c; ++oc) {
        const double* dop = d_out.plane(oc);
        grad.b[static_cast<size_t>(oc)] = kern::reduce_sum(dop, d_out.plane_size());
        for (int ic = 0; ic < layer.in_c; ++ic) {
            const double* ip = in.plane(ic);
            double* dip = d_in.plane(ic);
            for (int ky = 0; ky < 3; ++ky) {
                int dy = ky - 1;
                int y0 = std::max(0, -dy), y1 = h - std::max(0, dy);
                for (int kx = 0; kx < 3; ++kx) {
                    int dx = kx - 1;
                    int x0 = std::max(0, -dx), x1 = w - std::max(0, dx);
                    if (x1 <= x0) continue;
                    size_t widx =
                        ((static_cast<size_t>(oc) * layer.in_c + ic) * 3 + ky) * 3 + kx;
                    double acc = 0.0;
                    double wgt = layer.w[widx];
                    for (int y = y0; y < y1; ++y) {
                        const double* in_row = ip + static_cast<size_t>(y + dy) * w + (x0 + dx);
                        const double* dout_row = dop + static_cast<size_t>(y) * w + x0;
                        acc += kern::dot(in_row, dout_row, static_cast<size_t>(x1 - x0));
                        kern::axpy(wgt, dout_row, dip + static_cast<size_t>(y + dy) * w + (x0 + dx),
                                   static_cast<size_t>(x1 - x0));
                    }
                    grad.w[widx] = acc;
                }
            }
        }
    }
    return d_in;
}

std::vector<double> dropout_mask(const ArchSpec& arch, int channels, ForwardMode mode,
                                 uint64_t dropout_seed) {
    std::vector<double> mask(static_cast<size_t>(channels), 1.0);
    if (mode == ForwardMode::Eval || arch.dropout_p <= 0.0) return mask;
    Rng rng(mix_seed({dropout_seed, kTagDropout}));
    double keep = 1.0 - arch.dropout_p;
    for (auto& m : mask) m = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
    return mask;
}

struct ForwardCache {
    Tensor input;
    std::vector<Tensor> layer_inputs; // actual input of each layer (post dropout where it applies)
    std::vector<Tensor> zs;           // pre-activation outputs
    std::vector<double> mask;         // channel dropout before the last layer
    ProbMap probs;
};

void softmax_rows(const Tensor& logits, ProbMap& out) {
    const int c = logits.c;
    const size_t npx = logits.plane_size();
    out.w = logits.w;
    out.h = logits.h;
    out.c = c;
    out.probs.resize(static_cast<size_t>(c) * npx);
    for (size_t px = 0; px < npx; ++px) {
        double mx = logits.data[px];
        for (int ci = 1; ci < c; ++ci)
            mx = std::max(mx, logits.data[static_cast<size_t>(ci) * npx + px]);
        double sum = 0.0;
        for (int ci = 0; ci < c; ++ci) {
            double e = std::exp(logits.data[static_cast<size_t>(ci) * npx + px] - mx);
            out.probs[static_cast<size_t>(ci) * npx + px] = e;
            sum += e;
        }
        double inv = 1.0 / sum;
        for (int ci = 0; ci < c; ++ci) out.probs[static_cast<size_t>(ci) * npx + px] *= inv;
    }
}

ForwardCache forward_cached(const ModelParams& params, const RangeImage& img, ForwardMode mode,
                            uint64_t dropout_seed) {
    const auto& layers = params.layers;
    ForwardCache cache;
    cache.input = to_input_tensor(params, img);
    cache.layer_inputs.resize(layers.size());
    cache.zs.resize(layers.size());
    Tensor act = cache.input;
    for (size_t l = 0; l < layers.size(); ++l) {
        if (l + 1 == layers.size()) {
            cache.mask = dropout_mask(params.arch, act.c, mode, dropout_seed);
            for (int ci = 0; ci < act.c; ++ci)
                if (cache.mask[static_cast<size_t>(ci)] != 1.0)
                    kern::scale(cache.mask[static_cast<size_t>(ci)], act.plane(ci),
                                act.plane_size());
        }
        cache.layer_inputs[l] = act;
        Tensor z;
        conv_forward(layers[l], act, z);
        cache.zs[l] = z;
        if (l + 1 < layers.size() && params.arch.layers[l].relu) {
            act = Tensor(z.c, z.h, z.w);
            kern::relu(z.data.data(), act.data.data(), z.data.size());
        } else {
            act = z;
        }
    }
    softmax_rows(act, cache.probs);
    cache.probs.valid = img.valid;
    return cache;
}

struct LossGrad {
    double loss = 0.0;
    Tensor d_logits;
    size_t n_valid = 0;
};

LossGrad loss_and_dlogits(const ForwardCache& cache, const RangeImage& img, int class_count,
                          bool want_grad) {
    LossGrad out;
    const size_t npx = cache.probs.pixels();
    if (want_grad) out.d_logits = Tensor(class_count, img.h, img.w);
    size_t n_valid = 0;
    for (size_t px = 0; px < npx; ++px)
        if (img.valid[px]) ++n_valid;
    out.n_valid = n_valid;
    if (n_valid == 0) return out;
    double inv_n = 1.0 / static_cast<double>(n_valid);
    double loss = 0.0;
    for (size_t px = 0; px < npx; ++px) {
        if (!img.valid[px]) continue;
        int label = img.labels[px];
        if (label >= class_count)
            throw DataFormatError("pixel label " + std::to_string(label) +
                                  " out of range for " + std::to_string(class_count) + " classes");
        double p = cache.probs.probs[static_cast<size_t>(label) * npx + px];
        loss -= std::log(p);
        if (want_grad) {
            for (int c = 0; c < class_count; ++c) {
                double g = cache.probs.probs[static_cast<size_t>(c) * npx + px];
                if (c == label) g -= 1.0;
                out.d_logits.data[static_cast<size_t>(c) * npx + px] = g * inv_n;
            }
        }
    }
    out.loss = loss * inv_n;
    return out;
}

struct ModelGrad {
    std::vector<LayerGrad> layers;
};

// Backprop of the masked cross-entropy for one sample.
double backward(const ModelParams& params, const RangeImage& img, ForwardMode mode,
                uint64_t dropout_seed, ModelGrad& grad) {
    ForwardCache cache = forward_cached(params, img, mode, dropout_seed);
    int cc = params.arch.class_count();
    LossGrad lg = loss_and_dlogits(cache, img, cc, true);
    grad.layers.resize(params.layers.size());
    if (lg.n_valid == 0) {
        for (size_t l = 0; l < params.layers.size(); ++l) {
            grad.layers[l].w.assign(params.layers[l].w.size(), 0.0);
            grad.layers[l].b.assign(params.layers[l].b.size(), 0.0);
        }
        return 0.0;
    }
    Tensor d = std::move(lg.d_logits);
    for (size_t li = params.layers.size(); li-- > 0;) {
        Tensor d_in = conv_backward(params.layers[li], cache.layer_inputs[li], d, grad.layers[li]);
        if (li + 1 == params.layers.size()) {
            for (int ci = 0; ci < d_in.c; ++ci)
                if (cache.mask[static_cast<size_t>(ci)] != 1.0)
                    kern::scale(cache.mask[static_cast<size_t>(ci)], d_in.plane(ci),
                                d_in.plane_size());
        }
        if (li > 0) {
            if (params.arch.layers[li - 1].relu)
                kern::relu_backward(cache.zs[li - 1].data.data(), d_in.data.data(),
                                    d_in.data.data(), d_in.data.size());
            d = std::move(d_in);
        }
    }
    return lg.loss;
}

} // namespace

void TrainConfig::validate() const {
    if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
    if (learning_rate <= 0.0) throw ConfigError("learning_rate must be > 0");
    if (lr_decay <= 0.0) throw ConfigError("lr_decay must be > 0");
    if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (eval_period < 1) throw ConfigError("eval_period must be >= 1");
    if (patience < 1) throw ConfigError("patience must be >= 1");
    if (min_delta < 0.0) throw ConfigError("min_delta must be >= 0");
}

void ArchSpec::validate() const {
    if (in_channels < 1) throw ConfigError("arch: in_channels must be >= 1");
    if (layers.empty()) throw ConfigError("arch: needs at least the classifier layer");
    for (const auto& l : layers)
        if (l.out_channels < 1) throw ConfigError("arch: layer channels must be >= 1");
    if (dropout_p < 0.0 || dropout_p >= 1.0) throw ConfigError("arch: dropout_p must be in [0, 1)");
    if (!input_scale.empty() && input_scale.size() != static_cast<size_t>(in_channels))
        throw ConfigError("arch: input_scale length must match in_channels");
}

ArchSpec ArchSpec::reference(int in_channels, int class_count, double dropout_p) {
    ArchSpec a;
    a.in_channels = in_channels;
    a.layers = {
        {LayerKind::Conv3x3, 16, true},
        {LayerKind::Conv3x3, 32, true},
        {LayerKind::Conv3x3, 32, true},
        {LayerKind::Conv1x1, class_count, false},
    };
    a.dropout_p = dropout_p;
    a.input_scale.assign(static_cast<size_t>(in_channels), 0.04);
    a.input_scale.back() = 1.0; // remission is already in [0, 1]
    return a;
}

std::string ArchSpec::to_text() const {
    std::ostringstream os;
    os << "in=" << in_channels << " drop=" << dropout_p << " scale=";
    for (size_t i = 0; i < input_scale.size(); ++i) {
        if (i) os << ',';
        os << input_scale[i];
    }
    for (const auto& l : layers) {
        os << ' ' << (l.kind == LayerKind::Conv3x3 ? "conv3x3" : "conv1x1") << ':'
           << l.out_channels;
        if (l.relu) os << ":relu";
    }
    return os.str();
}

ArchSpec ArchSpec::from_text(const std::string& text) {
    ArchSpec a;
    a.input_scale.clear();
    a.layers.clear();
    std::istringstream is(text);
    std::string tok;
    while (is >> tok) {
        if (tok.rfind("in=", 0) == 0) {
            a.in_channels = std::stoi(tok.substr(3));
        } else if (tok.rfind("drop=", 0) == 0) {
            a.dropout_p = std::stod(tok.substr(5));
        } else if (tok.rfind("scale=", 0) == 0) {
            std::istringstream ss(tok.substr(6));
            std::string part;
            while (std::getline(ss, part, ',')) a.input_scale.push_back(std::stod(part));
        } else if (tok.rfind("conv", 0) == 0) {
            LayerSpec l;
            l.kind = tok.rfind("conv3x3", 0) == 0 ? LayerKind::Conv3x3 : LayerKind::Conv1x1;
            size_t colon = tok.find(':');
            if (colon == std::string::npos) throw ConfigError("bad arch token: " + tok);
            std::string rest = tok.substr(colon + 1);
            size_t colon2 = rest.find(':');
            l.out_channels = std::stoi(rest.substr(0, colon2));
            l.relu = colon2 != std::string::npos && rest.substr(colon2 + 1) == "relu";
            a.layers.push_back(l);
        } else {
            throw ConfigError("bad arch token: " + tok);
        }
    }
    a.validate();
    return a;
}

size_t ModelParams::parameter_count() const {
    size_t n = 0;
    for (const auto& l : layers) n += l.w.size() + l.b.size();
    return n;
}

uint64_t ModelParams::content_hash() const {
    Fnv1a64 h;
    for (const auto& l : layers) {
        h.update(l.w.data(), l.w.size() * sizeof(double));
        h.update(l.b.data(), l.b.size() * sizeof(double));
    }
    return h.digest();
}

ModelParams init_model(const ArchSpec& arch, uint64_t seed) {
    arch.validate();
    ModelParams p;
    p.arch = arch;
    if (p.arch.input_scale.empty())
        p.arch.input_scale.assign(static_cast<size_t>(arch.in_channels), 1.0);
    p.init_seed = seed;
    Rng rng(mix_seed({seed, kTagInit}));
    int in_c = arch.in_channels;
    for (const auto& spec : arch.layers) {
        ModelParams::Layer l;
        l.kind = spec.kind;
        l.in_c = in_c;
        l.out_c = spec.out_channels;
        size_t taps = spec.kind == LayerKind::Conv3x3 ? 9 : 1;
        size_t fan_in = static_cast<size_t>(in_c) * taps;
        double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        l.w.resize(static_cast<size_t>(l.out_c) * in_c * taps);
        for (auto& w : l.w) w = rng.uniform(-bound, bound);
        l.b.assign(static_cast<size_t>(l.out_c), 0.0);
        p.layers.push_back(std::move(l));
        in_c = spec.out_channels;
    }
    return p;
}

ProbMap forward(const ModelParams& params, const RangeImage& img, ForwardMode mode,
                uint64_t dropout_seed) {
    return forward_cached(params, img, mode, dropout_seed).probs;
}

ProbStack mc_predict(const ModelParams& params, const RangeImage& img, int t_iterations,
                     uint64_t sample_hash, uint64_t base_seed) {
    if (t_iterations < 1) throw ConfigError("mc_predict: T must be >= 1");
    ProbStack stack;
    stack.w = img.w;
    stack.h = img.h;
    stack.c = params.arch.class_count();
    stack.t = t_iterations;
    stack.valid = img.valid;
    stack.probs.resize(stack.slice_size() * static_cast<size_t>(t_iterations));
    for (int t = 0; t < t_iterations; ++t) {
        ProbMap m = forward(params, img, ForwardMode::Mc,
                            mix_seed({base_seed, sample_hash, static_cast<uint64_t>(t)}));
        std::copy(m.probs.begin(), m.probs.end(),
                  stack.probs.begin() + static_cast<size_t>(t) * stack.slice_size());
    }
    return stack;
}

double sample_loss(const ModelParams& params, const RangeImage& img, ForwardMode mode,
                   uint64_t dropout_seed) {
    ForwardCache cache = forward_cached(params, img, mode, dropout_seed);
    return loss_and_dlogits(cache, img, params.arch.class_count(), false).loss;
}

std::vector<uint16_t> predict_labels(const ProbMap& probs) {
    std::vector<uint16_t> out(probs.pixels(), 0);
    const size_t npx = probs.pixels();
    for (size_t px = 0; px < npx; ++px) {
        int best = 0;
        double bv = probs.probs[px];
        for (int c = 1; c < probs.c; ++c) {
            double v = probs.probs[static_cast<size_t>(c) * npx + px];
            if (v > bv) {
                bv = v;
                best = c;
            }
        }
        out[px] = static_cast<uint16_t>(best);
    }
    return out;
}

namespace {

double train_miou(const ModelParams& params, std::span<const TrainSample> samples, int threads) {
    int cc = params.arch.class_count();
    std::vector<ConfusionMatrix> parts(samples.size(), ConfusionMatrix(cc));
    parallel_for(samples.size(), threads, [&](size_t i) {
        ProbMap probs = forward(params, samples[i].image, ForwardMode::Eval, 0);
        auto pred = predict_labels(probs);
        parts[i] = confusion_matrix(pred, samples[i].image.labels, samples[i].image.valid, cc);
    });
    ConfusionMatrix total(cc);
    for (const auto& p : parts) total.merge(p);
    return iou(total).miou;
}

} // namespace

std::pair<ModelParams, TrainLog> train(const ModelParams& init,
                                       std::span<const TrainSample> samples,
                                       const AugPolicy* aug_policy, const TrainConfig& cfg,
                                       int threads) {
    cfg.validate();
    if (samples.empty()) throw ConfigError("train: empty labeled set");
    ModelParams params = init;
    TrainLog log;
    log.init_param_hash = params.content_hash();

    Rng rng(mix_seed({cfg.seed, kTagBatch}));
    ModelParams best = params;
    double best_miou = -1.0;
    int bad = 0;
    double lr = cfg.learning_rate;
    double loss_accum = 0.0;
    int64_t loss_count = 0;
    int64_t iter = 0;

    struct Slot {
        size_t sample;
        int count;
        int64_t donor;
        uint64_t dropout_seed;
        ModelGrad grad;
        double loss;
    };

    for (iter = 1; iter <= cfg.max_iterations; ++iter) {
        // multiset batch: gradients of repeated samples are weighted, not recomputed
        std::map<size_t, int> picks;
        for (int b = 0; b < cfg.batch_size; ++b)
            picks[static_cast<size_t>(rng.uniform_int(samples.size()))]++;
        std::vector<Slot> slots;
        slots.reserve(picks.size());
        for (auto [idx, count] : picks) {
            Slot s;
            s.sample = idx;
            s.count = count;
            s.donor = static_cast<int64_t>(rng.uniform_int(samples.size()));
            s.dropout_seed = mix_seed({cfg.seed, static_cast<uint64_t>(iter),
                                       static_cast<uint64_t>(idx)});
            slots.push_back(std::move(s));
        }
        parallel_for(slots.size(), threads, [&](size_t si) {
            Slot& s = slots[si];
            const TrainSample& ts = samples[s.sample];
            if (aug_policy && !aug_policy->empty()) {
                const RangeImage* donor = &samples[static_cast<size_t>(s.donor)].image;
                RangeImage img = apply_policy(*aug_policy, ts.image, ts.content_hash,
                                              static_cast<uint64_t>(iter), donor);
                s.loss = backward(params, img, ForwardMode::Train, s.dropout_seed, s.grad);
            } else {
                s.loss = backward(params, ts.image, ForwardMode::Train, s.dropout_seed, s.grad);
            }
        });
        // reduce in slot order so results are independent of thread count
        double batch_loss = 0.0;
        for (const auto& s : slots) batch_loss += s.loss * s.count;
        batch_loss /= cfg.batch_size;
        if (!std::isfinite(batch_loss))
            throw NumericError("non-finite training loss at iteration " + std::to_string(iter));

        double wd_scale = 1.0 - lr * cfg.weight_decay;
        for (size_t li = 0; li < params.layers.size(); ++li) {
            auto& layer = params.layers[li];
            if (cfg.weight_decay > 0.0) kern::scale(wd_scale, layer.w.data(), layer.w.size());
            for (const auto& s : slots) {
                double a = -lr * s.count / cfg.batch_size;
                kern::axpy(a, s.grad.layers[li].w.data(), layer.w.data(), layer.w.size());
                kern::axpy(a, s.grad.layers[li].b.data(), layer.b.data(), layer.b.size());
            }
        }
        loss_accum += batch_loss;
        ++loss_count;

        if (iter % cfg.eval_period == 0 || iter == cfg.max_iterations) {
            double miou = train_miou(params, samples, threads);
            log.entries.push_back({iter, loss_accum / static_cast<double>(loss_count), miou});
            loss_accum = 0.0;
            loss_count = 0;
            if (miou > best_miou + cfg.min_delta) {
                best_miou = miou;
                best = params;
                bad = 0;
            } else {
                ++bad;
            }
            lr *= cfg.lr_decay;
            if (bad >= cfg.patience) break;
        }
    }
    log.stop_iteration = std::min(iter, cfg.max_iterations);
    log.best_miou = best_miou;
    return {std::move(best), std::move(log)};
}

double grad_check(const ModelParams& params, const TrainSample& sample, double epsilon,
                  int n_coords, uint64_t seed) {
    if (epsilon <= 0.0) throw ConfigError("grad_check: epsilon must be > 0");
    const uint64_t dseed = mix_seed({seed, kTagDropout});
    ModelGrad grad;
    ModelParams work = params;
    backward(work, sample.image, ForwardMode::Train, dseed, grad);
    for (const auto& lg : grad.layers) {
        for (double g : lg.w)
            if (!std::isfinite(g)) throw NumericError("grad_check: non-finite gradient");
        for (double g : lg.b)
            if (!std::isfinite(g)) throw NumericError("grad_check: non-finite gradient");
    }

    // flat coordinate space over all weights and biases
    struct Coord {
        size_t layer;
        bool bias;
        size_t index;
    };
    std::vector<Coord> all;
    for (size_t li = 0; li < work.layers.size(); ++li) {
        for (size_t i = 0; i < work.layers[li].w.size(); ++i) all.push_back({li, false, i});
        for (size_t i = 0; i < work.layers[li].b.size(); ++i) all.push_back({li, true, i});
    }
    Rng rng(seed);
    auto picks = rng.sample_without_replacement(static_cast<int64_t>(all.size()),
                                                std::min<int64_t>(n_coords, all.size()));
    double max_rel = 0.0;
    for (int64_t pick : picks) {
        const Coord& c = all[static_cast<size_t>(pick)];
        double& slot = c.bias ? work.layers[c.layer].b[c.index] : work.layers[c.layer].w[c.index];
        double orig = slot;
        slot = orig + epsilon;
        double fp = sample_loss(work, sample.image, ForwardMode::Train, dseed);
        slot = orig - epsilon;
        double fm = sample_loss(work, sample.image, ForwardMode::Train, dseed);
        slot = orig;
        double numeric = (fp - fm) / (2.0 * epsilon);
        double analytic =
            c.bias ? grad.layers[c.layer].b[c.index] : grad.layers[c.layer].w[c.index];
        double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
        max_rel = std::max(max_rel, std::abs(analytic - numeric) / denom);
    }
    return max_rel;
}

void save_checkpoint(const ModelParams& params, int64_t iteration,
                     const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataFormatError("cannot write checkpoint: " + path.string());
    std::string arch = params.arch.to_text();
    out << "ALDCKPT1\n" << arch.size() << '\n' << arch << '\n'
        << params.init_seed << ' ' << iteration << '\n';
    for (const auto& l : params.layers) {
        out.write(reinterpret_cast<const char*>(l.w.data()),
                  static_cast<std::streamsize>(l.w.size() * sizeof(double)));
        out.write(reinterpret_cast<const char*>(l.b.data()),
                  static_cast<std::streamsize>(l.b.size() * sizeof(double)));
    }
    if (!out) throw DataFormatError("short write: " + path.string());
}

std::pair<ModelParams, int64_t> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataFormatError("cannot open checkpoint: " + path.string());
    std::string magic;
    std::getline(in, magic);
    if (magic != "ALDCKPT1") throw DataFormatError("not a checkpoint file: " + path.string());
    size_t arch_len = 0;
    in >> arch_len;
    in.ignore(1);
    std::string arch_text(arch_len, '\0');
    in.read(arch_text.data(), static_cast<std::streamsize>(arch_len));
    in.ignore(1);
    uint64_t seed = 0;
    int64_t iteration = 0;
    in >> seed >> iteration;
    in.ignore(1);
    if (!in) throw DataFormatError("truncated checkpoint header: " + path.string());
    ModelParams params = init_model(ArchSpec::from_text(arch_text), seed);
    for (auto& l : params.layers) {
        in.read(reinterpret_cast<char*>(l.w.data()),
                static_cast<std::streamsize>(l.w.size() * sizeof(double)));
        in.read(reinterpret_cast<char*>(l.b.data()),
                static_cast<std::streamsize>(l.b.size() * sizeof(double)));
    }
    if (!in) throw DataFormatError("truncated checkpoint tensors: " + path.string());
    return {std::move(params), iteration};
}

} // namespace ald
