#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ald/augment.hpp"
#include "ald/projection.hpp"

namespace ald {

enum class LayerKind { Conv3x3, Conv1x1 };

struct LayerSpec {
    LayerKind kind = LayerKind::Conv3x3;
    int out_channels = 0;
    bool relu = true;
};

// Segmentation stack: conv layers with same-padding, a channel-wise dropout
// right before the last (classifier) layer, per-pixel softmax on top. The
// default is the smallest stack that both learns the synthetic scenes and
// shows MC-dropout disagreement.
struct ArchSpec {
    int in_channels = 4;
    std::vector<LayerSpec> layers;
    double dropout_p = 0.2;
    std::vector<double> input_scale; // per input channel, applied before layer 0

    [[nodiscard]] int class_count() const {
        return layers.empty() ? 0 : layers.back().out_channels;
    }
    [[nodiscard]] std::string to_text() const;
    static ArchSpec from_text(const std::string& text);
    static ArchSpec reference(int in_channels, int class_count, double dropout_p = 0.2);
    void validate() const;
};

struct ModelParams {
    struct Layer {
        LayerKind kind;
        int in_c = 0, out_c = 0;
        std::vector<double> w; // conv3x3: [out][in][3][3]; conv1x1: [out][in]
        std::vector<double> b; // [out]
    };
    ArchSpec arch;
    std::vector<Layer> layers;
    uint64_t init_seed = 0;

    [[nodiscard]] size_t parameter_count() const;
    [[nodiscard]] uint64_t content_hash() const;
};

enum class ForwardMode { Train, Eval, Mc };

struct ProbMap {
    int w = 0, h = 0, c = 0;
    std::vector<double> probs; // [c][h][w]
    std::vector<uint8_t> valid;

    [[nodiscard]] size_t pixels() const { return static_cast<size_t>(w) * h; }
    [[nodiscard]] const double* plane(int cls) const {
        return probs.data() + static_cast<size_t>(cls) * pixels();
    }
};

struct ProbStack {
    int w = 0, h = 0, c = 0, t = 0;
    std::vector<double> probs; // [t][c][h][w]
    std::vector<uint8_t> valid;

    [[nodiscard]] size_t pixels() const { return static_cast<size_t>(w) * h; }
    [[nodiscard]] size_t slice_size() const { return static_cast<size_t>(c) * pixels(); }
    [[nodiscard]] const double* slice(int ti) const {
        return probs.data() + static_cast<size_t>(ti) * slice_size();
    }
};

struct TrainConfig {
    int64_t max_iterations = 2000;
    double learning_rate = 0.01;
    double lr_decay = 0.99;       // applied every eval_period
    double weight_decay = 1e-4;   // L2 on weights, not biases
    int batch_size = 16;
    int64_t eval_period = 100;
    int patience = 5;
    double min_delta = 1e-3; // required train-mIoU improvement
    uint64_t seed = 1;

    void validate() const;
};

struct TrainSample {
    RangeImage image;
    uint64_t content_hash = 0;
    int64_t sample_id = 0;
};

struct TrainLogEntry {
    int64_t iteration = 0;
    double loss = 0.0; // mean batch loss since the previous evaluation
    double train_miou = 0.0;
};

struct TrainLog {
    std::vector<TrainLogEntry> entries;
    uint64_t init_param_hash = 0;
    int64_t stop_iteration = 0;
    double best_miou = 0.0;
};

// Fan-in scaled uniform init, deterministic per seed.
ModelParams init_model(const ArchSpec& arch, uint64_t seed);

// Dropout is active in Train and Mc modes (mask drawn from dropout_seed) and
// an identity in Eval mode.
ProbMap forward(const ModelParams& params, const RangeImage& img, ForwardMode mode,
                uint64_t dropout_seed = 0);

// Slice t uses dropout seed mix(base_seed, sample_hash, t), so byte-identical
// inputs receive identical stacks.
ProbStack mc_predict(const ModelParams& params, const RangeImage& img, int t_iterations,
                     uint64_t sample_hash, uint64_t base_seed = 0);

// Masked cross-entropy of a single forward pass; exposed for tests.
double sample_loss(const ModelParams& params, const RangeImage& img, ForwardMode mode,
                   uint64_t dropout_seed);

// Minibatch SGD with weight reset handled by the caller (pass freshly
// initialized params). Early stopping on train-mIoU stability; returns the
// best snapshot.
std::pair<ModelParams, TrainLog> train(const ModelParams& init,
                                       std::span<const TrainSample> samples,
                                       const AugPolicy* aug_policy, const TrainConfig& cfg,
                                       int threads = 1);

// Max relative error between analytic and central-difference gradients over
// >= n_coords sampled parameter coordinates.
double grad_check(const ModelParams& params, const TrainSample& sample, double epsilon,
                  int n_coords = 256, uint64_t seed = 99);

// Checkpoint: text header (arch descriptor, seed, iteration) + raw
// little-endian float64 tensors in layer order.
void save_checkpoint(const ModelParams& params, int64_t iteration,
                     const std::filesystem::path& path);
std::pair<ModelParams, int64_t> load_checkpoint(const std::filesystem::path& path);

// Per-pixel argmax class ids; used by train-time eval and the AL loop.
std::vector<uint16_t> predict_labels(const ProbMap& probs);

} // namespace ald
