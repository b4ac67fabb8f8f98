#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ald/model.hpp"

namespace ald {

struct ScoreImage {
    int w = 0, h = 0;
    std::vector<double> scores; // 0 on invalid pixels
    std::vector<uint8_t> valid;

    [[nodiscard]] size_t pixels() const { return static_cast<size_t>(w) * h; }
};

// Per-pixel mutual information between prediction and model draws:
//   score = H(mean_t p_t) - mean_t H(p_t),  H(p) = -sum_c p_c ln p_c.
// Means are anchored on slice 0 so a stack of identical slices scores an
// exact 0; rounding negatives clamp to 0.
ScoreImage bald(const ProbStack& stack);

// H(mean_t p_t) per pixel.
ScoreImage predictive_entropy(const ProbStack& stack);

// Baseline sampler: iid uniform(0,1) per sample, bypassing pixel scoring.
std::vector<double> random_scores(size_t n_samples, uint64_t seed);

enum class Aggregation { Sum, Mean, Max, WeightedMean };
Aggregation aggregation_from_name(const std::string& name);
std::string aggregation_name(Aggregation a);

struct AggregationSpec {
    Aggregation method = Aggregation::Sum;
    std::vector<double> class_weights; // required for WeightedMean
};

// Collapses a score image to one scalar. WeightedMean weights each valid
// pixel by the weight of its predicted class (argmax of the mean probs).
double aggregate(const ScoreImage& img, const AggregationSpec& spec,
                 const std::vector<uint16_t>* class_map = nullptr);

// Descending score, ties broken by ascending sample id.
std::vector<int64_t> rank_pool(const std::vector<std::pair<int64_t, double>>& scores);

// Streaming equivalent of bald()/predictive_entropy() over mc_predict slices;
// avoids materializing W*H*C*T stacks during pool scoring. Feeding the T
// slices in order yields bitwise the same scores as the stack functions.
class McScoreAccumulator {
public:
    McScoreAccumulator(int w, int h, int c, std::vector<uint8_t> valid);
    void add(const ProbMap& slice);

    [[nodiscard]] ScoreImage bald() const;
    [[nodiscard]] ScoreImage predictive_entropy() const;
    [[nodiscard]] std::vector<uint16_t> mean_class_map() const;
    [[nodiscard]] int slices() const { return t_; }

private:
    void mean_probs(std::vector<double>& out) const;

    int w_, h_, c_, t_ = 0;
    std::vector<uint8_t> valid_;
    std::vector<double> first_;      // slice 0
    std::vector<double> delta_sum_;  // sum_t (p_t - p_0)
    std::vector<double> first_ent_;  // H(p_0) per pixel
    std::vector<double> ent_delta_;  // sum_t (H_t - H_0)
};

// -sum p ln p with 0 ln 0 = 0; exposed for reuse and tests.
double entropy_nats(const double* p, size_t stride, int classes);

} // namespace ald
