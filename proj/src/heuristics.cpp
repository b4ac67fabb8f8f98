#include "ald/heuristics.hpp"

#include <algorithm>
#include <cmath>

#include "ald/errors.hpp"
#include "ald/kernels.hpp"
#include "ald/rng.hpp"

namespace ald {

double entropy_nats(const double* p, size_t stride, int classes) {
    double h = 0.0;
    for (int c = 0; c < classes; ++c) {
        double v = p[static_cast<size_t>(c) * stride];
        if (v > 0.0) h -= v * std::log(v);
    }
    return h;
}

namespace {

void check_normalized(const ProbStack& stack) {
    const size_t npx = stack.pixels();
    for (int t = 0; t < stack.t; ++t) {
        const double* s = stack.slice(t);
        for (size_t px = 0; px < npx; ++px) {
            double sum = 0.0;
            for (int c = 0; c < stack.c; ++c) sum += s[static_cast<size_t>(c) * npx + px];
            if (std::abs(sum - 1.0) > 1e-6)
                throw NumericError("prob stack slice " + std::to_string(t) +
                                   " is not normalized at pixel " + std::to_string(px));
        }
    }
}

} // namespace

McScoreAccumulator::McScoreAccumulator(int w, int h, int c, std::vector<uint8_t> valid)
    : w_(w), h_(h), c_(c), valid_(std::move(valid)) {
    size_t npx = static_cast<size_t>(w_) * h_;
    first_.assign(npx * static_cast<size_t>(c_), 0.0);
    delta_sum_.assign(npx * static_cast<size_t>(c_), 0.0);
    first_ent_.assign(npx, 0.0);
    ent_delta_.assign(npx, 0.0);
}

void McScoreAccumulator::add(const ProbMap& slice) {
    if (slice.w != w_ || slice.h != h_ || slice.c != c_)
        throw ConfigError("mc accumulator: slice shape mismatch");
    const size_t npx = static_cast<size_t>(w_) * h_;
    if (t_ == 0) {
        first_ = slice.probs;
        for (size_t px = 0; px < npx; ++px)
            first_ent_[px] = entropy_nats(slice.probs.data() + px, npx, c_);
    } else {
        for (size_t i = 0; i < first_.size(); ++i) delta_sum_[i] += slice.probs[i] - first_[i];
        for (size_t px = 0; px < npx; ++px)
            ent_delta_[px] += entropy_nats(slice.probs.data() + px, npx, c_) - first_ent_[px];
    }
    ++t_;
}

void McScoreAccumulator::mean_probs(std::vector<double>& out) const {
    out.resize(first_.size());
    double inv_t = 1.0 / static_cast<double>(t_);
    for (size_t i = 0; i < first_.size(); ++i) out[i] = first_[i] + delta_sum_[i] * inv_t;
}

ScoreImage McScoreAccumulator::bald() const {
    if (t_ < 1) throw ConfigError("mc accumulator: no slices");
    ScoreImage img;
    img.w = w_;
    img.h = h_;
    img.valid = valid_;
    const size_t npx = static_cast<size_t>(w_) * h_;
    img.scores.assign(npx, 0.0);
    std::vector<double> mean;
    mean_probs(mean);
    double inv_t = 1.0 / static_cast<double>(t_);
    for (size_t px = 0; px < npx; ++px) {
        if (!valid_[px]) continue;
        double h_mean = entropy_nats(mean.data() + px, npx, c_);
        double mean_h = first_ent_[px] + ent_delta_[px] * inv_t;
        img.scores[px] = std::max(0.0, h_mean - mean_h);
    }
    return img;
}

ScoreImage McScoreAccumulator::predictive_entropy() const {
    if (t_ < 1) throw ConfigError("mc accumulator: no slices");
    ScoreImage img;
    img.w = w_;
    img.h = h_;
    img.valid = valid_;
    const size_t npx = static_cast<size_t>(w_) * h_;
    img.scores.assign(npx, 0.0);
    std::vector<double> mean;
    mean_probs(mean);
    for (size_t px = 0; px < npx; ++px) {
        if (!valid_[px]) continue;
        img.scores[px] = entropy_nats(mean.data() + px, npx, c_);
    }
    return img;
}

std::vector<uint16_t> McScoreAccumulator::mean_class_map() const {
    if (t_ < 1) throw ConfigError("mc accumulator: no slices");
    const size_t npx = static_cast<size_t>(w_) * h_;
    std::vector<double> mean;
    mean_probs(mean);
    std::vector<uint16_t> out(npx, 0);
    for (size_t px = 0; px < npx; ++px) {
        int best = 0;
        double bv = mean[px];
        for (int c = 1; c < c_; ++c) {
            double v = mean[static_cast<size_t>(c) * npx + px];
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

McScoreAccumulator accumulate_stack(const ProbStack& stack) {
    if (stack.t < 1) throw ConfigError("prob stack with T < 1");
    check_normalized(stack);
    McScoreAccumulator acc(stack.w, stack.h, stack.c, stack.valid);
    const size_t npx = stack.pixels();
    for (int t = 0; t < stack.t; ++t) {
        ProbMap slice;
        slice.w = stack.w;
        slice.h = stack.h;
        slice.c = stack.c;
        slice.valid = stack.valid;
        slice.probs.assign(stack.slice(t), stack.slice(t) + npx * static_cast<size_t>(stack.c));
        acc.add(slice);
    }
    return acc;
}

} // namespace

ScoreImage bald(const ProbStack& stack) { return accumulate_stack(stack).bald(); }

ScoreImage predictive_entropy(const ProbStack& stack) {
    return accumulate_stack(stack).predictive_entropy();
}

std::vector<double> random_scores(size_t n_samples, uint64_t seed) {
    Rng rng(seed);
    std::vector<double> out(n_samples);
    for (auto& v : out) v = rng.uniform();
    return out;
}

Aggregation aggregation_from_name(const std::string& name) {
    if (name == "sum") return Aggregation::Sum;
    if (name == "mean") return Aggregation::Mean;
    if (name == "max") return Aggregation::Max;
    if (name == "weighted_mean") return Aggregation::WeightedMean;
    throw ConfigError("unknown aggregation: '" + name + "'");
}

std::string aggregation_name(Aggregation a) {
    switch (a) {
        case Aggregation::Sum: return "sum";
        case Aggregation::Mean: return "mean";
        case Aggregation::Max: return "max";
        case Aggregation::WeightedMean: return "weighted_mean";
    }
    return "?";
}

double aggregate(const ScoreImage& img, const AggregationSpec& spec,
                 const std::vector<uint16_t>* class_map) {
    size_t n_valid = 0;
    for (uint8_t m : img.valid) n_valid += m;
    if (n_valid == 0) return 0.0;
    switch (spec.method) {
        case Aggregation::Sum:
            // invalid pixels hold 0 and cannot shift the sum
            return kern::reduce_sum(img.scores.data(), img.scores.size());
        case Aggregation::Mean:
            return kern::reduce_sum(img.scores.data(), img.scores.size()) /
                   static_cast<double>(n_valid);
        case Aggregation::Max: {
            double best = 0.0;
            bool first = true;
            for (size_t i = 0; i < img.scores.size(); ++i) {
                if (!img.valid[i]) continue;
                if (first || img.scores[i] > best) best = img.scores[i];
                first = false;
            }
            return best;
        }
        case Aggregation::WeightedMean: {
            if (!class_map) throw ConfigError("weighted_mean aggregation needs a class map");
            if (spec.class_weights.empty())
                throw ConfigError("weighted_mean aggregation needs class weights");
            double num = 0.0, den = 0.0;
            for (size_t i = 0; i < img.scores.size(); ++i) {
                if (!img.valid[i]) continue;
                uint16_t cls = (*class_map)[i];
                if (cls >= spec.class_weights.size())
                    throw ConfigError("class map entry exceeds weight vector");
                double w = spec.class_weights[cls];
                num += w * img.scores[i];
                den += w;
            }
            return den > 0.0 ? num / den : 0.0;
        }
    }
    return 0.0;
}

std::vector<int64_t> rank_pool(const std::vector<std::pair<int64_t, double>>& scores) {
    for (const auto& [id, s] : scores)
        if (std::isnan(s))
            throw NumericError("NaN score for sample " + std::to_string(id));
    std::vector<int64_t> order(scores.size());
    for (size_t i = 0; i < scores.size(); ++i) order[i] = static_cast<int64_t>(i);
    std::sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
        const auto& [ia, sa] = scores[static_cast<size_t>(a)];
        const auto& [ib, sb] = scores[static_cast<size_t>(b)];
        if (sa != sb) return sa > sb;
        return ia < ib;
    });
    std::vector<int64_t> ids(scores.size());
    for (size_t i = 0; i < scores.size(); ++i) ids[i] = scores[static_cast<size_t>(order[i])].first;
    return ids;
}

} // namespace ald
