#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ald/projection.hpp"

namespace ald {

struct IntRange {
    int lo = 0;
    int hi = 0; // inclusive
};

enum class NoiseChannel { Range, Remission };

// Each valid pixel is independently invalidated with probability p.
RangeImage random_pixel_dropout(const RangeImage& img, double p, uint64_t seed);

// Invalidates n ~ U(n_holes) axis-aligned rectangles with uniform position
// and size; rectangles clip at the image border.
RangeImage coarse_dropout(const RangeImage& img, IntRange n_holes, IntRange hole_w,
                          IntRange hole_h, uint64_t seed);

// Adds iid N(0, sigma^2) to the named channel of valid pixels. Remission is
// clamped to [0,1], range to (0, inf). Mask and labels are untouched.
RangeImage gaussian_noise_channel(const RangeImage& img, NoiseChannel channel, double sigma,
                                  uint64_t seed);

// Rolls all per-pixel planes horizontally by k columns (any integer k).
RangeImage cyclic_shift(const RangeImage& img, int64_t k);

struct CutPasteResult {
    RangeImage image;
    int instances_pasted = 0;
};

// Pastes up to max_instances donor instances (instance id > 0, class in the
// whitelist; empty whitelist = any class) onto the target. A donor pixel wins
// only where it is nearer than the target pixel or the target is invalid.
CutPasteResult instance_cut_paste(const RangeImage& target, const RangeImage& donor,
                                  const std::vector<uint16_t>& class_whitelist,
                                  int max_instances, uint64_t seed);

enum class TransformKind {
    PixelDropout,
    CoarseDropout,
    NoiseRange,
    NoiseRemission,
    CyclicShift,
    InstanceCutPaste,
};
std::string transform_name(TransformKind kind);

struct AugStep {
    TransformKind kind;
    double probability = 0.0;
    // parameters; which ones apply depends on kind
    double pixel_p = 0.1;
    IntRange holes{1, 5};
    IntRange hole_w{1, 3};
    IntRange hole_h{1, 1};
    double sigma = 0.1;
    int max_instances = 3;
    std::vector<uint16_t> classes;
};

struct AugPolicy {
    uint64_t seed = 0;
    std::vector<AugStep> steps;

    [[nodiscard]] bool empty() const { return steps.empty(); }
};

// Applies the policy steps in order; each fires with its probability. The RNG
// stream is seeded from (policy.seed, sample_hash, step) so byte-identical
// samples receive identical augmentations. The donor feeds InstanceCutPaste;
// without one that step is skipped.
RangeImage apply_policy(const AugPolicy& policy, const RangeImage& img, uint64_t sample_hash,
                        uint64_t step, const RangeImage* donor = nullptr);

} // namespace ald
