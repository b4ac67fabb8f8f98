#include "ald/augment.hpp"

#include <algorithm>
#include <map>

#include "ald/errors.hpp"
#include "ald/rng.hpp"

namespace ald {

namespace {

void check_range(const IntRange& r, const char* what) {
    if (r.lo > r.hi || r.lo < 0)
        throw ConfigError(std::string("invalid ") + what + " range [" + std::to_string(r.lo) +
                          ", " + std::to_string(r.hi) + "]");
}

} // namespace

RangeImage random_pixel_dropout(const RangeImage& img, double p, uint64_t seed) {
    if (p < 0.0 || p > 1.0) throw ConfigError("pixel dropout p must be in [0, 1]");
    RangeImage out = img;
    Rng rng(seed);
    for (int v = 0; v < out.h; ++v)
        for (int u = 0; u < out.w; ++u) {
            if (!out.valid[out.idx(v, u)]) continue;
            if (rng.bernoulli(p)) out.invalidate_pixel(v, u);
        }
    return out;
}

RangeImage coarse_dropout(const RangeImage& img, IntRange n_holes, IntRange hole_w,
                          IntRange hole_h, uint64_t seed) {
    check_range(n_holes, "hole count");
    check_range(hole_w, "hole width");
    check_range(hole_h, "hole height");
    if (hole_w.hi > img.w || hole_h.hi > img.h)
        throw ConfigError("hole dimensions exceed image dimensions");
    RangeImage out = img;
    Rng rng(seed);
    int n = static_cast<int>(rng.uniform_range(n_holes.lo, n_holes.hi));
    for (int i = 0; i < n; ++i) {
        int hw = static_cast<int>(rng.uniform_range(hole_w.lo, hole_w.hi));
        int hh = static_cast<int>(rng.uniform_range(hole_h.lo, hole_h.hi));
        int x0 = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(img.w)));
        int y0 = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(img.h)));
        int x1 = std::min(img.w, x0 + hw);
        int y1 = std::min(img.h, y0 + hh);
        for (int v = y0; v < y1; ++v)
            for (int u = x0; u < x1; ++u) out.invalidate_pixel(v, u);
    }
    return out;
}

RangeImage gaussian_noise_channel(const RangeImage& img, NoiseChannel channel, double sigma,
                                  uint64_t seed) {
    if (sigma < 0.0) throw ConfigError("noise sigma must be >= 0");
    RangeImage out = img;
    int c = channel == NoiseChannel::Range ? out.chan_r() : out.chan_remission();
    double* plane = out.plane(c);
    Rng rng(seed);
    for (size_t i = 0; i < out.pixels(); ++i) {
        if (!out.valid[i]) continue;
        double v = plane[i] + rng.normal(0.0, sigma);
        if (channel == NoiseChannel::Remission)
            v = std::clamp(v, 0.0, 1.0);
        else
            v = std::max(v, 1e-6);
        plane[i] = v;
    }
    return out;
}

RangeImage cyclic_shift(const RangeImage& img, int64_t k) {
    RangeImage out = img;
    if (img.w == 0) return out;
    int kk = static_cast<int>(((k % img.w) + img.w) % img.w);
    if (kk == 0) return out;
    auto roll = [&](auto* dst, const auto* src) {
        for (int v = 0; v < img.h; ++v)
            for (int u = 0; u < img.w; ++u)
                dst[img.idx(v, (u + kk) % img.w)] = src[img.idx(v, u)];
    };
    for (int c = 0; c < img.k; ++c) roll(out.plane(c), img.plane(c));
    roll(out.labels.data(), img.labels.data());
    roll(out.instances.data(), img.instances.data());
    roll(out.valid.data(), img.valid.data());
    return out;
}

CutPasteResult instance_cut_paste(const RangeImage& target, const RangeImage& donor,
                                  const std::vector<uint16_t>& class_whitelist,
                                  int max_instances, uint64_t seed) {
    CutPasteResult result{target, 0};
    if (donor.w != target.w || donor.h != target.h)
        throw ConfigError("cut-paste donor and target dimensions differ");

    // donor instances, keyed by instance id; class taken from their pixels
    std::map<uint16_t, std::vector<size_t>> members;
    for (size_t i = 0; i < donor.pixels(); ++i) {
        if (!donor.valid[i] || donor.instances[i] == 0) continue;
        uint16_t cls = donor.labels[i];
        if (!class_whitelist.empty() &&
            std::find(class_whitelist.begin(), class_whitelist.end(), cls) ==
                class_whitelist.end())
            continue;
        members[donor.instances[i]].push_back(i);
    }
    if (members.empty() || max_instances <= 0) return result;

    std::vector<uint16_t> ids;
    ids.reserve(members.size());
    for (const auto& [id, _] : members) ids.push_back(id);
    Rng rng(seed);
    auto pick = rng.sample_without_replacement(static_cast<int64_t>(ids.size()),
                                               std::min<int64_t>(max_instances, ids.size()));

    uint16_t next_instance = 0;
    for (uint16_t inst : target.instances) next_instance = std::max(next_instance, inst);

    RangeImage& out = result.image;
    const int rdon = donor.chan_r();
    const int rtgt = out.chan_r();
    for (int64_t sel : pick) {
        uint16_t donor_id = ids[static_cast<size_t>(sel)];
        ++next_instance;
        bool any = false;
        for (size_t px : members[donor_id]) {
            bool occluded = out.valid[px] && out.plane(rtgt)[px] <= donor.plane(rdon)[px];
            if (occluded) continue;
            for (int c = 0; c < out.k; ++c)
                out.plane(c)[px] = donor.plane(c)[px];
            out.labels[px] = donor.labels[px];
            out.instances[px] = next_instance;
            out.valid[px] = 1;
            any = true;
        }
        if (any) ++result.instances_pasted;
    }
    return result;
}

std::string transform_name(TransformKind kind) {
    switch (kind) {
        case TransformKind::PixelDropout: return "pixel_dropout";
        case TransformKind::CoarseDropout: return "coarse_dropout";
        case TransformKind::NoiseRange: return "noise_range";
        case TransformKind::NoiseRemission: return "noise_remission";
        case TransformKind::CyclicShift: return "cyclic_shift";
        case TransformKind::InstanceCutPaste: return "instance_cut_paste";
    }
    return "?";
}

RangeImage apply_policy(const AugPolicy& policy, const RangeImage& img, uint64_t sample_hash,
                        uint64_t step, const RangeImage* donor) {
    Rng rng(mix_seed({policy.seed, sample_hash, step}));
    RangeImage out = img;
    for (const auto& s : policy.steps) {
        bool fire = rng.uniform() < s.probability;
        uint64_t sub_seed = rng.next_u64();
        if (!fire) continue;
        switch (s.kind) {
            case TransformKind::PixelDropout:
                out = random_pixel_dropout(out, s.pixel_p, sub_seed);
                break;
            case TransformKind::CoarseDropout:
                out = coarse_dropout(out, s.holes, s.hole_w, s.hole_h, sub_seed);
                break;
            case TransformKind::NoiseRange:
                out = gaussian_noise_channel(out, NoiseChannel::Range, s.sigma, sub_seed);
                break;
            case TransformKind::NoiseRemission:
                out = gaussian_noise_channel(out, NoiseChannel::Remission, s.sigma, sub_seed);
                break;
            case TransformKind::CyclicShift:
                out = cyclic_shift(out, static_cast<int64_t>(Rng(sub_seed).uniform_int(
                          static_cast<uint64_t>(std::max(1, img.w)))));
                break;
            case TransformKind::InstanceCutPaste:
                if (donor)
                    out = instance_cut_paste(out, *donor, s.classes, s.max_instances, sub_seed)
                              .image;
                break;
        }
    }
    return out;
}

} // namespace ald
