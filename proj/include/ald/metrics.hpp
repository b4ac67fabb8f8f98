#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ald {

// Rows = ground truth, columns = prediction. Ignore-class pixels never enter.
struct ConfusionMatrix {
    int classes = 0;
    std::vector<int64_t> counts; // [classes][classes]

    ConfusionMatrix() = default;
    explicit ConfusionMatrix(int c)
        : classes(c), counts(static_cast<size_t>(c) * c, 0) {}

    int64_t& at(int gt, int pred) { return counts[static_cast<size_t>(gt) * classes + pred]; }
    [[nodiscard]] int64_t at(int gt, int pred) const {
        return counts[static_cast<size_t>(gt) * classes + pred];
    }
    [[nodiscard]] int64_t total() const;
    void merge(const ConfusionMatrix& other);
};

ConfusionMatrix confusion_matrix(std::span<const uint16_t> pred, std::span<const uint16_t> gt,
                                 std::span<const uint8_t> mask, int classes);

struct IouResult {
    std::vector<double> class_iou; // NaN for absent classes
    std::vector<uint8_t> present;
    double miou = 0.0; // mean over present classes; NaN when none present
    bool any_present = false;
};

IouResult iou(const ConfusionMatrix& cm);

struct CurvePoint {
    int64_t n_labeled = 0;
    double pct_labeled = 0.0;
    double miou = 0.0;
    std::vector<double> class_iou;
};

struct LearningCurve {
    std::string method;
    std::vector<CurvePoint> points;
};

// Smallest n reaching mIoU >= target on the curve's monotone upper envelope,
// linearly interpolated between bracketing points. Throws NumericError when
// the curve never reaches the target.
double n_at_target(const LearningCurve& curve, double target_miou);

// LE = n_other(a) / n_baseline(a), exactly as written.
double labeling_efficiency(const LearningCurve& other, const LearningCurve& baseline,
                           double target_miou);

// Per-step per-class cIoU[i] - mIoU_FS.
std::vector<std::vector<double>> delta_ciou(const LearningCurve& curve, double miou_fs);

// curves.csv: method,step,n_labeled,pct_labeled,miou,ciou_0..ciou_{C-1};
// fixed 6-decimal formatting, absent classes print as nan.
void export_curves(std::span<const LearningCurve> curves, const std::filesystem::path& file);
std::vector<LearningCurve> parse_curves_csv(const std::filesystem::path& file);

std::string format_curve_row(const LearningCurve& curve, size_t step);

} // namespace ald
