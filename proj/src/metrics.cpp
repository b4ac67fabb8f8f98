#include "ald/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "ald/errors.hpp"

namespace ald {

int64_t ConfusionMatrix::total() const {
    int64_t t = 0;
    for (int64_t c : counts) t += c;
    return t;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
    if (other.classes != classes) throw ConfigError("confusion matrix class count mismatch");
    for (size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
}

ConfusionMatrix confusion_matrix(std::span<const uint16_t> pred, std::span<const uint16_t> gt,
                                 std::span<const uint8_t> mask, int classes) {
    if (pred.size() != gt.size() || pred.size() != mask.size())
        throw ConfigError("confusion_matrix: shape mismatch");
    ConfusionMatrix cm(classes);
    for (size_t i = 0; i < pred.size(); ++i) {
        if (!mask[i]) continue;
        int g = gt[i], p = pred[i];
        if (g >= classes || p >= classes)
            throw DataFormatError("confusion_matrix: label " + std::to_string(std::max(g, p)) +
                                  " >= class count " + std::to_string(classes));
        ++cm.at(g, p);
    }
    return cm;
}

IouResult iou(const ConfusionMatrix& cm) {
    IouResult r;
    int c = cm.classes;
    r.class_iou.assign(static_cast<size_t>(c), std::numeric_limits<double>::quiet_NaN());
    r.present.assign(static_cast<size_t>(c), 0);
    double sum = 0.0;
    int present = 0;
    for (int k = 0; k < c; ++k) {
        int64_t tp = cm.at(k, k);
        int64_t fn = 0, fp = 0;
        for (int j = 0; j < c; ++j) {
            if (j == k) continue;
            fn += cm.at(k, j);
            fp += cm.at(j, k);
        }
        int64_t denom = tp + fp + fn;
        if (denom == 0) continue; // absent class, excluded from the mean
        r.class_iou[static_cast<size_t>(k)] =
            static_cast<double>(tp) / static_cast<double>(denom);
        r.present[static_cast<size_t>(k)] = 1;
        sum += r.class_iou[static_cast<size_t>(k)];
        ++present;
    }
    r.any_present = present > 0;
    r.miou = present > 0 ? sum / present : std::numeric_limits<double>::quiet_NaN();
    return r;
}

namespace {

// Monotone upper envelope as (n, e) breakpoints.
std::vector<std::pair<double, double>> envelope(const LearningCurve& curve) {
    if (curve.points.empty()) throw ConfigError("empty learning curve");
    std::vector<std::pair<double, double>> env;
    double best = -1.0;
    for (const auto& p : curve.points) {
        best = std::max(best, p.miou);
        env.emplace_back(static_cast<double>(p.n_labeled), best);
    }
    return env;
}

} // namespace

double n_at_target(const LearningCurve& curve, double target_miou) {
    auto env = envelope(curve);
    if (env.front().second >= target_miou) return env.front().first;
    for (size_t i = 1; i < env.size(); ++i) {
        if (env[i].second >= target_miou) {
            // envelope is nondecreasing and e0 < target <= e1 here
            double n0 = env[i - 1].first, e0 = env[i - 1].second;
            double n1 = env[i].first, e1 = env[i].second;
            return n0 + (target_miou - e0) * (n1 - n0) / (e1 - e0);
        }
    }
    std::ostringstream os;
    os << "curve '" << curve.method << "' never reaches mIoU " << target_miou << " (max "
       << env.back().second << ")";
    throw NumericError(os.str());
}

double labeling_efficiency(const LearningCurve& other, const LearningCurve& baseline,
                           double target_miou) {
    return n_at_target(other, target_miou) / n_at_target(baseline, target_miou);
}

std::vector<std::vector<double>> delta_ciou(const LearningCurve& curve, double miou_fs) {
    std::vector<std::vector<double>> out;
    out.reserve(curve.points.size());
    for (const auto& p : curve.points) {
        std::vector<double> row = p.class_iou;
        for (double& v : row) v -= miou_fs;
        out.push_back(std::move(row));
    }
    return out;
}

std::string format_curve_row(const LearningCurve& curve, size_t step) {
    const CurvePoint& p = curve.points[step];
    char buf[64];
    std::string row = curve.method + "," + std::to_string(step) + "," +
                      std::to_string(p.n_labeled);
    std::snprintf(buf, sizeof(buf), ",%.6f,%.6f", p.pct_labeled, p.miou);
    row += buf;
    for (double v : p.class_iou) {
        std::snprintf(buf, sizeof(buf), ",%.6f", v);
        row += buf;
    }
    return row;
}

void export_curves(std::span<const LearningCurve> curves, const std::filesystem::path& file) {
    if (curves.empty()) throw ConfigError("export_curves: no curves");
    size_t classes = 0;
    for (const auto& c : curves) {
        if (c.points.empty()) throw ConfigError("export_curves: empty curve " + c.method);
        classes = std::max(classes, c.points.front().class_iou.size());
    }
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw DataFormatError("cannot write " + file.string());
    out << "method,step,n_labeled,pct_labeled,miou";
    for (size_t i = 0; i < classes; ++i) out << ",ciou_" << i;
    out << '\n';
    for (const auto& c : curves)
        for (size_t s = 0; s < c.points.size(); ++s) out << format_curve_row(c, s) << '\n';
    if (!out) throw DataFormatError("short write: " + file.string());
}

std::vector<LearningCurve> parse_curves_csv(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DataFormatError("cannot open curves file: " + file.string());
    std::string line;
    if (!std::getline(in, line)) throw DataFormatError("empty curves file: " + file.string());
    std::map<std::string, LearningCurve> by_method;
    std::vector<std::string> order;
    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() < 5)
            throw DataFormatError(file.string() + " line " + std::to_string(lineno) +
                                  ": expected at least 5 columns");
        CurvePoint p;
        try {
            p.n_labeled = std::stoll(fields[2]);
            p.pct_labeled = std::stod(fields[3]);
            p.miou = std::stod(fields[4]);
            for (size_t i = 5; i < fields.size(); ++i) p.class_iou.push_back(std::stod(fields[i]));
        } catch (const std::exception&) {
            throw DataFormatError(file.string() + " line " + std::to_string(lineno) +
                                  ": bad numeric field");
        }
        auto [it, fresh] = by_method.try_emplace(fields[0]);
        if (fresh) {
            it->second.method = fields[0];
            order.push_back(fields[0]);
        }
        it->second.points.push_back(std::move(p));
    }
    std::vector<LearningCurve> out;
    out.reserve(order.size());
    for (const auto& m : order) out.push_back(std::move(by_method[m]));
    return out;
}

} // namespace ald
