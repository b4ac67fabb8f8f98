#include "ald/projection.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "ald/errors.hpp"

namespace ald {

namespace {
constexpr double kPi = std::numbers::pi;
}

int channel_count(ChannelSet cs) { return cs == ChannelSet::XYZRI ? 5 : 4; }

std::string channel_set_name(ChannelSet cs) { return cs == ChannelSet::XYZRI ? "xyzri" : "xyri"; }

ChannelSet channel_set_from_name(const std::string& name) {
    if (name == "xyri") return ChannelSet::XYRI;
    if (name == "xyzri") return ChannelSet::XYZRI;
    throw ConfigError("unknown channel set: '" + name + "' (expected xyri or xyzri)");
}

RangeImage::RangeImage(int w_, int h_, ChannelSet cs)
    : w(w_), h(h_), k(channel_count(cs)), channel_set(cs) {
    channels.assign(static_cast<size_t>(k) * pixels(), kInvalidValue);
    labels.assign(pixels(), kIgnoreLabel);
    instances.assign(pixels(), 0);
    valid.assign(pixels(), 0);
}

void RangeImage::invalidate_pixel(int v, int u) {
    size_t i = idx(v, u);
    for (int c = 0; c < k; ++c) channels[static_cast<size_t>(c) * pixels() + i] = kInvalidValue;
    labels[i] = kIgnoreLabel;
    instances[i] = 0;
    valid[i] = 0;
}

size_t RangeImage::valid_count() const {
    size_t n = 0;
    for (uint8_t m : valid) n += m;
    return n;
}

std::optional<PixelUV> pixel_coords(double x, double y, double z, const SensorConfig& cfg) {
    double r = std::sqrt(x * x + y * y + z * z);
    if (r <= 0.0)
        throw NumericError("pixel_coords: zero-range point");
    double elev = std::asin(z / r);
    if (elev < -cfg.fov_down || elev > cfg.fov_up) return std::nullopt;
    double uf = 0.5 * (1.0 - std::atan2(y, x) / kPi) * cfg.width;
    double vf = (1.0 - (elev + cfg.fov_down) / cfg.fov()) * cfg.height;
    int u = static_cast<int>(std::floor(uf));
    int v = static_cast<int>(std::floor(vf));
    if (u < 0 || u >= cfg.width || v < 0 || v >= cfg.height) return std::nullopt;
    return PixelUV{u, v};
}

RangeImage project(const LabeledPointCloud& cloud, const SensorConfig& cfg, ChannelSet cs,
                   size_t* zero_range_skipped) {
    if (cfg.width < 1 || cfg.height < 1 || cfg.fov() <= 0.0)
        throw ConfigError("invalid sensor config");
    RangeImage img(cfg.width, cfg.height, cs);
    std::vector<double> best_r(img.pixels(), 0.0);
    size_t skipped = 0;
    const bool labeled = cloud.has_labels();
    for (size_t i = 0; i < cloud.size(); ++i) {
        double x = cloud.x[i], y = cloud.y[i], z = cloud.z[i];
        double r = std::sqrt(x * x + y * y + z * z);
        if (r <= 0.0) {
            ++skipped;
            continue;
        }
        auto uv = pixel_coords(x, y, z, cfg);
        if (!uv) continue;
        size_t px = img.idx(uv->v, uv->u);
        if (img.valid[px] && best_r[px] <= r) continue; // nearest wins, first wins ties
        best_r[px] = r;
        img.valid[px] = 1;
        img.plane(img.chan_x())[px] = x;
        img.plane(img.chan_y())[px] = y;
        if (img.chan_z() >= 0) img.plane(img.chan_z())[px] = z;
        img.plane(img.chan_r())[px] = r;
        img.plane(img.chan_remission())[px] = cloud.remission[i];
        if (labeled) {
            img.labels[px] = cloud.sem_label[i];
            img.instances[px] = cloud.inst_label[i];
        }
    }
    if (zero_range_skipped) *zero_range_skipped = skipped;
    return img;
}

LabeledPointCloud unproject(const RangeImage& img, const SensorConfig& cfg) {
    LabeledPointCloud cloud;
    const int zc = img.chan_z();
    for (int v = 0; v < img.h; ++v) {
        double row_elev = cfg.fov_up - (v + 0.5) * cfg.fov() / cfg.height;
        for (int u = 0; u < img.w; ++u) {
            size_t px = img.idx(v, u);
            if (!img.valid[px]) continue;
            double x = img.plane(img.chan_x())[px];
            double y = img.plane(img.chan_y())[px];
            double r = img.plane(img.chan_r())[px];
            double z;
            if (zc >= 0) {
                z = img.plane(zc)[px];
            } else {
                double planar = x * x + y * y;
                double zz = r * r - planar;
                if (zz < 0.0 && planar - r * r > 1e-6 * r * r)
                    throw DataFormatError("unproject: r^2 < x^2+y^2 at pixel (" +
                                          std::to_string(u) + ", " + std::to_string(v) + ")");
                z = std::sqrt(std::max(0.0, zz));
                if (row_elev < 0.0) z = -z;
            }
            cloud.x.push_back(static_cast<float>(x));
            cloud.y.push_back(static_cast<float>(y));
            cloud.z.push_back(static_cast<float>(z));
            cloud.remission.push_back(static_cast<float>(img.plane(img.chan_remission())[px]));
            cloud.sem_label.push_back(img.labels[px]);
            cloud.inst_label.push_back(img.instances[px]);
        }
    }
    return cloud;
}

void dump_range_image(const RangeImage& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataFormatError("cannot write range image dump: " + path.string());
    auto put_u32 = [&](uint32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                              static_cast<unsigned char>((v >> 8) & 0xFF),
                              static_cast<unsigned char>((v >> 16) & 0xFF),
                              static_cast<unsigned char>((v >> 24) & 0xFF)};
        out.write(reinterpret_cast<const char*>(b), 4);
    };
    put_u32(static_cast<uint32_t>(img.w));
    put_u32(static_cast<uint32_t>(img.h));
    put_u32(static_cast<uint32_t>(img.k));
    for (int c = 0; c < img.k; ++c) {
        const double* p = img.plane(c);
        for (size_t i = 0; i < img.pixels(); ++i) {
            float f = static_cast<float>(p[i]);
            uint32_t u;
            std::memcpy(&u, &f, 4);
            put_u32(u);
        }
    }
    if (!out) throw DataFormatError("short write: " + path.string());
}

} // namespace ald
