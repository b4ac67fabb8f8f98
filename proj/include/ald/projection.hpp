#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ald/scan_io.hpp"

namespace ald {

struct SensorConfig {
    int width = 64;
    int height = 16;
    double fov_up = 0.2617993877991494;   // radians above horizon
    double fov_down = 0.2617993877991494; // radians below horizon, stored positive

    [[nodiscard]] double fov() const { return fov_up + fov_down; }
};

// Which per-pixel channels a projection carries.
enum class ChannelSet { XYRI, XYZRI };
int channel_count(ChannelSet cs);
std::string channel_set_name(ChannelSet cs);
ChannelSet channel_set_from_name(const std::string& name);

struct RangeImage {
    static constexpr uint16_t kIgnoreLabel = 0xFFFF;
    static constexpr double kInvalidValue = -1.0;

    int w = 0, h = 0, k = 0;
    ChannelSet channel_set = ChannelSet::XYRI;
    std::vector<double> channels;    // [k][h][w]
    std::vector<uint16_t> labels;    // [h][w], kIgnoreLabel on invalid pixels
    std::vector<uint16_t> instances; // [h][w], 0 = none
    std::vector<uint8_t> valid;      // [h][w]

    RangeImage() = default;
    RangeImage(int w_, int h_, ChannelSet cs);

    [[nodiscard]] size_t pixels() const { return static_cast<size_t>(w) * h; }
    [[nodiscard]] size_t idx(int v, int u) const { return static_cast<size_t>(v) * w + u; }
    double& at(int c, int v, int u) { return channels[static_cast<size_t>(c) * pixels() + idx(v, u)]; }
    [[nodiscard]] double at(int c, int v, int u) const {
        return channels[static_cast<size_t>(c) * pixels() + idx(v, u)];
    }
    double* plane(int c) { return channels.data() + static_cast<size_t>(c) * pixels(); }
    [[nodiscard]] const double* plane(int c) const {
        return channels.data() + static_cast<size_t>(c) * pixels();
    }

    // channel indices within the set; z is -1 when absent
    [[nodiscard]] int chan_x() const { return 0; }
    [[nodiscard]] int chan_y() const { return 1; }
    [[nodiscard]] int chan_z() const { return channel_set == ChannelSet::XYZRI ? 2 : -1; }
    [[nodiscard]] int chan_r() const { return channel_set == ChannelSet::XYZRI ? 3 : 2; }
    [[nodiscard]] int chan_remission() const { return k - 1; }

    void invalidate_pixel(int v, int u);
    [[nodiscard]] size_t valid_count() const;
};

struct PixelUV {
    int u = 0;
    int v = 0;
};

// Spherical projection of one point:
//   u = floor(0.5 * (1 - atan2(y, x) / pi) * w)
//   v = floor((1 - (asin(z / r) + fov_down) / fov) * h)
// Returns nullopt when the elevation leaves [-fov_down, fov_up] or the floored
// pixel leaves the image. Throws NumericError when r == 0.
std::optional<PixelUV> pixel_coords(double x, double y, double z, const SensorConfig& cfg);

// Nearest-return projection: pixel collisions keep the point with smallest r
// (first point wins ties). Zero-range points are skipped and counted.
RangeImage project(const LabeledPointCloud& cloud, const SensorConfig& cfg,
                   ChannelSet cs = ChannelSet::XYRI, size_t* zero_range_skipped = nullptr);

// One point per valid pixel. Without a z channel, z = sign * sqrt(r^2-x^2-y^2)
// with the sign of the pixel row's center elevation; a pixel with
// x^2+y^2 > r^2 beyond 1e-6 relative is a consistency error.
LabeledPointCloud unproject(const RangeImage& img, const SensorConfig& cfg);

// Debug dump: u32le w, h, k then k channel planes as row-major float32.
void dump_range_image(const RangeImage& img, const std::filesystem::path& path);

} // namespace ald
