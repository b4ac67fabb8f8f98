#include "ald/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>

#include "ald/errors.hpp"
#include "ald/rng.hpp"

namespace fs = std::filesystem;

namespace ald {

namespace {

constexpr double kPi = std::numbers::pi;

// Stream tags keep derived seeds from colliding.
constexpr uint64_t kTagScene = 0x5343454eull;  // "SCEN"
constexpr uint64_t kTagJitter = 0x4a495454ull; // "JITT"

struct Vec3 {
    double x, y, z;
};

struct SceneObject {
    enum Kind { Box, Cylinder, Ellipsoid } kind;
    uint16_t class_id;
    uint16_t instance_id;
    double remission;
    // Box: center + half extents. Cylinder: center xy, radius in hx, z span
    // [cz - hz, cz + hz]. Ellipsoid: center + semi-axes.
    Vec3 center;
    Vec3 half;
};

std::optional<double> ray_box(const Vec3& d, const SceneObject& o) {
    double t0 = 0.0, t1 = 1e30;
    const double dc[3] = {d.x, d.y, d.z};
    const double lo[3] = {o.center.x - o.half.x, o.center.y - o.half.y, o.center.z - o.half.z};
    const double hi[3] = {o.center.x + o.half.x, o.center.y + o.half.y, o.center.z + o.half.z};
    for (int a = 0; a < 3; ++a) {
        if (std::abs(dc[a]) < 1e-12) {
            if (0.0 < lo[a] || 0.0 > hi[a]) return std::nullopt; // ray origin is (0,0,0)
            continue;
        }
        double ta = lo[a] / dc[a];
        double tb = hi[a] / dc[a];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) return std::nullopt;
    }
    if (t0 <= 1e-9) return std::nullopt; // inside or behind
    return t0;
}

std::optional<double> ray_cylinder(const Vec3& d, const SceneObject& o) {
    // infinite cylinder on (cx, cy), clipped by z span
    double a = d.x * d.x + d.y * d.y;
    if (a < 1e-12) return std::nullopt;
    double bx = -o.center.x, by = -o.center.y;
    double b = 2.0 * (d.x * bx + d.y * by);
    double c = bx * bx + by * by - o.half.x * o.half.x;
    double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return std::nullopt;
    double sq = std::sqrt(disc);
    double t = (-b - sq) / (2.0 * a);
    if (t <= 1e-9) t = (-b + sq) / (2.0 * a);
    if (t <= 1e-9) return std::nullopt;
    double zhit = t * d.z;
    if (zhit < o.center.z - o.half.z || zhit > o.center.z + o.half.z) return std::nullopt;
    return t;
}

std::optional<double> ray_ellipsoid(const Vec3& d, const SceneObject& o) {
    double dx = d.x / o.half.x, dy = d.y / o.half.y, dz = d.z / o.half.z;
    double ox = -o.center.x / o.half.x, oy = -o.center.y / o.half.y, oz = -o.center.z / o.half.z;
    double a = dx * dx + dy * dy + dz * dz;
    double b = 2.0 * (dx * ox + dy * oy + dz * oz);
    double c = ox * ox + oy * oy + oz * oz - 1.0;
    double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return std::nullopt;
    double sq = std::sqrt(disc);
    double t = (-b - sq) / (2.0 * a);
    if (t <= 1e-9) t = (-b + sq) / (2.0 * a);
    if (t <= 1e-9) return std::nullopt;
    return t;
}

std::optional<double> ray_object(const Vec3& d, const SceneObject& o) {
    switch (o.kind) {
        case SceneObject::Box: return ray_box(d, o);
        case SceneObject::Cylinder: return ray_cylinder(d, o);
        case SceneObject::Ellipsoid: return ray_ellipsoid(d, o);
    }
    return std::nullopt;
}

constexpr double kClassRemission[kSynthClassCount] = {0.15, 0.45, 0.65, 0.8, 0.5, 0.3};

void place_object(Rng& rng, std::vector<SceneObject>& objects, double extent,
                  double sensor_height, uint16_t next_instance) {
    double theta = rng.uniform(-kPi, kPi);
    double ground = -sensor_height;
    double maxd = extent * 0.5;
    SceneObject o{};
    o.instance_id = next_instance;
    double roll = rng.uniform();
    if (roll < 0.15) { // building
        o.kind = SceneObject::Box;
        o.class_id = kBuilding;
        double dist = rng.uniform(8.0, maxd);
        o.center = {dist * std::cos(theta), dist * std::sin(theta), 0.0};
        o.half = {rng.uniform(2.0, 5.0), rng.uniform(2.0, 5.0), rng.uniform(1.5, 4.0)};
        o.center.z = ground + o.half.z;
    } else if (roll < 0.45) { // vehicle
        o.kind = SceneObject::Box;
        o.class_id = kVehicle;
        double dist = rng.uniform(4.0, maxd * 0.8);
        o.center = {dist * std::cos(theta), dist * std::sin(theta), 0.0};
        o.half = {rng.uniform(1.7, 2.5), rng.uniform(0.8, 1.0), rng.uniform(0.7, 0.9)};
        o.center.z = ground + o.half.z;
    } else if (roll < 0.65) { // pole
        o.kind = SceneObject::Cylinder;
        o.class_id = kPole;
        double dist = rng.uniform(3.0, maxd * 0.7);
        double h = rng.uniform(1.5, 3.0);
        o.center = {dist * std::cos(theta), dist * std::sin(theta), ground + h};
        o.half = {rng.uniform(0.1, 0.25), 0.0, h};
    } else if (roll < 0.8) { // person
        o.kind = SceneObject::Ellipsoid;
        o.class_id = kPerson;
        double dist = rng.uniform(2.5, maxd * 0.6);
        double c = rng.uniform(0.8, 0.95);
        o.center = {dist * std::cos(theta), dist * std::sin(theta), ground + c};
        o.half = {rng.uniform(0.25, 0.45), rng.uniform(0.25, 0.45), c};
    } else { // vegetation blob
        o.kind = SceneObject::Ellipsoid;
        o.class_id = kVegetation;
        double dist = rng.uniform(4.0, maxd * 0.9);
        double r = rng.uniform(0.8, 2.2);
        o.center = {dist * std::cos(theta), dist * std::sin(theta),
                    ground + r * rng.uniform(0.8, 1.6)};
        o.half = {r, r, r * rng.uniform(0.7, 1.2)};
    }
    objects.push_back(o);
}

} // namespace

const std::vector<std::string>& synth_class_names() {
    static const std::vector<std::string> names = {
        "ground", "building", "vehicle", "pole", "person", "vegetation",
    };
    return names;
}

LabeledPointCloud gen_synthetic_scene(const SyntheticSpec& spec, uint64_t scene_seed,
                                      double object_boost) {
    Rng rng(scene_seed);
    int count = static_cast<int>(rng.uniform_range(spec.min_objects, spec.max_objects));
    count = std::max(1, static_cast<int>(std::lround(count * object_boost)));
    std::vector<SceneObject> objects;
    objects.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i)
        place_object(rng, objects, spec.extent, spec.sensor_height,
                     static_cast<uint16_t>(i + 1));

    double f_up = spec.fov_up_deg * kPi / 180.0;
    double f_down = spec.fov_down_deg * kPi / 180.0;
    double fov = f_up + f_down;
    double max_range = spec.extent * 0.5;

    LabeledPointCloud cloud;
    for (int v = 0; v < spec.grid_height; ++v) {
        double elev = f_up - (v + 0.5) * fov / spec.grid_height;
        for (int u = 0; u < spec.grid_width; ++u) {
            double azim = kPi * (1.0 - 2.0 * (u + 0.5) / spec.grid_width);
            Vec3 d{std::cos(elev) * std::cos(azim), std::cos(elev) * std::sin(azim),
                   std::sin(elev)};
            double best_t = 1e30;
            uint16_t cls = 0, inst = 0;
            bool hit = false;
            for (const auto& o : objects) {
                if (auto t = ray_object(d, o); t && *t < best_t) {
                    best_t = *t;
                    cls = o.class_id;
                    inst = o.instance_id;
                    hit = true;
                }
            }
            if (!hit && d.z < -1e-9) {
                double t = -spec.sensor_height / d.z;
                if (t < best_t) {
                    best_t = t;
                    cls = kGround;
                    inst = 0;
                    hit = true;
                }
            }
            // Every grid cell draws the same RNG amount so scene content is
            // independent of which rays hit.
            double range_noise = rng.normal(0.0, spec.range_noise_sigma);
            double rem_noise = rng.normal(0.0, spec.remission_noise_sigma);
            if (!hit || best_t > max_range) continue;
            double t = std::max(0.1, best_t + range_noise);
            cloud.x.push_back(static_cast<float>(t * d.x));
            cloud.y.push_back(static_cast<float>(t * d.y));
            cloud.z.push_back(static_cast<float>(t * d.z));
            double rem = std::clamp(kClassRemission[cls] + rem_noise, 0.0, 1.0);
            cloud.remission.push_back(static_cast<float>(rem));
            cloud.sem_label.push_back(cls);
            cloud.inst_label.push_back(inst);
        }
    }
    return cloud;
}

DatasetManifest gen_synthetic_dataset(const SyntheticSpec& spec, const fs::path& out_dir) {
    if (spec.n_scans < 1) throw ConfigError("n_scans must be >= 1");
    if (spec.duplication_k < 1) throw ConfigError("duplication_k must be >= 1");
    if (spec.redundancy_rho < 0.0 || spec.redundancy_rho > 1.0)
        throw ConfigError("redundancy_rho must be in [0, 1]");
    if (spec.duplication_k > spec.n_scans)
        throw ConfigError("n_scans (" + std::to_string(spec.n_scans) +
                          ") < duplication_k (" + std::to_string(spec.duplication_k) + ")");

    int64_t n = spec.n_scans;
    int64_t n_jitter = static_cast<int64_t>(spec.redundancy_rho * static_cast<double>(n));
    int64_t base_slots = n - n_jitter;
    int64_t dup_bases = spec.dup_bases;
    int64_t n_unique = base_slots;
    if (dup_bases == 0 && spec.duplication_k > 1) {
        // auto mode fills every non-jittered slot with duplicate blocks,
        // truncating the last block
        dup_bases = (base_slots + spec.duplication_k - 1) / spec.duplication_k;
        n_unique = 0;
    } else if (dup_bases > 0) {
        if (dup_bases * spec.duplication_k > base_slots)
            throw ConfigError("dup_bases * duplication_k exceeds the non-jittered scan count");
        n_unique = base_slots - dup_bases * spec.duplication_k;
    }

    std::error_code ec;
    fs::create_directories(out_dir / "scans", ec);
    fs::create_directories(out_dir / "labels", ec);
    if (!fs::is_directory(out_dir / "scans") || !fs::is_directory(out_dir / "labels"))
        throw DataFormatError("cannot create output directories under " + out_dir.string());

    DatasetManifest manifest;
    manifest.base_dir = out_dir;
    manifest.class_names = synth_class_names();

    int64_t next_id = 0;
    int64_t scene_index = 0;
    char name[32];
    auto emit = [&](const LabeledPointCloud& cloud) {
        std::snprintf(name, sizeof(name), "%06lld", static_cast<long long>(next_id));
        ManifestEntry e;
        e.sample_id = next_id;
        e.scan_path = std::string("scans/") + name + ".bin";
        e.label_path = std::string("labels/") + name + ".label";
        write_scan(cloud, out_dir / e.scan_path);
        write_labels(cloud, out_dir / e.label_path);
        e.content_hash = hash_sample_files(out_dir / e.scan_path, out_dir / e.label_path);
        manifest.entries.push_back(std::move(e));
        ++next_id;
    };

    // unique scans first
    std::vector<LabeledPointCloud> bases; // rigid-jitter sources
    for (int64_t i = 0; i < n_unique; ++i) {
        auto cloud = gen_synthetic_scene(spec, mix_seed({spec.seed, kTagScene,
                                                         static_cast<uint64_t>(scene_index++)}));
        emit(cloud);
        bases.push_back(std::move(cloud));
    }
    // duplicate blocks: base followed by byte-identical copies
    int64_t dup_slots = base_slots - n_unique;
    for (int64_t b = 0; b < dup_bases && dup_slots > 0; ++b) {
        auto cloud = gen_synthetic_scene(spec,
                                         mix_seed({spec.seed, kTagScene,
                                                   static_cast<uint64_t>(scene_index++)}),
                                         spec.duplication_k > 1 ? spec.dup_scene_boost : 1.0);
        int64_t block = std::min(spec.duplication_k, dup_slots);
        for (int64_t c = 0; c < block; ++c) emit(cloud);
        dup_slots -= block;
        bases.push_back(std::move(cloud));
    }
    // jittered near-duplicates of earlier scans
    Rng jrng(mix_seed({spec.seed, kTagJitter}));
    for (int64_t j = 0; j < n_jitter; ++j) {
        if (bases.empty()) throw ConfigError("redundancy_rho leaves no base scans to jitter");
        const auto& base = bases[jrng.uniform_int(bases.size())];
        float tx = static_cast<float>(jrng.normal(0.0, spec.jitter_sigma));
        float ty = static_cast<float>(jrng.normal(0.0, spec.jitter_sigma));
        float tz = static_cast<float>(jrng.normal(0.0, spec.jitter_sigma));
        LabeledPointCloud moved = base;
        for (size_t i = 0; i < moved.size(); ++i) {
            moved.x[i] += tx;
            moved.y[i] += ty;
            moved.z[i] += tz;
        }
        emit(moved);
    }

    save_manifest(manifest, out_dir / "manifest.txt");
    return manifest;
}

} // namespace ald
