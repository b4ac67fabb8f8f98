#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ald/scan_io.hpp"

namespace ald {

// Synthetic class ids, in manifest order.
enum SynthClass : uint16_t {
    kGround = 0,
    kBuilding = 1,
    kVehicle = 2,
    kPole = 3,
    kPerson = 4,
    kVegetation = 5,
};
inline constexpr int kSynthClassCount = 6;
const std::vector<std::string>& synth_class_names();

// Procedural scenes ray-sampled on a virtual spinning-LiDAR grid. Redundancy
// knobs: a fraction `redundancy_rho` of the scans are rigid-jittered copies of
// earlier scans, and `dup_bases` base scenes are each emitted `duplication_k`
// times byte-identically. Duplication bases get `dup_scene_boost` times the
// object count of a regular scene, which makes the redundant clusters the
// content-rich (and uncertainty-rich) part of the pool, mirroring how repeated
// real scans concentrate where a recording vehicle lingers in busy scenes.
struct SyntheticSpec {
    int64_t n_scans = 1;
    double extent = 40.0;        // scene diameter in meters
    double redundancy_rho = 0.0; // fraction of scans that are jittered near-duplicates
    int64_t duplication_k = 1;   // byte-identical multiplicity of duplicated bases
    int64_t dup_bases = 0;       // 0 = fill all non-jittered slots with duplicate blocks
    double dup_scene_boost = 2.5;
    double jitter_sigma = 0.1; // meters, per-axis rigid translation
    uint64_t seed = 0;
    int grid_width = 64;
    int grid_height = 16;
    double fov_up_deg = 15.0;
    double fov_down_deg = 15.0;
    double sensor_height = 1.8; // meters above ground
    int min_objects = 2;
    int max_objects = 7;
    double range_noise_sigma = 0.02;
    double remission_noise_sigma = 0.02;
};

// Generates one labeled scene cloud (deterministic per seed).
LabeledPointCloud gen_synthetic_scene(const SyntheticSpec& spec, uint64_t scene_seed,
                                      double object_boost = 1.0);

// Writes scans/NNNNNN.bin + labels/NNNNNN.label + manifest.txt under out_dir
// and returns the manifest. Deterministic for a fixed spec.
DatasetManifest gen_synthetic_dataset(const SyntheticSpec& spec,
                                      const std::filesystem::path& out_dir);

} // namespace ald
