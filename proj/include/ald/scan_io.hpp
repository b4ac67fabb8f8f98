#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ald {

// One LiDAR scan. Column layout; label arrays are empty until loaded.
struct LabeledPointCloud {
    std::vector<float> x, y, z, remission;
    std::vector<uint16_t> sem_label;
    std::vector<uint16_t> inst_label;

    [[nodiscard]] size_t size() const { return x.size(); }
    [[nodiscard]] bool has_labels() const { return sem_label.size() == x.size() && !x.empty(); }
};

struct ManifestEntry {
    int64_t sample_id = 0;
    std::string scan_path;  // relative to the manifest directory
    std::string label_path;
    uint64_t content_hash = 0; // over scan bytes then label bytes
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    std::vector<std::string> class_names;
    std::filesystem::path base_dir;

    [[nodiscard]] int class_count() const { return static_cast<int>(class_names.size()); }
    [[nodiscard]] size_t size() const { return entries.size(); }
    [[nodiscard]] std::filesystem::path scan_file(size_t i) const {
        return base_dir / entries[i].scan_path;
    }
    [[nodiscard]] std::filesystem::path label_file(size_t i) const {
        return base_dir / entries[i].label_path;
    }
};

// Scans are packed little-endian float32 (x, y, z, remission), 16 bytes per
// point. Labels are little-endian uint32: low 16 bits semantic class, high 16
// bits instance id.
LabeledPointCloud load_scan(const std::filesystem::path& path);
void load_labels(const std::filesystem::path& path, LabeledPointCloud& cloud);
void write_scan(const LabeledPointCloud& cloud, const std::filesystem::path& path);
void write_labels(const LabeledPointCloud& cloud, const std::filesystem::path& path);

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path);
uint64_t hash_sample_files(const std::filesystem::path& scan,
                           const std::filesystem::path& labels);

// Manifest file: '# classes<TAB>a,b,c' header line, then one line per entry
// 'sample_id<TAB>scan_path<TAB>label_path<TAB>hash_hex'.
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

} // namespace ald
