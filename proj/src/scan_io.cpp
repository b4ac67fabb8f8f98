#include "ald/scan_io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "ald/errors.hpp"
#include "ald/hash.hpp"

namespace fs = std::filesystem;

namespace ald {

std::vector<unsigned char> read_file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataFormatError("cannot open file: " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    return bytes;
}

static void write_file_bytes(const fs::path& path, const void* data, size_t n) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataFormatError("cannot open file for writing: " + path.string());
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out) throw DataFormatError("short write: " + path.string());
}

static float le_float(const unsigned char* p) {
    uint32_t u = static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
                 static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
    float f;
    std::memcpy(&f, &u, 4);
    return f;
}

static uint32_t le_u32(const unsigned char* p) {
    return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
           static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

static void put_le_float(std::vector<unsigned char>& out, float f) {
    uint32_t u;
    std::memcpy(&u, &f, 4);
    out.push_back(static_cast<unsigned char>(u & 0xFF));
    out.push_back(static_cast<unsigned char>((u >> 8) & 0xFF));
    out.push_back(static_cast<unsigned char>((u >> 16) & 0xFF));
    out.push_back(static_cast<unsigned char>((u >> 24) & 0xFF));
}

LabeledPointCloud load_scan(const fs::path& path) {
    auto bytes = read_file_bytes(path);
    if (bytes.size() % 16 != 0)
        throw DataFormatError("truncated scan file " + path.string() +
                              ": trailing bytes at offset " +
                              std::to_string((bytes.size() / 16) * 16));
    size_t n = bytes.size() / 16;
    LabeledPointCloud cloud;
    cloud.x.resize(n);
    cloud.y.resize(n);
    cloud.z.resize(n);
    cloud.remission.resize(n);
    for (size_t i = 0; i < n; ++i) {
        const unsigned char* p = bytes.data() + 16 * i;
        cloud.x[i] = le_float(p);
        cloud.y[i] = le_float(p + 4);
        cloud.z[i] = le_float(p + 8);
        cloud.remission[i] = le_float(p + 12);
        if (!std::isfinite(cloud.x[i]) || !std::isfinite(cloud.y[i]) ||
            !std::isfinite(cloud.z[i]) || !std::isfinite(cloud.remission[i]))
            throw DataFormatError("non-finite value in scan " + path.string() +
                                  " at point " + std::to_string(i));
    }
    return cloud;
}

void load_labels(const fs::path& path, LabeledPointCloud& cloud) {
    auto bytes = read_file_bytes(path);
    size_t n = cloud.size();
    if (bytes.size() != 4 * n)
        throw DataFormatError("label file " + path.string() + " holds " +
                              std::to_string(bytes.size() / 4) + " labels, expected " +
                              std::to_string(n));
    cloud.sem_label.resize(n);
    cloud.inst_label.resize(n);
    for (size_t i = 0; i < n; ++i) {
        uint32_t w = le_u32(bytes.data() + 4 * i);
        cloud.sem_label[i] = static_cast<uint16_t>(w & 0xFFFF);
        cloud.inst_label[i] = static_cast<uint16_t>(w >> 16);
    }
}

void write_scan(const LabeledPointCloud& cloud, const fs::path& path) {
    std::vector<unsigned char> bytes;
    bytes.reserve(cloud.size() * 16);
    for (size_t i = 0; i < cloud.size(); ++i) {
        put_le_float(bytes, cloud.x[i]);
        put_le_float(bytes, cloud.y[i]);
        put_le_float(bytes, cloud.z[i]);
        put_le_float(bytes, cloud.remission[i]);
    }
    write_file_bytes(path, bytes.data(), bytes.size());
}

void write_labels(const LabeledPointCloud& cloud, const fs::path& path) {
    if (cloud.sem_label.size() != cloud.size() || cloud.inst_label.size() != cloud.size())
        throw DataFormatError("cloud has no labels to write: " + path.string());
    std::vector<unsigned char> bytes;
    bytes.reserve(cloud.size() * 4);
    for (size_t i = 0; i < cloud.size(); ++i) {
        uint32_t w = static_cast<uint32_t>(cloud.sem_label[i]) |
                     (static_cast<uint32_t>(cloud.inst_label[i]) << 16);
        bytes.push_back(static_cast<unsigned char>(w & 0xFF));
        bytes.push_back(static_cast<unsigned char>((w >> 8) & 0xFF));
        bytes.push_back(static_cast<unsigned char>((w >> 16) & 0xFF));
        bytes.push_back(static_cast<unsigned char>((w >> 24) & 0xFF));
    }
    write_file_bytes(path, bytes.data(), bytes.size());
}

uint64_t hash_sample_files(const fs::path& scan, const fs::path& labels) {
    Fnv1a64 h;
    auto s = read_file_bytes(scan);
    h.update(s.data(), s.size());
    auto l = read_file_bytes(labels);
    h.update(l.data(), l.size());
    return h.digest();
}

static std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    parts.push_back(cur);
    return parts;
}

DatasetManifest load_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataFormatError("cannot open manifest: " + path.string());
    DatasetManifest m;
    m.base_dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    std::string line;
    size_t lineno = 0;
    std::set<int64_t> seen;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto fields = split(line, '\t');
            if (fields[0] == "# classes" && fields.size() == 2)
                m.class_names = split(fields[1], ',');
            continue;
        }
        auto fields = split(line, '\t');
        if (fields.size() != 4)
            throw DataFormatError("manifest " + path.string() + " line " +
                                  std::to_string(lineno) + ": expected 4 tab-separated fields");
        ManifestEntry e;
        try {
            e.sample_id = std::stoll(fields[0]);
        } catch (const std::exception&) {
            throw DataFormatError("manifest line " + std::to_string(lineno) +
                                  ": bad sample id '" + fields[0] + "'");
        }
        e.scan_path = fields[1];
        e.label_path = fields[2];
        e.content_hash = parse_hash_hex(fields[3]);
        if (!seen.insert(e.sample_id).second)
            throw DataFormatError("manifest line " + std::to_string(lineno) +
                                  ": duplicate sample id " + std::to_string(e.sample_id));
        m.entries.push_back(std::move(e));
    }
    // ids must be dense 0..N-1
    for (int64_t i = 0; i < static_cast<int64_t>(m.entries.size()); ++i)
        if (!seen.count(i))
            throw DataFormatError("manifest " + path.string() + ": sample ids not dense, missing " +
                                  std::to_string(i));
    return m;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataFormatError("cannot write manifest: " + path.string());
    out << "# classes\t";
    for (size_t i = 0; i < manifest.class_names.size(); ++i) {
        if (i) out << ',';
        out << manifest.class_names[i];
    }
    out << '\n';
    for (const auto& e : manifest.entries)
        out << e.sample_id << '\t' << e.scan_path << '\t' << e.label_path << '\t'
            << hash_hex(e.content_hash) << '\n';
    if (!out) throw DataFormatError("short write: " + path.string());
}

} // namespace ald
