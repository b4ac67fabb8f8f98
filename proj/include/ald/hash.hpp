#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace ald {

// FNV-1a, 64 bit. Stable across platforms; used for sample content hashes
// and config snapshots, never for security.
class Fnv1a64 {
public:
    void update(const void* data, size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (size_t i = 0; i < n; ++i) {
            state_ ^= p[i];
            state_ *= 0x100000001b3ull;
        }
    }
    void update(std::string_view s) { update(s.data(), s.size()); }
    [[nodiscard]] uint64_t digest() const { return state_; }

private:
    uint64_t state_ = 0xcbf29ce484222325ull;
};

inline uint64_t fnv1a64(const void* data, size_t n) {
    Fnv1a64 h;
    h.update(data, n);
    return h.digest();
}

inline uint64_t fnv1a64(std::string_view s) { return fnv1a64(s.data(), s.size()); }

std::string hash_hex(uint64_t h);
uint64_t parse_hash_hex(const std::string& s);

} // namespace ald
