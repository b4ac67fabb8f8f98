#include <algorithm>
#include <cstdio>

#include "ald/errors.hpp"
#include "ald/hash.hpp"
#include "ald/rng.hpp"

namespace ald {

std::string hash_hex(uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

uint64_t parse_hash_hex(const std::string& s) {
    if (s.empty() || s.size() > 16 ||
        s.find_first_not_of("0123456789abcdefABCDEF") != std::string::npos)
        throw DataFormatError("invalid hash hex: '" + s + "'");
    return std::strtoull(s.c_str(), nullptr, 16);
}

std::vector<int64_t> Rng::sample_without_replacement(int64_t n, int64_t k) {
    std::vector<int64_t> ids(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) ids[static_cast<size_t>(i)] = i;
    k = std::min(k, n);
    for (int64_t i = 0; i < k; ++i) {
        int64_t j = i + static_cast<int64_t>(uniform_int(static_cast<uint64_t>(n - i)));
        std::swap(ids[static_cast<size_t>(i)], ids[static_cast<size_t>(j)]);
    }
    ids.resize(static_cast<size_t>(k));
    return ids;
}

} // namespace ald
