#pragma once
#include <cstdint>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace swing {

using json = nlohmann::json;

// Parameters in the config file are {value, unit} objects; bare numbers are
// accepted too. The unit string is documentation, conversions happen at the
// ingestion site that knows the target base.
inline double qty(const json& j) {
    if (j.is_object()) return j.at("value").get<double>();
    return j.get<double>();
}

inline double qty(const json& j, const char* key) { return qty(j.at(key)); }

struct Config {
    json root;

    static Config load(const std::string& path);
    static Config from_string(const std::string& text);

    // FNV-1a over the canonical (sorted-key, no-whitespace) dump. Embedded in
    // every output file so results can be traced to the exact configuration.
    std::string hash() const;
};

std::uint64_t fnv1a64(const std::string& s);

} // namespace swing
