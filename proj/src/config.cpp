#include "swing/config.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace swing {

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    Config c;
    in >> c.root;
    return c;
}

Config Config::from_string(const std::string& text) {
    Config c;
    c.root = json::parse(text);
    return c;
}

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

std::string Config::hash() const {
    // nlohmann::json keeps object keys sorted, so dump() is canonical.
    std::ostringstream os;
    os << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0')
       << fnv1a64(root.dump());
    return os.str();
}

} // namespace swing
