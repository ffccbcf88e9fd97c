#pragma once

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "gdls/version.hpp"

namespace gdls {

/// Full-precision decimal rendering of a double (17 significant digits).
inline std::string fmt_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Provenance header written at the top of every output file as '#' comments:
/// tool version line first, then the echoed configuration key/value pairs.
class MetaBlock {
public:
    void add(const std::string& key, const std::string& value) { items_.emplace_back(key, value); }
    void add(const std::string& key, const char* value) { items_.emplace_back(key, value); }
    void add(const std::string& key, double value) { add(key, fmt_full(value)); }
    void add(const std::string& key, std::uint64_t value) { add(key, std::to_string(value)); }
    void add(const std::string& key, int value) { add(key, std::to_string(value)); }

    void write(std::ostream& os) const {
        os << "# gdls " << kVersion << "\n";
        for (const auto& [k, v] : items_) os << "# " << k << " = " << v << "\n";
    }

private:
    std::vector<std::pair<std::string, std::string>> items_;
};

}  // namespace gdls
