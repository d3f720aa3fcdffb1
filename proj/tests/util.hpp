#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace testutil {

inline std::string source_path(const std::string& rel) { return std::string(SAPPHIRE_SOURCE_DIR) + "/" + rel; }

inline std::string read_file(const std::string& rel) {
    std::ifstream in(source_path(rel));
    if (!in) throw std::runtime_error("cannot open " + rel);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<uint8_t> unhex(const std::string& h) {
    std::vector<uint8_t> out;
    if (h == "-") return out;
    for (size_t i = 0; i + 1 < h.size(); i += 2) out.push_back(uint8_t(std::stoul(h.substr(i, 2), nullptr, 16)));
    return out;
}

template <class Bytes>
std::string hex(const Bytes& b) {
    static const char* d = "0123456789abcdef";
    std::string s;
    for (uint8_t v : b) {
        s += d[v >> 4];
        s += d[v & 15];
    }
    return s;
}

struct KatLine {
    std::string alg;
    std::vector<uint8_t> msg;
    size_t out_len;
    std::string expected;
};

inline std::vector<KatLine> load_kats() {
    std::istringstream in(read_file("tests/kat/fips202.txt"));
    std::vector<KatLine> out;
    std::string alg, msg, expected;
    size_t len;
    while (in >> alg >> msg >> len >> expected) out.push_back({alg, unhex(msg), len, expected});
    return out;
}

}  // namespace testutil
