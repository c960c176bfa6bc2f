#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "slpinn/network.hpp"

namespace slpinn {

namespace detail {

/// Hexfloat formatting for lossless double round trips through text files.
inline std::string hex_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%a", v);
    return buf;
}

inline double parse_double(const nlohmann::json& j) {
    if (j.is_string())
        return std::strtod(j.get<std::string>().c_str(), nullptr);
    return j.get<double>();
}

}  // namespace detail

inline constexpr int kNetworkCheckpointVersion = 1;

struct NetworkCheckpoint {
    NetworkShape shape;
    std::vector<double> params;
    std::uint64_t seed = 0;
};

inline void save_network(const std::filesystem::path& path,
                         const NetworkCheckpoint& c) {
    detail::check_params(c.shape, c.params);
    nlohmann::json j;
    j["format_version"] = kNetworkCheckpointVersion;
    j["shape"] = c.shape.layers;
    j["seed"] = c.seed;
    std::vector<std::string> hex;
    hex.reserve(c.params.size());
    for (double v : c.params) hex.push_back(detail::hex_double(v));
    j["params"] = hex;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << j.dump(1) << "\n";
}

inline NetworkCheckpoint load_network(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    nlohmann::json j;
    in >> j;
    if (j.at("format_version").get<int>() != kNetworkCheckpointVersion)
        throw std::runtime_error("unsupported network checkpoint version");
    NetworkCheckpoint c;
    c.shape = NetworkShape(j.at("shape").get<std::vector<int>>());
    c.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& e : j.at("params"))
        c.params.push_back(detail::parse_double(e));
    detail::check_params(c.shape, c.params);
    return c;
}

}  // namespace slpinn
