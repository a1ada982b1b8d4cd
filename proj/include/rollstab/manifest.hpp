#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "rollstab/error.hpp"

namespace rollstab {

inline constexpr const char* kVersion = "0.1.0";

/// 64-bit FNV-1a over a byte stream.
inline std::uint64_t fnv1a(std::istream& in) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ull;
        }
        if (!in) break;
    }
    return h;
}

inline std::string file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(fmt::format("cannot open '{}'", path));
    return fmt::format("fnv1a64:{:016x}", fnv1a(in));
}

/// Provenance block embedded in every emitted file.
struct RunManifest {
    std::string subcommand;
    std::vector<std::string> inputs;
    nlohmann::json parameters = nlohmann::json::object();
    std::optional<std::uint64_t> seed;

    nlohmann::json to_json() const {
        nlohmann::json in = nlohmann::json::array();
        for (const auto& p : inputs) in.push_back({{"path", p}, {"hash", file_hash(p)}});
        return {{"tool", "rollstab"},
                {"version", kVersion},
                {"subcommand", subcommand},
                {"inputs", in},
                {"parameters", parameters},
                {"seed", seed ? nlohmann::json(*seed) : nlohmann::json(nullptr)}};
    }
};

}  // namespace rollstab
