#pragma once

// RGF1 container: "RGF1" magic, u64 little-endian header length, UTF-8 JSON header,
// then little-endian IEEE-754 float32 payload in (time, variable, lat, lon) order.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "rollstab/error.hpp"
#include "rollstab/rollout.hpp"
#include "rollstab/time.hpp"

namespace rollstab {

inline constexpr char kRgfMagic[4] = {'R', 'G', 'F', '1'};

namespace detail {

inline std::uint32_t byteswap32(std::uint32_t x) {
    return ((x & 0xFFu) << 24) | ((x & 0xFF00u) << 8) | ((x >> 8) & 0xFF00u) | (x >> 24);
}

inline void put_u64_le(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFFu);
    out.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t get_u64_le(const unsigned char* b) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace detail

inline nlohmann::json rgf_header(const RolloutSeries& r) {
    nlohmann::json h;
    h["format"] = "RGF1";
    h["dims"] = {{"time", r.n_time()}, {"variable", r.n_vars()}, {"lat", r.grid().n_lat()}, {"lon", r.grid().n_lon()}};
    h["variables"] = r.variables();
    h["lats"] = r.grid().lats();
    h["lons"] = r.grid().lons();
    h["earth_radius_km"] = r.grid().earth_radius_km();
    h["start_time"] = format_iso8601(r.start_time());
    h["step_seconds"] = r.step_seconds();
    h["fill_value"] = r.fill_value() ? nlohmann::json(*r.fill_value()) : nlohmann::json(nullptr);
    h["attributes"] = r.attributes();
    return h;
}

inline void write_rollout(const RolloutSeries& r, std::ostream& out) {
    const std::string header = rgf_header(r).dump();
    out.write(kRgfMagic, 4);
    detail::put_u64_le(out, header.size());
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    const auto data = r.data();
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(float)));
    } else {
        for (float x : data) {
            auto bits = detail::byteswap32(std::bit_cast<std::uint32_t>(x));
            out.write(reinterpret_cast<const char*>(&bits), 4);
        }
    }
    if (!out) throw InputError("failed writing RGF stream");
}

inline void write_rollout(const RolloutSeries& r, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError(fmt::format("cannot open '{}' for writing", path));
    write_rollout(r, out);
}

inline RolloutSeries read_rollout(std::istream& in) {
    char magic[4] = {};
    in.read(magic, 4);
    if (in.gcount() < 4) throw TruncatedError("RGF stream shorter than its magic bytes");
    if (std::memcmp(magic, kRgfMagic, 4) != 0) throw FormatError("not an RGF1 file (bad magic bytes)");

    unsigned char len_bytes[8];
    in.read(reinterpret_cast<char*>(len_bytes), 8);
    if (in.gcount() < 8) throw TruncatedError("RGF header length is truncated");
    const auto header_len = detail::get_u64_le(len_bytes);
    if (header_len > (std::uint64_t{1} << 32)) throw FormatError("RGF header length is implausible");
    std::string header_text(header_len, '\0');
    in.read(header_text.data(), static_cast<std::streamsize>(header_len));
    if (static_cast<std::uint64_t>(in.gcount()) < header_len) throw TruncatedError("RGF header is truncated");

    nlohmann::json h;
    try {
        h = nlohmann::json::parse(header_text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(fmt::format("RGF header is not valid JSON: {}", e.what()));
    }

    std::size_t nt = 0, nv = 0, nlat = 0, nlon = 0;
    std::vector<std::string> vars;
    std::vector<double> lats, lons;
    TimePoint start{};
    std::int64_t step = kSixHours;
    std::optional<float> fill;
    double radius = kDefaultEarthRadiusKm;
    try {
        const auto& d = h.at("dims");
        nt = d.at("time").get<std::size_t>();
        nv = d.at("variable").get<std::size_t>();
        nlat = d.at("lat").get<std::size_t>();
        nlon = d.at("lon").get<std::size_t>();
        vars = h.at("variables").get<std::vector<std::string>>();
        lats = h.at("lats").get<std::vector<double>>();
        lons = h.at("lons").get<std::vector<double>>();
        start = parse_iso8601(h.at("start_time").get<std::string>());
        step = h.value("step_seconds", kSixHours);
        radius = h.value("earth_radius_km", kDefaultEarthRadiusKm);
        if (h.contains("fill_value") && !h["fill_value"].is_null()) fill = h["fill_value"].get<float>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(fmt::format("RGF header is missing fields: {}", e.what()));
    }
    if (vars.size() != nv) throw DimensionError(fmt::format("header lists {} variables but dims say {}", vars.size(), nv));
    if (lats.size() != nlat) throw DimensionError(fmt::format("header lists {} latitudes but dims say {}", lats.size(), nlat));
    if (lons.size() != nlon) throw DimensionError(fmt::format("header lists {} longitudes but dims say {}", lons.size(), nlon));

    const std::size_t count = nt * nv * nlat * nlon;
    std::vector<float> data(count);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(count * sizeof(float)));
    const auto got = static_cast<std::size_t>(in.gcount());
    if (got < count * sizeof(float))
        throw TruncatedError(fmt::format("RGF payload truncated: {} of {} bytes", got, count * sizeof(float)));
    if (in.peek() != std::char_traits<char>::eof()) throw DimensionError("RGF payload is longer than the header dims");
    if constexpr (std::endian::native != std::endian::little) {
        for (auto& x : data) x = std::bit_cast<float>(detail::byteswap32(std::bit_cast<std::uint32_t>(x)));
    }

    RolloutSeries r(GridSpec(std::move(lats), std::move(lons), radius), std::move(vars), start, step, nt, std::move(data), fill);
    if (h.contains("attributes") && h["attributes"].is_object()) r.attributes() = h["attributes"];
    return r;
}

inline RolloutSeries read_rollout(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(fmt::format("cannot open '{}'", path));
    return read_rollout(in);
}

/// A 1-D series of (timestamp, value) rows.
struct TimeSeries {
    std::vector<TimePoint> times;
    std::vector<double> values;
};

inline TimeSeries read_series_csv(std::istream& in) {
    TimeSeries s;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw InputError(fmt::format("line {}: expected 'timestamp,value'", lineno));
        const std::string ts = line.substr(0, comma);
        const std::string val = line.substr(comma + 1);
        TimePoint t;
        try {
            t = parse_iso8601(ts);
        } catch (const InputError&) {
            if (s.times.empty()) continue;  // header row
            throw;
        }
        try {
            s.values.push_back(std::stod(val));
        } catch (const std::exception&) {
            throw InputError(fmt::format("line {}: bad value '{}'", lineno, val));
        }
        s.times.push_back(t);
    }
    return s;
}

inline TimeSeries read_series_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError(fmt::format("cannot open '{}'", path));
    return read_series_csv(in);
}

}  // namespace rollstab
