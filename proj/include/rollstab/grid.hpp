#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "rollstab/error.hpp"

namespace rollstab {

inline constexpr double kDefaultEarthRadiusKm = 6371.0;

inline double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

/// Regular latitude/longitude grid. Immutable once built; the constructor validates.
class GridSpec {
  public:
    GridSpec() = default;

    GridSpec(std::vector<double> lats, std::vector<double> lons, double earth_radius_km = kDefaultEarthRadiusKm)
        : lats_(std::move(lats)), lons_(std::move(lons)), radius_km_(earth_radius_km) {
        validate();
    }

    /// Cell-centred latitudes (no pole rows), longitudes starting at 0.
    static GridSpec centred(std::size_t n_lat, std::size_t n_lon, double earth_radius_km = kDefaultEarthRadiusKm) {
        std::vector<double> lats(n_lat), lons(n_lon);
        const double dlat = 180.0 / static_cast<double>(n_lat);
        for (std::size_t i = 0; i < n_lat; ++i) lats[i] = -90.0 + dlat * (static_cast<double>(i) + 0.5);
        for (std::size_t j = 0; j < n_lon; ++j) lons[j] = 360.0 * static_cast<double>(j) / static_cast<double>(n_lon);
        return GridSpec(std::move(lats), std::move(lons), earth_radius_km);
    }

    /// Reanalysis-style grid: latitude rows 90 down to -90 inclusive, longitudes 0..360-res.
    static GridSpec equiangular(double resolution_deg, double earth_radius_km = kDefaultEarthRadiusKm) {
        const auto n_lat = static_cast<std::size_t>(std::lround(180.0 / resolution_deg)) + 1;
        const auto n_lon = static_cast<std::size_t>(std::lround(360.0 / resolution_deg));
        std::vector<double> lats(n_lat), lons(n_lon);
        for (std::size_t i = 0; i < n_lat; ++i) lats[i] = 90.0 - resolution_deg * static_cast<double>(i);
        lats.back() = -90.0;
        for (std::size_t j = 0; j < n_lon; ++j) lons[j] = resolution_deg * static_cast<double>(j);
        return GridSpec(std::move(lats), std::move(lons), earth_radius_km);
    }

    std::size_t n_lat() const { return lats_.size(); }
    std::size_t n_lon() const { return lons_.size(); }
    std::size_t size() const { return lats_.size() * lons_.size(); }
    const std::vector<double>& lats() const { return lats_; }
    const std::vector<double>& lons() const { return lons_; }
    double earth_radius_km() const { return radius_km_; }

    bool operator==(const GridSpec&) const = default;

  private:
    void validate() const {
        if (lats_.empty() || lons_.empty()) throw InputError("grid must have at least one latitude and longitude");
        if (!(radius_km_ > 0.0) || !std::isfinite(radius_km_)) throw InputError("earth radius must be positive");
        bool any_positive_weight = false;
        for (std::size_t i = 0; i < lats_.size(); ++i) {
            if (!std::isfinite(lats_[i]) || std::abs(lats_[i]) > 90.0)
                throw InputError(fmt::format("latitude {} outside [-90, 90]", lats_[i]));
            if (std::cos(deg2rad(lats_[i])) > 1e-12) any_positive_weight = true;
        }
        if (lats_.size() > 1) {
            const bool increasing = lats_[1] > lats_[0];
            for (std::size_t i = 1; i < lats_.size(); ++i) {
                if (increasing ? !(lats_[i] > lats_[i - 1]) : !(lats_[i] < lats_[i - 1]))
                    throw InputError("latitudes must be strictly monotone");
            }
        }
        if (!any_positive_weight) throw InputError("grid has only pole rows; latitude weights are undefined");
        const double spacing = 360.0 / static_cast<double>(lons_.size());
        if (!(lons_[0] >= 0.0 && lons_[0] < 360.0)) throw InputError("longitudes must lie in [0, 360)");
        for (std::size_t j = 0; j < lons_.size(); ++j) {
            const double expected = lons_[0] + spacing * static_cast<double>(j);
            if (std::abs(lons_[j] - expected) > 1e-6 * std::max(1.0, spacing))
                throw InputError("longitudes must be uniformly spaced with spacing * n_lon = 360");
        }
    }

    std::vector<double> lats_;
    std::vector<double> lons_;
    double radius_km_ = kDefaultEarthRadiusKm;
};

/// cos(lat) clipped at zero, normalised to sum to one.
inline std::vector<double> latitude_weights(const GridSpec& grid) {
    std::vector<double> w(grid.n_lat());
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = std::max(0.0, std::cos(deg2rad(grid.lats()[i])));
        // cos(+-90 deg) is 6e-17 in floating point; poles carry no area.
        if (std::abs(std::abs(grid.lats()[i]) - 90.0) < 1e-12) w[i] = 0.0;
        total += w[i];
    }
    for (auto& x : w) x /= total;
    return w;
}

/// Per-cell area weights (row weight spread evenly over the row); sums to one.
inline std::vector<double> cell_weights(const GridSpec& grid) {
    const auto rows = latitude_weights(grid);
    std::vector<double> w(grid.size());
    const double inv_lon = 1.0 / static_cast<double>(grid.n_lon());
    for (std::size_t i = 0; i < grid.n_lat(); ++i)
        for (std::size_t j = 0; j < grid.n_lon(); ++j) w[i * grid.n_lon() + j] = rows[i] * inv_lon;
    return w;
}

struct RegionSpec {
    std::string name;
    double lat_min = -90.0;
    double lat_max = 90.0;
    double lon_min = 0.0;  // degrees east; negative values are west longitudes
    double lon_max = 360.0;

    void validate() const {
        if (!(lat_min < lat_max)) throw InputError(fmt::format("region '{}': lat_min must be < lat_max", name));
        if (lat_min < -90.0 || lat_max > 90.0) throw InputError(fmt::format("region '{}': latitude out of range", name));
        if (!std::isfinite(lon_min) || !std::isfinite(lon_max))
            throw InputError(fmt::format("region '{}': longitude not finite", name));
    }
};

inline void to_json(nlohmann::json& j, const RegionSpec& r) {
    j = nlohmann::json{{"name", r.name}, {"lat_min", r.lat_min}, {"lat_max", r.lat_max}, {"lon_min", r.lon_min},
                       {"lon_max", r.lon_max}};
}

inline void from_json(const nlohmann::json& j, RegionSpec& r) {
    r.name = j.at("name").get<std::string>();
    r.lat_min = j.value("lat_min", -90.0);
    r.lat_max = j.value("lat_max", 90.0);
    r.lon_min = j.value("lon_min", 0.0);
    r.lon_max = j.value("lon_max", 360.0);
    r.validate();
}

/// Longitude interval in the canonical 0..360 convention.
struct LonInterval {
    double lo = 0.0;
    double hi = 360.0;
    bool full = true;

    bool wraps() const { return !full && lo > hi; }

    bool contains(double lon) const {
        if (full) return true;
        lon = std::fmod(lon, 360.0);
        if (lon < 0.0) lon += 360.0;
        constexpr double tol = 1e-9;
        if (lo <= hi) return lon >= lo - tol && lon <= hi + tol;
        return lon >= lo - tol || lon <= hi + tol;
    }
};

inline LonInterval canonical_lon_interval(const RegionSpec& r) {
    if (r.lon_max - r.lon_min >= 360.0 - 1e-9) return {};
    auto norm = [](double x) {
        double y = std::fmod(x, 360.0);
        return y < 0.0 ? y + 360.0 : y;
    };
    LonInterval iv{norm(r.lon_min), norm(r.lon_max), false};
    if (iv.hi == 0.0 && r.lon_max > r.lon_min) iv.hi = 360.0;
    return iv;
}

struct RegionMask {
    std::vector<std::uint8_t> cells;  // row-major lat x lon, 1 = inside
    std::size_t count = 0;
};

inline RegionMask region_mask(const GridSpec& grid, const RegionSpec& region) {
    region.validate();
    const auto iv = canonical_lon_interval(region);
    RegionMask mask;
    mask.cells.assign(grid.size(), 0);
    for (std::size_t i = 0; i < grid.n_lat(); ++i) {
        const double lat = grid.lats()[i];
        if (lat < region.lat_min - 1e-9 || lat > region.lat_max + 1e-9) continue;
        for (std::size_t j = 0; j < grid.n_lon(); ++j) {
            if (iv.contains(grid.lons()[j])) {
                mask.cells[i * grid.n_lon() + j] = 1;
                ++mask.count;
            }
        }
    }
    if (mask.count == 0) throw InputError(fmt::format("region '{}' contains no grid cells", region.name));
    return mask;
}

/// Extreme-event regions plus the two polar caps used for seasonality plots.
inline std::vector<RegionSpec> builtin_regions() {
    return {
        {"central_europe", 45.0, 55.0, 5.0, 20.0},
        {"western_us", 30.0, 50.0, -125.0, -105.0},
        {"east_asia", 25.0, 45.0, 110.0, 135.0},
        {"se_australia", -40.0, -25.0, 140.0, 155.0},
        {"amazon", -15.0, 5.0, -70.0, -45.0},
        {"arctic", 66.5, 90.0, 0.0, 360.0},
        {"antarctic", -90.0, -66.5, 0.0, 360.0},
    };
}

inline RegionSpec find_region(const std::vector<RegionSpec>& regions, const std::string& name) {
    for (const auto& r : regions)
        if (r.name == name) return r;
    std::string known;
    for (const auto& r : regions) known += (known.empty() ? "" : ", ") + r.name;
    throw InputError(fmt::format("unknown region '{}' (known: {})", name, known));
}

/// Accepts either {"regions": [...]} or a bare array of region objects.
inline std::vector<RegionSpec> regions_from_json(const nlohmann::json& doc) {
    const auto& arr = doc.is_object() ? doc.at("regions") : doc;
    if (!arr.is_array()) throw InputError("region config must be an array of regions");
    std::vector<RegionSpec> out;
    for (const auto& item : arr) out.push_back(item.get<RegionSpec>());
    return out;
}

inline std::vector<RegionSpec> load_regions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError(fmt::format("cannot open region config '{}'", path));
    try {
        return regions_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw InputError(fmt::format("bad region config '{}': {}", path, e.what()));
    }
}

}  // namespace rollstab
