#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "rollstab/error.hpp"
#include "rollstab/fft.hpp"
#include "rollstab/grid.hpp"
#include "rollstab/parallel.hpp"
#include "rollstab/rollout.hpp"

namespace rollstab {

// Wavelength band edges in km. Wavenumbers between 1000 and 5000 km belong to no band.
inline constexpr double kLargeBandMinKm = 5000.0;
inline constexpr double kMediumBandMaxKm = 1000.0;
inline constexpr double kMediumBandMinKm = 250.0;

enum class Band { large, gap, medium, small };

inline std::string_view band_name(Band b) {
    switch (b) {
        case Band::large: return "large";
        case Band::gap: return "gap";
        case Band::medium: return "medium";
        case Band::small: return "small";
    }
    return "?";
}

/// Zonal wavelength of wavenumber k on the equatorial circumference; k = 0 is infinite.
inline double wavelength_of(std::size_t k, const GridSpec& grid) {
    if (k == 0) return std::numeric_limits<double>::infinity();
    return 2.0 * std::numbers::pi * grid.earth_radius_km() / static_cast<double>(k);
}

inline Band band_of(std::size_t k, const GridSpec& grid) {
    const double lambda = wavelength_of(k, grid);
    if (lambda >= kLargeBandMinKm) return Band::large;
    if (lambda < kMediumBandMinKm) return Band::small;
    if (lambda <= kMediumBandMaxKm) return Band::medium;
    return Band::gap;
}

/// Band of every wavenumber 0..n_lon/2.
inline std::vector<Band> band_table(const GridSpec& grid) {
    std::vector<Band> out(grid.n_lon() / 2 + 1);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = band_of(k, grid);
    return out;
}

inline bool band_resolved(const GridSpec& grid, Band band) {
    for (auto b : band_table(grid))
        if (b == band) return true;
    return false;
}

/// Latitude-weighted zonal amplitude spectrum: per row |c_k| with c_k = DFT_k / n_lon, k = 0..n_lon/2,
/// rows combined with latitude_weights().
template <typename T>
std::vector<double> zonal_spectrum(std::span<const T> field, const GridSpec& grid) {
    const std::size_t n = grid.n_lon();
    if (n < 4) throw InputError(fmt::format("zonal spectrum needs at least 4 longitudes, got {}", n));
    if (field.size() != grid.size())
        throw InputError(fmt::format("field has {} values, grid has {}", field.size(), grid.size()));
    const auto& fft = RealFft::of_size(n);
    const auto weights = latitude_weights(grid);
    std::vector<double> row(n);
    std::vector<std::complex<double>> coeffs(fft.n_coeffs());
    std::vector<double> energy(fft.n_coeffs(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < grid.n_lat(); ++i) {
        if (weights[i] == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) row[j] = static_cast<double>(field[i * n + j]);
        fft.forward(row, coeffs);
        for (std::size_t k = 0; k < coeffs.size(); ++k) energy[k] += weights[i] * std::abs(coeffs[k]) * inv_n;
    }
    return energy;
}

inline std::vector<double> zonal_spectrum(const std::vector<double>& field, const GridSpec& grid) {
    return zonal_spectrum(std::span<const double>(field), grid);
}

/// Unweighted mean of the spectrum over the wavenumbers of one band.
inline double band_average(std::span<const double> spectrum, const GridSpec& grid, Band band) {
    if (band == Band::gap) throw InputError("the 1000-5000 km gap is not a reporting band");
    if (spectrum.size() != grid.n_lon() / 2 + 1) throw InputError("spectrum length does not match grid");
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < spectrum.size(); ++k) {
        if (band_of(k, grid) == band) {
            acc += spectrum[k];
            ++count;
        }
    }
    if (count == 0)
        throw BandUnresolved(fmt::format("{} band unresolved: shortest wavelength on this grid is {:.1f} km",
                                         band_name(band), wavelength_of(grid.n_lon() / 2, grid)));
    return acc / static_cast<double>(count);
}

/// Per-timestep zonal spectra and their band averages.
struct SpectrumSeries {
    std::vector<TimePoint> times;
    std::size_t n_k = 0;
    std::vector<double> energy;  // (time x k), row-major
    std::vector<double> band_large;
    std::vector<double> band_medium;  // empty when unresolved
    std::vector<double> band_small;   // empty when unresolved

    std::size_t size() const { return times.size(); }

    std::span<const double> spectrum(std::size_t t) const {
        return std::span<const double>(energy).subspan(t * n_k, n_k);
    }

    bool resolved(Band b) const {
        switch (b) {
            case Band::large: return true;
            case Band::medium: return !band_medium.empty() || times.empty();
            case Band::small: return !band_small.empty() || times.empty();
            case Band::gap: return false;
        }
        return false;
    }

    const std::vector<double>& band(Band b) const {
        if (!resolved(b)) throw BandUnresolved(fmt::format("{} band unresolved on this grid", band_name(b)));
        switch (b) {
            case Band::large: return band_large;
            case Band::medium: return band_medium;
            default: return band_small;
        }
    }
};

namespace detail {
inline void fill_bands(SpectrumSeries& s, const GridSpec& grid) {
    const std::size_t nt = s.times.size();
    s.band_large.assign(nt, 0.0);
    const bool med = band_resolved(grid, Band::medium), sml = band_resolved(grid, Band::small);
    s.band_medium.assign(med ? nt : 0, 0.0);
    s.band_small.assign(sml ? nt : 0, 0.0);
    for (std::size_t t = 0; t < nt; ++t) {
        s.band_large[t] = band_average(s.spectrum(t), grid, Band::large);
        if (med) s.band_medium[t] = band_average(s.spectrum(t), grid, Band::medium);
        if (sml) s.band_small[t] = band_average(s.spectrum(t), grid, Band::small);
    }
}
}  // namespace detail

/// Mean spectrum per UTC day (all steps whose timestamp falls on that day); day stamps are 00:00.
inline SpectrumSeries daily_means(const SpectrumSeries& s, const GridSpec& grid) {
    SpectrumSeries out;
    out.n_k = s.n_k;
    std::size_t count = 0;
    for (std::size_t t = 0; t < s.size(); ++t) {
        const TimePoint day{utc_day(s.times[t])};
        if (out.times.empty() || out.times.back() != day) {
            if (count > 0)
                for (std::size_t k = 0; k < s.n_k; ++k) out.energy[out.energy.size() - s.n_k + k] /= static_cast<double>(count);
            out.times.push_back(day);
            out.energy.resize(out.energy.size() + s.n_k, 0.0);
            count = 0;
        }
        const auto spec = s.spectrum(t);
        for (std::size_t k = 0; k < s.n_k; ++k) out.energy[out.energy.size() - s.n_k + k] += spec[k];
        ++count;
    }
    if (count > 0)
        for (std::size_t k = 0; k < s.n_k; ++k) out.energy[out.energy.size() - s.n_k + k] /= static_cast<double>(count);
    detail::fill_bands(out, grid);
    return out;
}

inline SpectrumSeries spectrum_series(const RolloutSeries& r, const std::string& variable, bool daily = false) {
    const auto v = r.variable_index(variable);
    r.require_clean(v);
    SpectrumSeries s;
    s.times = r.timestamps();
    s.n_k = r.grid().n_lon() / 2 + 1;
    if (r.grid().n_lon() < 4) throw InputError("zonal spectrum needs at least 4 longitudes");
    s.energy.assign(r.n_time() * s.n_k, 0.0);
    parallel_for(r.n_time(), [&](std::size_t t) {
        const auto spec = zonal_spectrum(r.field(t, v), r.grid());
        std::copy(spec.begin(), spec.end(), s.energy.begin() + static_cast<std::ptrdiff_t>(t * s.n_k));
    });
    if (daily) return daily_means(s, r.grid());
    detail::fill_bands(s, r.grid());
    return s;
}

}  // namespace rollstab
