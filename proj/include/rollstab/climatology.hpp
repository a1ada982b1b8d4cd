#pragma once

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "rollstab/error.hpp"
#include "rollstab/grid.hpp"
#include "rollstab/rollout.hpp"
#include "rollstab/spectra.hpp"
#include "rollstab/stats.hpp"
#include "rollstab/time.hpp"

namespace rollstab {

inline constexpr std::size_t kDaysPerYear = 365;

/// One value per UTC day.
struct DailySeries {
    std::vector<TimePoint> days;
    std::vector<double> values;

    std::size_t size() const { return days.size(); }
};

/// Band average of daily-mean spectra as a daily series.
inline DailySeries band_daily_series(const SpectrumSeries& daily, Band band) {
    DailySeries s;
    s.days = daily.times;
    s.values = daily.band(band);
    return s;
}

/// Daily band series straight from a rollout (daily mean of the step spectra).
inline DailySeries band_daily_series(const RolloutSeries& r, const std::string& variable, Band band) {
    return band_daily_series(spectrum_series(r, variable, true), band);
}

struct EnvelopeDay {
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    double range = 0.0;
    std::size_t samples = 0;
};

/// Per-day-of-year mean and [min, max] of a statistic over a reference period.
struct ClimatologyEnvelope {
    std::string statistic;
    int first_year = 0;
    int last_year = 0;
    std::array<EnvelopeDay, kDaysPerYear> days{};

    const EnvelopeDay& at(TimePoint t) const { return days[static_cast<std::size_t>(day_bucket(t))]; }
};

/// Requires every day-of-year bucket to be covered by at least two distinct years.
inline ClimatologyEnvelope build_envelope(const DailySeries& series, std::string statistic) {
    if (series.days.size() != series.values.size()) throw InputError("daily series times and values differ in length");
    std::array<std::vector<double>, kDaysPerYear> buckets;
    std::array<std::set<int>, kDaysPerYear> years;
    std::set<TimePoint> seen;
    ClimatologyEnvelope env;
    env.statistic = std::move(statistic);
    env.first_year = std::numeric_limits<int>::max();
    env.last_year = std::numeric_limits<int>::min();
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (!seen.insert(series.days[i]).second)
            throw InputError(fmt::format("duplicate day {} in reference series", format_iso8601(series.days[i])));
        if (std::isnan(series.values[i])) throw InputError("reference series contains NaN");
        const auto b = static_cast<std::size_t>(day_bucket(series.days[i]));
        buckets[b].push_back(series.values[i]);
        const int y = calendar_year(series.days[i]);
        years[b].insert(y);
        env.first_year = std::min(env.first_year, y);
        env.last_year = std::max(env.last_year, y);
    }
    for (std::size_t b = 0; b < kDaysPerYear; ++b) {
        if (years[b].size() < 2)
            throw PreconditionError(fmt::format("day-of-year {} is covered by {} reference year(s); need at least 2", b + 1,
                                                years[b].size()));
        auto& vals = buckets[b];
        // Sorted summation keeps the mean independent of year order.
        std::sort(vals.begin(), vals.end());
        double acc = 0.0;
        for (double v : vals) acc += v;
        auto& d = env.days[b];
        d.mean = acc / static_cast<double>(vals.size());
        d.min = vals.front();
        d.max = vals.back();
        d.mean = std::clamp(d.mean, d.min, d.max);
        d.range = d.max - d.min;
        d.samples = vals.size();
    }
    return env;
}

inline nlohmann::json to_json(const ClimatologyEnvelope& env) {
    nlohmann::json j;
    j["statistic"] = env.statistic;
    j["reference_years"] = {env.first_year, env.last_year};
    std::vector<double> mean, mn, mx, range;
    std::vector<std::size_t> samples;
    for (const auto& d : env.days) {
        mean.push_back(d.mean);
        mn.push_back(d.min);
        mx.push_back(d.max);
        range.push_back(d.range);
        samples.push_back(d.samples);
    }
    j["mean"] = mean;
    j["min"] = mn;
    j["max"] = mx;
    j["range"] = range;
    j["samples"] = samples;
    return j;
}

inline ClimatologyEnvelope envelope_from_json(const nlohmann::json& j) {
    ClimatologyEnvelope env;
    try {
        env.statistic = j.at("statistic").get<std::string>();
        const auto years = j.at("reference_years").get<std::vector<int>>();
        if (years.size() != 2) throw InputError("reference_years must hold [first, last]");
        env.first_year = years[0];
        env.last_year = years[1];
        const auto mean = j.at("mean").get<std::vector<double>>();
        const auto mn = j.at("min").get<std::vector<double>>();
        const auto mx = j.at("max").get<std::vector<double>>();
        const auto samples = j.value("samples", std::vector<std::size_t>(kDaysPerYear, 0));
        if (mean.size() != kDaysPerYear || mn.size() != kDaysPerYear || mx.size() != kDaysPerYear ||
            samples.size() != kDaysPerYear)
            throw InputError("envelope arrays must have 365 entries");
        for (std::size_t b = 0; b < kDaysPerYear; ++b) {
            if (!(mn[b] <= mean[b] && mean[b] <= mx[b])) throw InputError(fmt::format("envelope day {} violates min <= mean <= max", b + 1));
            env.days[b] = {mean[b], mn[b], mx[b], mx[b] - mn[b], samples[b]};
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError(fmt::format("bad envelope JSON: {}", e.what()));
    }
    return env;
}

/// Percentile thresholds of a pooled (pixels x timesteps) sample for one region.
struct ThresholdSet {
    std::string region;
    std::string variable;
    std::vector<double> levels;  // ascending
    std::vector<double> values;  // same order as levels
    std::string pooling;

    double at(double level) const {
        for (std::size_t i = 0; i < levels.size(); ++i)
            if (std::abs(levels[i] - level) < 1e-9) return values[i];
        throw InputError(fmt::format("threshold set for '{}' has no P{}", region, level));
    }
};

/// Pooled sample of one variable over a region mask and all timesteps.
inline std::vector<double> pooled_values(const RolloutSeries& r, const std::string& variable, const RegionSpec& region) {
    const auto v = r.variable_index(variable);
    r.require_clean(v);
    const auto mask = region_mask(r.grid(), region);
    std::vector<double> pool;
    pool.reserve(mask.count * r.n_time());
    for (std::size_t t = 0; t < r.n_time(); ++t) {
        const auto f = r.field(t, v);
        for (std::size_t c = 0; c < f.size(); ++c)
            if (mask.cells[c]) pool.push_back(f[c]);
    }
    return pool;
}

inline ThresholdSet pooled_percentiles(const RolloutSeries& reference, const std::string& variable,
                                       const RegionSpec& region, std::vector<double> levels) {
    if (levels.empty()) throw InputError("no percentile levels requested");
    for (double l : levels) check_percentile_level(l);
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    const auto pool = pooled_values(reference, variable, region);
    ThresholdSet ts;
    ts.region = region.name;
    ts.variable = variable;
    ts.values = percentiles(pool, levels);
    ts.levels = std::move(levels);
    ts.pooling = fmt::format("all pixels x all timesteps ({} values, {} to {})", pool.size(),
                             format_iso8601(reference.start_time()), format_iso8601(reference.time_at(reference.n_time() - 1)));
    return ts;
}

inline nlohmann::json to_json(const ThresholdSet& ts) {
    return {{"region", ts.region}, {"variable", ts.variable}, {"levels", ts.levels}, {"values", ts.values}, {"pooling", ts.pooling}};
}

inline ThresholdSet thresholds_from_json(const nlohmann::json& j) {
    ThresholdSet ts;
    try {
        ts.region = j.at("region").get<std::string>();
        ts.variable = j.value("variable", std::string{});
        ts.levels = j.at("levels").get<std::vector<double>>();
        ts.values = j.at("values").get<std::vector<double>>();
        ts.pooling = j.value("pooling", std::string{});
    } catch (const nlohmann::json::exception& e) {
        throw InputError(fmt::format("bad threshold JSON: {}", e.what()));
    }
    if (ts.levels.size() != ts.values.size()) throw InputError("threshold levels and values differ in length");
    for (std::size_t i = 1; i < ts.levels.size(); ++i)
        if (ts.levels[i] <= ts.levels[i - 1] || ts.values[i] < ts.values[i - 1])
            throw InputError("threshold levels must ascend with non-decreasing values");
    return ts;
}

}  // namespace rollstab
