#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "rollstab/climatology.hpp"
#include "rollstab/error.hpp"
#include "rollstab/grid.hpp"
#include "rollstab/rollout.hpp"
#include "rollstab/stats.hpp"

namespace rollstab {

enum class TailSide { hot, cold };

inline TailSide parse_tail_side(const std::string& s) {
    if (s == "hot") return TailSide::hot;
    if (s == "cold") return TailSide::cold;
    throw InputError(fmt::format("unknown side '{}' (hot, cold)", s));
}

inline std::string_view side_name(TailSide s) { return s == TailSide::hot ? "hot" : "cold"; }

/// Regional spatial max and min per timestep.
struct RegionalSeries {
    std::string region;
    std::vector<TimePoint> times;
    std::vector<double> max;
    std::vector<double> min;

    std::size_t size() const { return times.size(); }
    const std::vector<double>& side(TailSide s) const { return s == TailSide::hot ? max : min; }
};

inline RegionalSeries regional_extreme_series(const RolloutSeries& r, const std::string& variable, const RegionSpec& region) {
    const auto v = r.variable_index(variable);
    r.require_clean(v);
    const auto mask = region_mask(r.grid(), region);
    RegionalSeries out;
    out.region = region.name;
    out.times = r.timestamps();
    out.max.resize(r.n_time());
    out.min.resize(r.n_time());
    for (std::size_t t = 0; t < r.n_time(); ++t) {
        const auto f = r.field(t, v);
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t c = 0; c < f.size(); ++c)
            if (mask.cells[c]) {
                lo = std::min<double>(lo, f[c]);
                hi = std::max<double>(hi, f[c]);
            }
        out.min[t] = lo;
        out.max[t] = hi;
    }
    return out;
}

/// Restricts both series to their common timestamps.
inline std::pair<RegionalSeries, RegionalSeries> match_calendar_window(const RegionalSeries& a, const RegionalSeries& b) {
    std::map<TimePoint, std::size_t> in_b;
    for (std::size_t i = 0; i < b.size(); ++i) in_b[b.times[i]] = i;
    RegionalSeries x{a.region, {}, {}, {}}, y{b.region, {}, {}, {}};
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto it = in_b.find(a.times[i]);
        if (it == in_b.end()) continue;
        x.times.push_back(a.times[i]);
        x.max.push_back(a.max[i]);
        x.min.push_back(a.min[i]);
        y.times.push_back(b.times[it->second]);
        y.max.push_back(b.max[it->second]);
        y.min.push_back(b.min[it->second]);
    }
    if (x.size() == 0) throw InputError("model and reference share no timestamps");
    return {std::move(x), std::move(y)};
}

struct EventSeries {
    std::string region;
    double hot_threshold = 0.0;   // pooled P90
    double cold_threshold = 0.0;  // pooled P10
    RegionalSeries extremes;
    std::vector<bool> hot;
    std::vector<bool> cold;

    std::size_t hot_count() const { return static_cast<std::size_t>(std::count(hot.begin(), hot.end(), true)); }
    std::size_t cold_count() const { return static_cast<std::size_t>(std::count(cold.begin(), cold.end(), true)); }
};

/// Hot when the regional max exceeds P90, cold when the regional min falls below P10.
inline EventSeries event_series(RegionalSeries extremes, const ThresholdSet& thresholds) {
    EventSeries e;
    e.region = extremes.region;
    e.hot_threshold = thresholds.at(90.0);
    e.cold_threshold = thresholds.at(10.0);
    for (std::size_t t = 0; t < extremes.size(); ++t) {
        e.hot.push_back(extremes.max[t] > e.hot_threshold);
        e.cold.push_back(extremes.min[t] < e.cold_threshold);
    }
    e.extremes = std::move(extremes);
    return e;
}

/// Level grid in tenths of a percent: hot 90.0..99.9, cold 0.1..10.0 (default step 0.1).
inline std::vector<double> default_qq_levels(TailSide side, double step = 0.1) {
    if (!(step > 0.0)) throw InputError("level step must be positive");
    const double lo = side == TailSide::hot ? 90.0 : 0.1, hi = side == TailSide::hot ? 99.9 : 10.0;
    std::vector<double> out;
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) out.push_back(std::round((lo + static_cast<double>(i) * step) * 1e6) / 1e6);
    return out;
}

struct QQPair {
    double level = 0.0;
    double reference = 0.0;
    double model = 0.0;
};

/// Paired quantiles of the regional max (hot) or min (cold) series.
inline std::vector<QQPair> qq_tails(std::span<const double> model, std::span<const double> reference, std::vector<double> levels) {
    if (levels.empty()) throw InputError("empty quantile level set");
    if (model.empty() || reference.empty()) throw InputError("empty series for QQ comparison");
    const auto qm = percentiles(model, levels), qr = percentiles(reference, levels);
    std::vector<QQPair> out;
    for (std::size_t i = 0; i < levels.size(); ++i) out.push_back({levels[i], qr[i], qm[i]});
    return out;
}

inline std::vector<QQPair> qq_tails(const RegionalSeries& model, const RegionalSeries& reference, TailSide side,
                                    std::vector<double> levels = {}) {
    if (levels.empty()) levels = default_qq_levels(side);
    return qq_tails(model.side(side), reference.side(side), std::move(levels));
}

/// Threshold levels for exceedance curves: hot 80..99.9, cold 0.1..20.
inline std::vector<double> default_exceedance_levels(TailSide side) {
    if (side == TailSide::hot) {
        std::vector<double> l;
        for (int p = 80; p <= 99; ++p) l.push_back(p);
        l.push_back(99.5);
        l.push_back(99.9);
        return l;
    }
    std::vector<double> l{0.1, 0.5};
    for (int p = 1; p <= 20; ++p) l.push_back(p);
    return l;
}

struct ExceedanceCurve {
    TailSide side = TailSide::hot;
    std::vector<double> levels;
    std::vector<double> thresholds;
    std::vector<double> fraction;
};

/// Fraction of timesteps whose regional max exceeds (hot) or min falls below (cold) each threshold.
inline ExceedanceCurve exceedance_curve(const RegionalSeries& series, const ThresholdSet& thresholds, TailSide side) {
    if (series.size() == 0) throw InputError("empty series for exceedance");
    for (std::size_t i = 1; i < thresholds.values.size(); ++i)
        if (thresholds.values[i] < thresholds.values[i - 1] || thresholds.levels[i] <= thresholds.levels[i - 1])
            throw InputError("thresholds must be monotone in level");
    ExceedanceCurve c;
    c.side = side;
    const auto& x = series.side(side);
    for (std::size_t i = 0; i < thresholds.levels.size(); ++i) {
        const double thr = thresholds.values[i];
        std::size_t n = 0;
        for (double v : x) n += side == TailSide::hot ? (v > thr) : (v < thr);
        c.levels.push_back(thresholds.levels[i]);
        c.thresholds.push_back(thr);
        c.fraction.push_back(static_cast<double>(n) / static_cast<double>(x.size()));
    }
    return c;
}

/// Model/reference fraction ratio per level; empty where the reference fraction is zero.
inline std::vector<std::optional<double>> exceedance_ratio(const ExceedanceCurve& model, const ExceedanceCurve& reference) {
    if (model.levels != reference.levels) throw InputError("exceedance curves use different levels");
    std::vector<std::optional<double>> out;
    for (std::size_t i = 0; i < model.levels.size(); ++i)
        out.push_back(reference.fraction[i] > 0.0 ? std::optional<double>(model.fraction[i] / reference.fraction[i]) : std::nullopt);
    return out;
}

}  // namespace rollstab
