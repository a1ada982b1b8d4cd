#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "rollstab/climatology.hpp"
#include "rollstab/error.hpp"
#include "rollstab/rollout.hpp"
#include "rollstab/spectra.hpp"
#include "rollstab/stats.hpp"
#include "rollstab/time.hpp"

namespace rollstab {

// ---- blow-up ---------------------------------------------------------------

struct BlowupParams {
    double smoothing_days = 4.0;
    double window_days = 30.0;
    double r2_threshold = 0.9;
    double stride_days = 1.0;
    double min_growth = 10.0;  // total growth across one window
};

struct BlowupResult {
    std::optional<double> day;  // days from rollout start; empty = none within horizon
    std::string trigger;        // "min" or "max" when flagged
    double r2 = 0.0;
    int slope_sign = 0;
    double horizon_days = 0.0;
};

namespace detail {

struct WindowHit {
    std::size_t start = 0;
    double r2 = 0.0;
    double slope = 0.0;
};

inline std::optional<WindowHit> first_growth_window(std::span<const double> x, std::size_t steps_per_day,
                                                    const BlowupParams& p) {
    const auto spd = static_cast<double>(steps_per_day);
    const auto window = static_cast<std::size_t>(std::llround(p.window_days * spd));
    const auto smooth = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(p.smoothing_days * spd)));
    const auto stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(p.stride_days * spd)));

    const auto head = x.first(window);
    const double m0 = mean(head);
    const double eps = 1e-9 * std::max(stddev(head), 1e-12);
    std::vector<double> dev(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) dev[i] = std::max(std::abs(x[i] - m0), eps);
    const auto smoothed = trailing_mean(dev, smooth);

    std::vector<double> t(window), y(window);
    for (std::size_t i = 0; i < window; ++i) t[i] = static_cast<double>(i) / spd;
    for (std::size_t start = 0; start + window <= x.size(); start += stride) {
        for (std::size_t i = 0; i < window; ++i) y[i] = std::log(smoothed[start + i]);
        const auto fit = linear_fit(t, y);
        if (!(fit.r2 > p.r2_threshold && fit.slope > 0.0 && std::exp(fit.slope * p.window_days) >= p.min_growth)) continue;
        // Linear departure from a mean crossing also looks log-linear; require the exponential to fit better.
        const auto raw = linear_fit(t, std::span<const double>(smoothed).subspan(start, window));
        if (fit.r2 > raw.r2) return WindowHit{start, fit.r2, fit.slope};
    }
    return std::nullopt;
}

}  // namespace detail

inline BlowupResult detect_blowup(const ExtremeSeries& ext, std::size_t steps_per_day, const BlowupParams& p = {}) {
    if (steps_per_day == 0) throw InputError("steps_per_day must be positive");
    if (!(p.window_days > 0 && p.smoothing_days > 0 && p.stride_days > 0))
        throw InputError("blow-up window, smoothing and stride must be positive");
    if (ext.min.size() != ext.max.size()) throw InputError("min and max series differ in length");
    const auto window = static_cast<std::size_t>(std::llround(p.window_days * static_cast<double>(steps_per_day)));
    if (ext.min.size() < window || window < 2)
        throw InputError(fmt::format("series of {} steps is shorter than one {}-day window", ext.min.size(), p.window_days));
    for (std::size_t i = 0; i < ext.min.size(); ++i)
        if (std::isnan(ext.min[i]) || std::isnan(ext.max[i])) throw InputError(fmt::format("NaN in extreme series at step {}", i));

    BlowupResult res;
    res.horizon_days = static_cast<double>(ext.min.size() - 1) / static_cast<double>(steps_per_day);
    const auto lo = detail::first_growth_window(ext.min, steps_per_day, p);
    const auto hi = detail::first_growth_window(ext.max, steps_per_day, p);
    const detail::WindowHit* hit = nullptr;
    if (lo && (!hi || lo->start <= hi->start)) {
        hit = &*lo;
        res.trigger = "min";
    } else if (hi) {
        hit = &*hi;
        res.trigger = "max";
    }
    if (hit) {
        res.day = static_cast<double>(hit->start) / static_cast<double>(steps_per_day);
        res.r2 = hit->r2;
        res.slope_sign = hit->slope > 0 ? 1 : (hit->slope < 0 ? -1 : 0);
    }
    return res;
}

inline BlowupResult detect_blowup(const RolloutSeries& r, const std::string& variable, const BlowupParams& p = {}) {
    return detect_blowup(spatial_extremes(r, variable), r.steps_per_day(), p);
}

// ---- loss of seasonality ----------------------------------------------------

struct SeasonalityParams {
    double multiplier = 2.0;
    std::size_t run_days = 45;
};

struct SeasonalityResult {
    std::optional<std::size_t> day;  // days from the first day of the series
    double multiplier = 2.0;
    std::size_t run_length = 0;  // full length of the detected violation run
    double horizon_days = 0.0;
};

inline void require_contiguous_days(const DailySeries& s) {
    if (s.days.size() != s.values.size()) throw InputError("daily series times and values differ in length");
    for (std::size_t i = 1; i < s.size(); ++i)
        if (s.days[i] - s.days[i - 1] != std::chrono::days{1})
            throw InputError(fmt::format("daily series not contiguous at {}", format_iso8601(s.days[i])));
}

/// Per-day violation flags: |x - mean(doy)| > multiplier * range(doy); zero range flags any nonzero deviation.
inline std::vector<bool> seasonality_violations(const DailySeries& band_large, const ClimatologyEnvelope& env,
                                                double multiplier) {
    std::vector<bool> out(band_large.size());
    for (std::size_t i = 0; i < band_large.size(); ++i) {
        if (std::isnan(band_large.values[i])) throw InputError("NaN in band series");
        const auto& d = env.at(band_large.days[i]);
        const double dev = std::abs(band_large.values[i] - d.mean);
        out[i] = d.range == 0.0 ? dev > 0.0 : dev > multiplier * d.range;
    }
    return out;
}

inline SeasonalityResult detect_seasonality_loss(const DailySeries& band_large, const ClimatologyEnvelope& env,
                                                 const SeasonalityParams& p = {}) {
    if (!(p.multiplier > 0.0)) throw InputError("seasonality multiplier must be positive");
    if (p.run_days == 0) throw InputError("run_days must be positive");
    if (band_large.size() == 0) throw InputError("empty band series");
    require_contiguous_days(band_large);
    SeasonalityResult res;
    res.multiplier = p.multiplier;
    res.horizon_days = static_cast<double>(band_large.size() - 1);
    const auto viol = seasonality_violations(band_large, env, p.multiplier);
    std::size_t i = 0;
    while (i < viol.size()) {
        if (!viol[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < viol.size() && viol[j]) ++j;
        if (j - i >= p.run_days) {
            res.day = i;
            res.run_length = j - i;
            return res;
        }
        i = j;
    }
    return res;
}

// ---- small-scale ratios -----------------------------------------------------

enum class ReferenceMatch {
    exact_dates,   // reference must contain every window date
    day_of_year,   // mean over reference days with the same day-of-year bucket
};

struct SmallScaleResult {
    double ratio_vs_reference = 0.0;
    double ratio_vs_self = 0.0;
    std::size_t window_first = 0;  // day index into the prediction series
    std::size_t window_days = 0;
    bool truncated = false;  // fewer than 30 days available
    bool pre_blowup = false;
    ReferenceMatch match = ReferenceMatch::exact_dates;
};

inline constexpr std::size_t kSmallScaleWindowDays = 30;
inline constexpr std::size_t kSmallScaleBaselineDays = 2;

/// Ratios of small-band energy from daily spectra.
/// The window is the last 30 days, or the 30 days before `blowup_day` when given.
inline SmallScaleResult small_scale_ratios(const DailySeries& pred, const DailySeries& ref,
                                           std::optional<double> blowup_day = std::nullopt,
                                           ReferenceMatch match = ReferenceMatch::exact_dates) {
    if (pred.size() == 0) throw InputError("empty prediction series");
    require_contiguous_days(pred);
    SmallScaleResult res;
    res.match = match;
    std::size_t end = pred.size();
    if (blowup_day) {
        if (*blowup_day < 0) throw InputError("negative blow-up day");
        end = std::min(end, static_cast<std::size_t>(std::floor(*blowup_day)));
        res.pre_blowup = true;
        if (end == 0) end = 1;  // blow-up on day 0: keep the first day
    }
    const std::size_t first = end > kSmallScaleWindowDays ? end - kSmallScaleWindowDays : 0;
    res.window_first = first;
    res.window_days = end - first;
    res.truncated = res.window_days < kSmallScaleWindowDays;

    double pred_acc = 0.0, ref_acc = 0.0;
    if (match == ReferenceMatch::exact_dates) {
        std::map<TimePoint, double> by_date;
        for (std::size_t i = 0; i < ref.size(); ++i) by_date[ref.days[i]] = ref.values[i];
        for (std::size_t i = first; i < end; ++i) {
            const auto it = by_date.find(pred.days[i]);
            if (it == by_date.end())
                throw InputError(fmt::format("reference has no entry for {}", format_iso8601(pred.days[i])));
            pred_acc += pred.values[i];
            ref_acc += it->second;
        }
    } else {
        std::array<double, kDaysPerYear> sum{};
        std::array<std::size_t, kDaysPerYear> cnt{};
        for (std::size_t i = 0; i < ref.size(); ++i) {
            const auto b = static_cast<std::size_t>(day_bucket(ref.days[i]));
            sum[b] += ref.values[i];
            ++cnt[b];
        }
        for (std::size_t i = first; i < end; ++i) {
            const auto b = static_cast<std::size_t>(day_bucket(pred.days[i]));
            if (cnt[b] == 0)
                throw InputError(fmt::format("reference has no day-of-year match for {}", format_iso8601(pred.days[i])));
            pred_acc += pred.values[i];
            ref_acc += sum[b] / static_cast<double>(cnt[b]);
        }
    }
    const auto n = static_cast<double>(res.window_days);
    const double pred_mean = pred_acc / n, ref_mean = ref_acc / n;
    if (ref_mean == 0.0) throw InputError("reference small-band energy is zero over the window");

    const std::size_t base = std::min(kSmallScaleBaselineDays, pred.size());
    double base_acc = 0.0;
    for (std::size_t i = 0; i < base; ++i) base_acc += pred.values[i];
    const double base_mean = base_acc / static_cast<double>(base);
    if (base_mean == 0.0) throw InputError("prediction small-band energy is zero over the first two days");

    res.ratio_vs_reference = pred_mean / ref_mean;
    res.ratio_vs_self = pred_mean / base_mean;
    return res;
}

inline SmallScaleResult small_scale_ratios(const SpectrumSeries& pred_daily, const SpectrumSeries& ref_daily,
                                           std::optional<double> blowup_day = std::nullopt,
                                           ReferenceMatch match = ReferenceMatch::exact_dates) {
    return small_scale_ratios(band_daily_series(pred_daily, Band::small), band_daily_series(ref_daily, Band::small),
                              blowup_day, match);
}

// ---- seasonal-cycle RMSE ----------------------------------------------------

namespace detail {

struct MonthSpan {
    int first_year = 0;
    int first_month = 0;
    std::size_t n_months = 0;
    std::size_t n_used = 0;  // leading slices inside the span
};

/// Whole calendar months covered by a series; throws when the series starts or ends mid-month.
/// A final slice sitting exactly on the next month boundary (initial state + N steps) is left out.
inline MonthSpan whole_months(const RolloutSeries& r) {
    using namespace std::chrono;
    const auto start = r.start_time();
    const year_month_day s{utc_day(start)};
    if (unsigned(s.day()) != 1 || start != TimePoint{utc_day(start)})
        throw InputError(fmt::format("series starts mid-month at {}", format_iso8601(start)));
    std::size_t used = r.n_time();
    if (used > 1) {
        const auto last = r.time_at(used - 1);
        if (last == TimePoint{utc_day(last)} && unsigned(year_month_day{utc_day(last)}.day()) == 1) --used;
    }
    const auto after = r.time_at(used - 1) + seconds{r.step_seconds()};
    const year_month_day e{utc_day(after)};
    if (unsigned(e.day()) != 1 || after != TimePoint{utc_day(after)})
        throw InputError(fmt::format("series ends mid-month (next step {})", format_iso8601(after)));
    const int months = (int(e.year()) - int(s.year())) * 12 + int(unsigned(e.month())) - int(unsigned(s.month()));
    return {int(s.year()), int(unsigned(s.month())), static_cast<std::size_t>(months), used};
}

/// Mean field per calendar month (12 x cells).
inline std::vector<double> monthly_climatology(const RolloutSeries& r, std::size_t v, std::size_t n_used) {
    const std::size_t cells = r.grid().size();
    std::vector<double> acc(12 * cells, 0.0);
    std::array<std::size_t, 12> cnt{};
    for (std::size_t t = 0; t < n_used; ++t) {
        const auto m = static_cast<std::size_t>(calendar_month(r.time_at(t)) - 1);
        const auto f = r.field(t, v);
        for (std::size_t c = 0; c < cells; ++c) acc[m * cells + c] += f[c];
        ++cnt[m];
    }
    for (std::size_t m = 0; m < 12; ++m) {
        if (cnt[m] == 0) throw InputError(fmt::format("no steps in calendar month {}", m + 1));
        for (std::size_t c = 0; c < cells; ++c) acc[m * cells + c] /= static_cast<double>(cnt[m]);
    }
    return acc;
}

}  // namespace detail

/// Latitude-weighted RMSE between the monthly seasonal cycles of two series covering the same whole years.
inline double seasonal_cycle_rmse(const RolloutSeries& rollout, const RolloutSeries& reference, const std::string& variable) {
    if (!(rollout.grid() == reference.grid())) throw InputError("rollout and reference grids differ");
    const auto a = detail::whole_months(rollout), b = detail::whole_months(reference);
    if (a.first_year != b.first_year || a.first_month != b.first_month || a.n_months != b.n_months)
        throw InputError("rollout and reference cover different calendar months");
    if (a.n_months == 0 || a.n_months % 12 != 0)
        throw InputError(fmt::format("series cover {} months; need a whole number of years", a.n_months));
    const auto va = rollout.variable_index(variable), vb = reference.variable_index(variable);
    rollout.require_clean(va);
    reference.require_clean(vb);
    const auto ca = detail::monthly_climatology(rollout, va, a.n_used), cb = detail::monthly_climatology(reference, vb, b.n_used);
    const auto w = cell_weights(rollout.grid());
    const std::size_t cells = w.size();
    double acc = 0.0;
    for (std::size_t m = 0; m < 12; ++m)
        for (std::size_t c = 0; c < cells; ++c) {
            const double d = ca[m * cells + c] - cb[m * cells + c];
            acc += w[c] * d * d;
        }
    return std::sqrt(acc / 12.0);
}

}  // namespace rollstab
