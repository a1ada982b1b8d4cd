#pragma once

#include <chrono>
#include <cstdio>
#include <string>
#include <string_view>

#include <fmt/format.h>

#include "rollstab/error.hpp"

namespace rollstab {

using TimePoint = std::chrono::sys_seconds;
using Days = std::chrono::sys_days;

inline TimePoint parse_iso8601(std::string_view text) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    char sep = 'T';
    const std::string buf(text);
    int n = std::sscanf(buf.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &s);
    if (n != 3 && n != 7) {
        throw InputError(fmt::format("invalid ISO-8601 timestamp '{}'", text));
    }
    if (n == 7 && sep != 'T' && sep != ' ') {
        throw InputError(fmt::format("invalid ISO-8601 timestamp '{}'", text));
    }
    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 60) {
        throw InputError(fmt::format("out-of-range ISO-8601 timestamp '{}'", text));
    }
    return TimePoint{sys_days{ymd}} + hours{h} + minutes{mi} + seconds{s};
}

inline std::string format_iso8601(TimePoint t) {
    using namespace std::chrono;
    const auto day = floor<days>(t);
    const year_month_day ymd{day};
    const hh_mm_ss hms{t - day};
    return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z", int(ymd.year()), unsigned(ymd.month()),
                       unsigned(ymd.day()), hms.hours().count(), hms.minutes().count(), hms.seconds().count());
}

inline Days utc_day(TimePoint t) { return std::chrono::floor<std::chrono::days>(t); }

inline int calendar_year(TimePoint t) { return int(std::chrono::year_month_day{utc_day(t)}.year()); }

/// 1..12
inline int calendar_month(TimePoint t) { return int(unsigned(std::chrono::year_month_day{utc_day(t)}.month())); }

/// Day-of-year bucket 0..364. Feb 29 shares the Feb 28 bucket, later leap-year days shift back by one.
inline int day_bucket(TimePoint t) {
    using namespace std::chrono;
    const year_month_day ymd{utc_day(t)};
    const auto m = ymd.month();
    auto d = ymd.day();
    if (m == February && d == day{29}) d = day{28};
    const sys_days ref{year{2001} / m / d};
    return static_cast<int>((ref - sys_days{year{2001} / January / 1}).count());
}

/// Days elapsed since Jan 1 00:00 UTC of the same calendar year, fractional.
inline double fractional_day_of_year(TimePoint t) {
    using namespace std::chrono;
    const year_month_day ymd{utc_day(t)};
    const TimePoint jan1{sys_days{ymd.year() / January / 1}};
    return static_cast<double>((t - jan1).count()) / 86400.0;
}

inline int days_in_month(int year, int month) {
    using namespace std::chrono;
    const year_month_day_last last{std::chrono::year{year} / std::chrono::month{static_cast<unsigned>(month)} / std::chrono::last};
    return static_cast<int>(unsigned(last.day()));
}

/// Shortest distance between two day buckets on a 365-day circle.
inline int circular_bucket_distance(int a, int b) {
    int d = a > b ? a - b : b - a;
    return d > 365 - d ? 365 - d : d;
}

}  // namespace rollstab
