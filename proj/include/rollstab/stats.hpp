#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <fmt/format.h>

#include "rollstab/error.hpp"

namespace rollstab {

inline double mean(std::span<const double> x) {
    if (x.empty()) throw InputError("mean of an empty series");
    double acc = 0.0;
    for (double v : x) acc += v;
    return acc / static_cast<double>(x.size());
}

/// Population (ddof = 0) standard deviation.
inline double stddev(std::span<const double> x) {
    const double m = mean(x);
    double acc = 0.0;
    for (double v : x) acc += (v - m) * (v - m);
    return std::sqrt(acc / static_cast<double>(x.size()));
}

/// Sample (ddof = 1) standard deviation; zero for a single value.
inline double sample_stddev(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    const double m = mean(x);
    double acc = 0.0;
    for (double v : x) acc += (v - m) * (v - m);
    return std::sqrt(acc / static_cast<double>(x.size() - 1));
}

/// Linear-interpolation percentile between closest order statistics ("type 7"). `sorted` must be ascending.
inline double percentile_sorted(std::span<const double> sorted, double level) {
    if (sorted.empty()) throw InputError("percentile of an empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * level / 100.0;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline void check_percentile_level(double level) {
    if (!(level > 0.0 && level < 100.0)) throw InputError(fmt::format("percentile level {} outside (0, 100)", level));
}

/// Several type-7 percentiles of an unsorted sample; the sample is copied and sorted once.
inline std::vector<double> percentiles(std::span<const double> sample, std::span<const double> levels) {
    for (double l : levels) check_percentile_level(l);
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> out;
    out.reserve(levels.size());
    for (double l : levels) out.push_back(percentile_sorted(sorted, l));
    return out;
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;  // zero when y has no variance
};

inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    LinearFit fit;
    if (sxx <= 0.0) return fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    // Relative guard: a numerically flat series has no explained variance.
    if (syy > 1e-24 * (my * my + 1.0) * n) fit.r2 = std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
    return fit;
}

/// Trailing rolling mean; the first width-1 entries average what is available.
/// Each window is summed directly so tiny values next to large ones keep their magnitude.
inline std::vector<double> trailing_mean(std::span<const double> x, std::size_t width) {
    std::vector<double> out(x.size());
    if (width == 0) width = 1;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const std::size_t lo = i + 1 >= width ? i + 1 - width : 0;
        double acc = 0.0;
        for (std::size_t k = lo; k <= i; ++k) acc += x[k];
        out[i] = acc / static_cast<double>(i + 1 - lo);
    }
    return out;
}

}  // namespace rollstab
