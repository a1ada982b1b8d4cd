#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "rollstab/error.hpp"
#include "rollstab/grid.hpp"
#include "rollstab/time.hpp"

namespace rollstab {

inline constexpr std::int64_t kSixHours = 21600;

/// A (time x variable x lat x lon) field sequence stored as 32-bit reals, row-major.
class RolloutSeries {
  public:
    RolloutSeries() = default;

    RolloutSeries(GridSpec grid, std::vector<std::string> variables, TimePoint start_time, std::int64_t step_seconds,
                  std::size_t n_time, std::vector<float> data = {}, std::optional<float> fill_value = std::nullopt)
        : grid_(std::move(grid)),
          variables_(std::move(variables)),
          start_(start_time),
          step_seconds_(step_seconds),
          n_time_(n_time),
          data_(std::move(data)),
          fill_(fill_value) {
        if (n_time_ == 0) throw InputError("rollout needs at least one timestep");
        if (step_seconds_ <= 0) throw InputError("step_seconds must be positive");
        if (variables_.empty()) throw InputError("rollout needs at least one variable");
        for (std::size_t a = 0; a < variables_.size(); ++a)
            for (std::size_t b = a + 1; b < variables_.size(); ++b)
                if (variables_[a] == variables_[b]) throw InputError(fmt::format("duplicate variable '{}'", variables_[a]));
        const std::size_t expected = n_time_ * variables_.size() * grid_.size();
        if (data_.empty()) data_.assign(expected, 0.0f);
        if (data_.size() != expected)
            throw DimensionError(fmt::format("payload has {} values, dims imply {}", data_.size(), expected));
    }

    const GridSpec& grid() const { return grid_; }
    const std::vector<std::string>& variables() const { return variables_; }
    TimePoint start_time() const { return start_; }
    std::int64_t step_seconds() const { return step_seconds_; }
    std::size_t n_time() const { return n_time_; }
    std::size_t n_vars() const { return variables_.size(); }
    std::optional<float> fill_value() const { return fill_; }
    std::span<const float> data() const { return data_; }
    std::span<float> data() { return data_; }

    nlohmann::json& attributes() { return attributes_; }
    const nlohmann::json& attributes() const { return attributes_; }

    TimePoint time_at(std::size_t t) const {
        return start_ + std::chrono::seconds{step_seconds_ * static_cast<std::int64_t>(t)};
    }

    std::vector<TimePoint> timestamps() const {
        std::vector<TimePoint> out(n_time_);
        for (std::size_t t = 0; t < n_time_; ++t) out[t] = time_at(t);
        return out;
    }

    /// Steps per UTC day; throws when the step does not divide a day.
    std::size_t steps_per_day() const {
        if (86400 % step_seconds_ != 0)
            throw PreconditionError(fmt::format("step of {} s does not divide a day", step_seconds_));
        return static_cast<std::size_t>(86400 / step_seconds_);
    }

    bool has_variable(const std::string& name) const {
        return std::find(variables_.begin(), variables_.end(), name) != variables_.end();
    }

    std::size_t variable_index(const std::string& name) const {
        const auto it = std::find(variables_.begin(), variables_.end(), name);
        if (it == variables_.end()) {
            std::string known;
            for (const auto& v : variables_) known += (known.empty() ? "" : ", ") + v;
            throw InputError(fmt::format("unknown variable '{}' (available: {})", name, known));
        }
        return static_cast<std::size_t>(it - variables_.begin());
    }

    std::span<const float> field(std::size_t t, std::size_t v) const {
        return std::span<const float>(data_).subspan(offset(t, v), grid_.size());
    }
    std::span<float> field(std::size_t t, std::size_t v) { return std::span<float>(data_).subspan(offset(t, v), grid_.size()); }

    /// Rejects NaN and flagged fill values in one variable; detectors call this before touching data.
    void require_clean(std::size_t v) const {
        for (std::size_t t = 0; t < n_time_; ++t) {
            for (float x : field(t, v)) {
                if (std::isnan(x))
                    throw InputError(fmt::format("variable '{}' contains NaN at step {}", variables_[v], t));
                if (fill_ && x == *fill_)
                    throw InputError(fmt::format("variable '{}' contains fill value {} at step {}", variables_[v], *fill_, t));
            }
        }
    }

  private:
    std::size_t offset(std::size_t t, std::size_t v) const { return (t * variables_.size() + v) * grid_.size(); }

    GridSpec grid_;
    std::vector<std::string> variables_;
    TimePoint start_{};
    std::int64_t step_seconds_ = kSixHours;
    std::size_t n_time_ = 0;
    std::vector<float> data_;
    std::optional<float> fill_;
    nlohmann::json attributes_ = nlohmann::json::object();
};

struct ExtremeSeries {
    std::vector<double> min;
    std::vector<double> max;
};

/// Global minimum and maximum of one variable at every timestep.
inline ExtremeSeries spatial_extremes(const RolloutSeries& r, const std::string& variable) {
    const auto v = r.variable_index(variable);
    r.require_clean(v);
    ExtremeSeries out;
    out.min.resize(r.n_time());
    out.max.resize(r.n_time());
    for (std::size_t t = 0; t < r.n_time(); ++t) {
        const auto f = r.field(t, v);
        const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
        out.min[t] = *lo;
        out.max[t] = *hi;
    }
    return out;
}

/// Latitude-weighted global mean of one variable at every timestep.
inline std::vector<double> area_mean(const RolloutSeries& r, const std::string& variable) {
    const auto v = r.variable_index(variable);
    const auto w = cell_weights(r.grid());
    std::vector<double> out(r.n_time());
    for (std::size_t t = 0; t < r.n_time(); ++t) {
        const auto f = r.field(t, v);
        double acc = 0.0;
        for (std::size_t c = 0; c < f.size(); ++c) acc += w[c] * f[c];
        out[t] = acc;
    }
    return out;
}

}  // namespace rollstab
