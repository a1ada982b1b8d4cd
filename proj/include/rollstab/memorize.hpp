#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "rollstab/error.hpp"
#include "rollstab/grid.hpp"
#include "rollstab/parallel.hpp"
#include "rollstab/perturb.hpp"
#include "rollstab/rollout.hpp"
#include "rollstab/time.hpp"

namespace rollstab {

inline constexpr int kMemorizeWindowDays = 10;
inline constexpr double kMemorizedRatio = 0.5;

struct NeighborResult {
    TimePoint time{};
    double ratio = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
    std::size_t first = 0;  // snapshot ids
    std::size_t second = 0;
    std::size_t candidates = 0;

    bool memorized() const { return ratio <= kMemorizedRatio; }
};

/// Training snapshots, standardized per variable and scaled by sqrt(cell weight), so the
/// plain L2 distance between stored vectors is the latitude-weighted distance.
class NeighborIndex {
  public:
    NeighborIndex(GridSpec grid, std::vector<std::string> variables, StatsMap standardization)
        : grid_(std::move(grid)), vars_(std::move(variables)), stats_(std::move(standardization)) {
        if (vars_.empty()) throw InputError("neighbor index needs at least one variable");
        for (const auto& v : vars_) {
            const auto it = stats_.find(v);
            if (it == stats_.end()) throw InputError(fmt::format("no standardization for '{}'", v));
            if (!(it->second.std > 0.0)) throw InputError(fmt::format("variable '{}' has zero spread in the training pool", v));
        }
        const auto w = cell_weights(grid_);
        sqrt_w_.resize(w.size());
        for (std::size_t c = 0; c < w.size(); ++c) sqrt_w_[c] = std::sqrt(w[c]);
    }

    /// Index every `stride`-th slice of a training rollout; standardization is pooled over the whole rollout.
    static NeighborIndex from_rollout(const RolloutSeries& training, std::vector<std::string> variables, std::size_t stride = 1) {
        if (stride == 0) throw InputError("stride must be positive");
        StatsMap stats;
        for (const auto& v : variables) stats[v] = variable_stats(training, v);
        NeighborIndex idx(training.grid(), variables, std::move(stats));
        std::vector<std::size_t> vi;
        for (const auto& v : variables) vi.push_back(training.variable_index(v));
        for (std::size_t t = 0; t < training.n_time(); t += stride) idx.add_prepared(training.time_at(t), idx.prepare(training, t, vi));
        return idx;
    }

    const GridSpec& grid() const { return grid_; }
    const std::vector<std::string>& variables() const { return vars_; }
    const StatsMap& standardization() const { return stats_; }
    std::size_t size() const { return times_.size(); }
    std::size_t dimension() const { return vars_.size() * grid_.size(); }
    TimePoint time_of(std::size_t id) const { return times_.at(id); }

    /// Raw fields (one per index variable, index order) to the stored representation.
    template <typename Fields>
    std::vector<double> prepare(const Fields& fields) const {
        if (fields.size() != vars_.size()) throw DimensionError(fmt::format("expected {} variables, got {}", vars_.size(), fields.size()));
        std::vector<double> out;
        out.reserve(dimension());
        for (std::size_t v = 0; v < vars_.size(); ++v) {
            const auto& f = fields[v];
            if (f.size() != grid_.size()) throw DimensionError("snapshot does not match the index grid");
            const auto& s = stats_.at(vars_[v]);
            for (std::size_t c = 0; c < f.size(); ++c) out.push_back(sqrt_w_[c] * (static_cast<double>(f[c]) - s.mean) / s.std);
        }
        return out;
    }

    std::vector<double> prepare(const RolloutSeries& r, std::size_t t, const std::vector<std::size_t>& var_idx) const {
        std::vector<std::span<const float>> fields;
        for (auto v : var_idx) fields.push_back(r.field(t, v));
        return prepare(fields);
    }

    void add(TimePoint t, const FieldSet& fields) { add_prepared(t, prepare(fields)); }

    void add_prepared(TimePoint t, std::vector<double> vec) {
        if (vec.size() != dimension()) throw DimensionError("prepared snapshot has the wrong length");
        data_.insert(data_.end(), vec.begin(), vec.end());
        times_.push_back(t);
        buckets_.push_back(day_bucket(t));
    }

    /// First/second nearest neighbours among snapshots within +-10 calendar days (circular) of `t`.
    NeighborResult query_prepared(std::span<const double> vec, TimePoint t) const {
        if (vec.size() != dimension()) throw DimensionError("query has the wrong length");
        const int b = day_bucket(t);
        NeighborResult res;
        res.time = t;
        double best = std::numeric_limits<double>::infinity(), next = best;
        const std::size_t dim = dimension();
        for (std::size_t i = 0; i < times_.size(); ++i) {
            if (circular_bucket_distance(b, buckets_[i]) > kMemorizeWindowDays) continue;
            ++res.candidates;
            const double* p = data_.data() + i * dim;
            double acc = 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
                const double d = vec[k] - p[k];
                acc += d * d;
            }
            if (acc < best) {
                next = best;
                res.second = res.first;
                best = acc;
                res.first = i;
            } else if (acc < next) {
                next = acc;
                res.second = i;
            }
        }
        if (res.candidates < 2)
            throw PreconditionError(fmt::format("only {} training snapshot(s) within {} days of {}", res.candidates,
                                                kMemorizeWindowDays, format_iso8601(t)));
        res.d1 = std::sqrt(best);
        res.d2 = std::sqrt(next);
        res.ratio = res.d1 == 0.0 ? 0.0 : res.d1 / res.d2;
        return res;
    }

    template <typename Fields>
    NeighborResult distance_ratio(const Fields& fields, TimePoint t) const {
        const auto v = prepare(fields);
        return query_prepared(v, t);
    }

  private:
    GridSpec grid_;
    std::vector<std::string> vars_;
    StatsMap stats_;
    std::vector<double> sqrt_w_;
    std::vector<double> data_;
    std::vector<TimePoint> times_;
    std::vector<int> buckets_;
};

/// Distance ratio of every slice of a rollout against the index.
inline std::vector<NeighborResult> memorization_series(const RolloutSeries& rollout, const NeighborIndex& index) {
    if (!(rollout.grid() == index.grid())) throw InputError("rollout grid differs from the index grid");
    std::vector<std::size_t> vi;
    for (const auto& v : index.variables()) {
        vi.push_back(rollout.variable_index(v));
        rollout.require_clean(vi.back());
    }
    std::vector<NeighborResult> out(rollout.n_time());
    parallel_for(rollout.n_time(), [&](std::size_t t) {
        const auto v = index.prepare(rollout, t, vi);
        out[t] = index.query_prepared(v, rollout.time_at(t));
    });
    return out;
}

}  // namespace rollstab
