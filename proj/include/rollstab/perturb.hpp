#pragma once

#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "rollstab/error.hpp"
#include "rollstab/fft.hpp"
#include "rollstab/grid.hpp"
#include "rollstab/rgf.hpp"
#include "rollstab/rollout.hpp"
#include "rollstab/synth.hpp"

namespace rollstab {

/// One grid per variable, in the adapter's variable order.
using FieldSet = std::vector<std::vector<double>>;

class ModelAdapter {
  public:
    virtual ~ModelAdapter() = default;
    virtual const GridSpec& grid() const = 0;
    /// All variables, dynamic and static, in state order.
    virtual const std::vector<std::string>& variables() const = 0;
    virtual const std::vector<std::string>& static_variables() const = 0;
    virtual bool supports_time_shift() const = 0;
    virtual FieldSet step(const FieldSet& state, TimePoint clock) = 0;

    bool is_static(const std::string& v) const {
        const auto& s = static_variables();
        return std::find(s.begin(), s.end(), v) != s.end();
    }
};

namespace detail {
inline void check_state(const FieldSet& state, const std::vector<std::string>& vars, const GridSpec& grid) {
    if (state.size() != vars.size())
        throw DimensionError(fmt::format("state has {} variables, adapter expects {}", state.size(), vars.size()));
    for (std::size_t v = 0; v < state.size(); ++v)
        if (state[v].size() != grid.size())
            throw DimensionError(fmt::format("variable '{}' has {} cells, grid has {}", vars[v], state[v].size(), grid.size()));
}
}  // namespace detail

/// The synthetic generator as a model: dynamic variables follow synth_step, static ones pass through.
class SynthAdapter : public ModelAdapter {
  public:
    explicit SynthAdapter(RegimeConfig cfg) : model_(std::move(cfg)), grid_(model_.grid()) {
        vars_ = model_.config().variables;
        statics_ = model_.config().static_variables;
        vars_.insert(vars_.end(), statics_.begin(), statics_.end());
    }

    const GridSpec& grid() const override { return grid_; }
    const std::vector<std::string>& variables() const override { return vars_; }
    const std::vector<std::string>& static_variables() const override { return statics_; }
    bool supports_time_shift() const override { return true; }

    FieldSet step(const FieldSet& state, TimePoint clock) override {
        detail::check_state(state, vars_, grid_);
        FieldSet next = state;
        for (std::size_t v = 0; v < model_.config().variables.size(); ++v) model_.step(next[v], clock, v);
        return next;
    }

    FieldSet initial_state() const {
        FieldSet s;
        for (std::size_t v = 0; v < model_.config().variables.size(); ++v) s.push_back(model_.initial_state(v));
        for (std::size_t k = 0; k < statics_.size(); ++k) s.push_back(model_.static_field(k));
        return s;
    }

    const SynthModel& model() const { return model_; }

  private:
    SynthModel model_;
    GridSpec grid_;
    std::vector<std::string> vars_, statics_;
};

/// Runs a user command per step: writes state_in.rgf and clock.json into the work directory,
/// runs the command there, and reads state_out.rgf back.
class ExternalProcessAdapter : public ModelAdapter {
  public:
    /// manifest: {"command": ..., "work_dir": ..., "variables": [...], "static_variables": [...], "supports_time_shift": bool}
    ExternalProcessAdapter(const nlohmann::json& manifest, GridSpec grid) : grid_(std::move(grid)) {
        try {
            command_ = manifest.at("command").get<std::string>();
            work_dir_ = manifest.at("work_dir").get<std::string>();
            vars_ = manifest.at("variables").get<std::vector<std::string>>();
            statics_ = manifest.value("static_variables", std::vector<std::string>{});
            time_shift_ = manifest.value("supports_time_shift", false);
        } catch (const nlohmann::json::exception& e) {
            throw InputError(fmt::format("bad adapter manifest: {}", e.what()));
        }
        if (vars_.empty()) throw InputError("adapter manifest lists no variables");
        for (const auto& s : statics_)
            if (std::find(vars_.begin(), vars_.end(), s) == vars_.end())
                throw InputError(fmt::format("static variable '{}' is not in the variable list", s));
        std::filesystem::create_directories(work_dir_);
    }

    const GridSpec& grid() const override { return grid_; }
    const std::vector<std::string>& variables() const override { return vars_; }
    const std::vector<std::string>& static_variables() const override { return statics_; }
    bool supports_time_shift() const override { return time_shift_; }

    FieldSet step(const FieldSet& state, TimePoint clock) override {
        detail::check_state(state, vars_, grid_);
        const std::filesystem::path dir(work_dir_);
        RolloutSeries in(grid_, vars_, clock, kSixHours, 1);
        for (std::size_t v = 0; v < vars_.size(); ++v) {
            auto f = in.field(0, v);
            for (std::size_t c = 0; c < f.size(); ++c) f[c] = static_cast<float>(state[v][c]);
        }
        write_rollout(in, (dir / "state_in.rgf").string());
        {
            std::ofstream cj(dir / "clock.json");
            cj << nlohmann::json{{"clock", format_iso8601(clock)}, {"step", calls_}}.dump() << '\n';
        }
        std::filesystem::remove(dir / "state_out.rgf");
        const auto cmd = fmt::format("cd '{}' && {}", dir.string(), command_);
        const int rc = std::system(cmd.c_str());
        ++calls_;
        if (rc != 0) throw AdapterError(fmt::format("adapter command exited with status {}", rc));
        if (!std::filesystem::exists(dir / "state_out.rgf")) throw AdapterError("adapter produced no state_out.rgf");
        const auto out = read_rollout((dir / "state_out.rgf").string());
        if (!(out.grid() == grid_) || out.variables() != vars_ || out.n_time() != 1)
            throw AdapterError("state_out.rgf does not match the adapter grid and variables");
        FieldSet next(vars_.size());
        for (std::size_t v = 0; v < vars_.size(); ++v) {
            const auto f = out.field(0, v);
            next[v].assign(f.begin(), f.end());
        }
        return next;
    }

  private:
    GridSpec grid_;
    std::string command_, work_dir_;
    std::vector<std::string> vars_, statics_;
    bool time_shift_ = false;
    std::size_t calls_ = 0;
};

// ---- perturbations ----------------------------------------------------------

enum class PerturbKind { WHITE, GRF, PURE_NOISE, IMAGE_INIT };
enum class PerturbTarget { dynamic, static_only, both };

inline PerturbKind parse_perturb_kind(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (s == "white") return PerturbKind::WHITE;
    if (s == "grf") return PerturbKind::GRF;
    if (s == "pure_noise" || s == "pure-noise") return PerturbKind::PURE_NOISE;
    if (s == "image_init" || s == "image-init" || s == "image") return PerturbKind::IMAGE_INIT;
    throw InputError(fmt::format("unknown perturbation kind '{}' (white, grf, pure_noise, image_init)", s));
}

inline PerturbTarget parse_perturb_target(const std::string& s) {
    if (s == "dynamic") return PerturbTarget::dynamic;
    if (s == "static") return PerturbTarget::static_only;
    if (s == "both") return PerturbTarget::both;
    throw InputError(fmt::format("unknown perturbation target '{}' (dynamic, static, both)", s));
}

struct PerturbationSpec {
    PerturbKind kind = PerturbKind::WHITE;
    double k = 1.0;                    // amplitude in units of sigma
    double correlation_length = 10.0;  // pixels, GRF
    PerturbTarget target = PerturbTarget::dynamic;
    std::optional<double> time_shift_days;
    std::uint64_t seed = 0;
    std::map<std::string, std::vector<double>> images;  // IMAGE_INIT, per variable

    void validate() const {
        if (!(k > 0.0)) throw InputError("perturbation amplitude k must be > 0");
        if (!(correlation_length >= 1.0)) throw InputError("correlation length must be >= 1 pixel");
    }
};

struct VariableStats {
    double mean = 0.0;
    double std = 0.0;
};

using StatsMap = std::map<std::string, VariableStats>;

/// Pooled scalar mean and population std over all pixels and timesteps.
inline VariableStats variable_stats(const RolloutSeries& r, const std::string& variable) {
    const auto v = r.variable_index(variable);
    r.require_clean(v);
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t t = 0; t < r.n_time(); ++t)
        for (float x : r.field(t, v)) {
            acc += x;
            ++n;
        }
    const double m = acc / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t t = 0; t < r.n_time(); ++t)
        for (float x : r.field(t, v)) ss += (x - m) * (x - m);
    return {m, std::sqrt(ss / static_cast<double>(n))};
}

inline StatsMap variable_stats(const RolloutSeries& r) {
    StatsMap m;
    for (const auto& v : r.variables()) m[v] = variable_stats(r, v);
    return m;
}

/// Zero-mean Gaussian random field with std `target_std` and Gaussian correlation exp(-r^2 / (2 l^2)), r in pixels.
/// Both axes are treated as periodic during synthesis.
inline std::vector<double> gaussian_random_field(std::size_t rows, std::size_t cols, double length, double target_std,
                                                 std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<std::complex<double>> buf(rows * cols);
    for (auto& z : buf) z = nd(rng);
    const ComplexFft2d fft(rows, cols);
    fft.forward(buf);
    auto freq = [](std::size_t i, std::size_t n) {
        const double f = static_cast<double>(i <= n / 2 ? static_cast<long>(i) : static_cast<long>(i) - static_cast<long>(n));
        return 2.0 * std::numbers::pi * f / static_cast<double>(n);
    };
    for (std::size_t i = 0; i < rows; ++i) {
        const double ky = freq(i, rows);
        for (std::size_t j = 0; j < cols; ++j) {
            const double kx = freq(j, cols);
            buf[i * cols + j] *= std::exp(-(kx * kx + ky * ky) * length * length / 4.0);
        }
    }
    fft.inverse(buf);
    std::vector<double> out(rows * cols);
    double m = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) m += (out[i] = buf[i].real());
    m /= static_cast<double>(out.size());
    double ss = 0.0;
    for (auto& x : out) {
        x -= m;
        ss += x * x;
    }
    const double sd = std::sqrt(ss / static_cast<double>(out.size()));
    if (sd > 0.0)
        for (auto& x : out) x *= target_std / sd;
    return out;
}

inline bool perturbation_targets(PerturbTarget t, bool is_static) {
    switch (t) {
        case PerturbTarget::dynamic: return !is_static;
        case PerturbTarget::static_only: return is_static;
        case PerturbTarget::both: return true;
    }
    return false;
}

inline FieldSet apply_perturbation(const FieldSet& state, const std::vector<std::string>& variables,
                                   const std::vector<std::string>& static_variables, const GridSpec& grid,
                                   const PerturbationSpec& spec, const StatsMap& stats) {
    spec.validate();
    detail::check_state(state, variables, grid);
    FieldSet out = state;
    for (std::size_t v = 0; v < variables.size(); ++v) {
        const auto& name = variables[v];
        const bool is_static = std::find(static_variables.begin(), static_variables.end(), name) != static_variables.end();
        if (!perturbation_targets(spec.target, is_static)) continue;
        const auto st = stats.find(name);
        if (st == stats.end()) throw InputError(fmt::format("no statistics for variable '{}'", name));
        const double mu = st->second.mean, sigma = st->second.std;
        std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                          static_cast<std::uint32_t>(v), 0x7e57u};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> nd(0.0, 1.0);
        auto& f = out[v];
        switch (spec.kind) {
            case PerturbKind::WHITE:
                for (auto& x : f) x += spec.k * sigma * nd(rng);
                break;
            case PerturbKind::GRF: {
                const auto g = gaussian_random_field(grid.n_lat(), grid.n_lon(), spec.correlation_length, spec.k * sigma, rng);
                for (std::size_t c = 0; c < f.size(); ++c) f[c] += g[c];
                break;
            }
            case PerturbKind::PURE_NOISE:
                for (auto& x : f) x = mu + spec.k * sigma * nd(rng);
                break;
            case PerturbKind::IMAGE_INIT: {
                const auto im = spec.images.find(name);
                if (im == spec.images.end()) throw InputError(fmt::format("no image supplied for variable '{}'", name));
                if (im->second.size() != f.size())
                    throw DimensionError(fmt::format("image for '{}' has {} pixels, grid has {}", name, im->second.size(), f.size()));
                const double m = mean(im->second), sd = stddev(im->second);
                for (std::size_t c = 0; c < f.size(); ++c) f[c] = sd > 0.0 ? mu + sigma * (im->second[c] - m) / sd : mu;
                break;
            }
        }
    }
    return out;
}

// ---- comparisons ------------------------------------------------------------

namespace detail {
inline void check_matched(const RolloutSeries& a, const RolloutSeries& b) {
    if (!(a.grid() == b.grid())) throw InputError("rollouts are on different grids");
    if (a.n_time() != b.n_time()) throw InputError(fmt::format("rollout lengths differ ({} vs {})", a.n_time(), b.n_time()));
}
}  // namespace detail

/// Latitude-weighted RMSE between two rollouts at every timestep.
inline std::vector<double> error_trajectory(const RolloutSeries& clean, const RolloutSeries& perturbed, const std::string& variable) {
    detail::check_matched(clean, perturbed);
    const auto va = clean.variable_index(variable), vb = perturbed.variable_index(variable);
    clean.require_clean(va);
    perturbed.require_clean(vb);
    const auto w = cell_weights(clean.grid());
    std::vector<double> out(clean.n_time());
    for (std::size_t t = 0; t < clean.n_time(); ++t) {
        const auto a = clean.field(t, va), b = perturbed.field(t, vb);
        double acc = 0.0;
        for (std::size_t c = 0; c < w.size(); ++c) {
            const double d = static_cast<double>(a[c]) - static_cast<double>(b[c]);
            acc += w[c] * d * d;
        }
        out[t] = std::sqrt(acc);
    }
    return out;
}

struct EnsembleSpread {
    std::vector<double> mean;  // latitude-weighted mean over pixels of the member std
    std::vector<double> max;   // maximum over pixels
};

/// Pixelwise sample std across members at every timestep.
inline EnsembleSpread ensemble_spread(const std::vector<RolloutSeries>& members, const std::string& variable) {
    if (members.size() < 2) throw InputError("ensemble spread needs at least two members");
    for (std::size_t m = 1; m < members.size(); ++m) detail::check_matched(members[0], members[m]);
    std::vector<std::size_t> vi;
    for (const auto& m : members) {
        vi.push_back(m.variable_index(variable));
        m.require_clean(vi.back());
    }
    const auto w = cell_weights(members[0].grid());
    const auto nm = static_cast<double>(members.size());
    EnsembleSpread out;
    for (std::size_t t = 0; t < members[0].n_time(); ++t) {
        double wsum = 0.0, mx = 0.0;
        for (std::size_t c = 0; c < w.size(); ++c) {
            double mu = 0.0;
            for (std::size_t m = 0; m < members.size(); ++m) mu += members[m].field(t, vi[m])[c];
            mu /= nm;
            double ss = 0.0;
            for (std::size_t m = 0; m < members.size(); ++m) {
                const double d = members[m].field(t, vi[m])[c] - mu;
                ss += d * d;
            }
            const double sd = std::sqrt(ss / (nm - 1.0));
            wsum += w[c] * sd;
            mx = std::max(mx, sd);
        }
        out.mean.push_back(wsum);
        out.max.push_back(mx);
    }
    return out;
}

// ---- rollout loop -----------------------------------------------------------

struct RolloutResult {
    RolloutSeries series;
    std::size_t completed_steps = 0;
    std::optional<std::string> error;  // set when the adapter failed part-way
};

/// Feeds the adapter its own output. The perturbation (if any) touches the initial state only.
/// With a time shift the adapter sees clock + shift while output timestamps stay physical.
inline RolloutResult run_rollout(ModelAdapter& adapter, const FieldSet& init, TimePoint start_time, std::size_t n_steps,
                                 std::int64_t step_seconds = kSixHours, const std::optional<PerturbationSpec>& spec = std::nullopt,
                                 const StatsMap& stats = {}) {
    const auto& vars = adapter.variables();
    detail::check_state(init, vars, adapter.grid());
    FieldSet state = init;
    std::chrono::seconds shift{0};
    bool shift_ignored = false;
    if (spec) {
        state = apply_perturbation(init, vars, adapter.static_variables(), adapter.grid(), *spec, stats);
        if (spec->time_shift_days) {
            if (adapter.supports_time_shift())
                shift = std::chrono::seconds{std::llround(*spec->time_shift_days * 86400.0)};
            else
                shift_ignored = true;
        }
    }
    std::vector<float> data;
    data.reserve((n_steps + 1) * vars.size() * adapter.grid().size());
    auto push = [&](const FieldSet& s) {
        for (const auto& f : s)
            for (double x : f) data.push_back(static_cast<float>(x));
    };
    push(state);
    RolloutResult res;
    TimePoint clock = start_time;
    for (std::size_t n = 0; n < n_steps; ++n) {
        try {
            state = adapter.step(state, clock + shift);
            detail::check_state(state, vars, adapter.grid());
        } catch (const Error& e) {
            res.error = fmt::format("adapter failed at step {}: {}", n + 1, e.what());
            break;
        }
        push(state);
        clock += std::chrono::seconds{step_seconds};
        ++res.completed_steps;
    }
    res.series = RolloutSeries(adapter.grid(), vars, start_time, step_seconds, res.completed_steps + 1, std::move(data));
    auto& attrs = res.series.attributes();
    if (shift.count() != 0) attrs["time_shift_days"] = static_cast<double>(shift.count()) / 86400.0;
    if (shift_ignored) attrs["time_shift_ignored"] = true;
    if (res.error) attrs["error"] = *res.error;
    return res;
}

inline FieldSet state_at(const RolloutSeries& r, std::size_t t) {
    FieldSet s(r.n_vars());
    for (std::size_t v = 0; v < r.n_vars(); ++v) {
        const auto f = r.field(t, v);
        s[v].assign(f.begin(), f.end());
    }
    return s;
}

}  // namespace rollstab
