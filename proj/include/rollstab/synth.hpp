#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "rollstab/error.hpp"
#include "rollstab/fft.hpp"
#include "rollstab/grid.hpp"
#include "rollstab/rollout.hpp"
#include "rollstab/climatology.hpp"
#include "rollstab/spectra.hpp"
#include "rollstab/time.hpp"

namespace rollstab {

enum class Regime { STABLE, BLOWUP, DRIFT, SHARPEN, BLUR };

inline std::string regime_name(Regime r) {
    switch (r) {
        case Regime::STABLE: return "STABLE";
        case Regime::BLOWUP: return "BLOWUP";
        case Regime::DRIFT: return "DRIFT";
        case Regime::SHARPEN: return "SHARPEN";
        case Regime::BLUR: return "BLUR";
    }
    return "?";
}

inline Regime parse_regime(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    for (Regime r : {Regime::STABLE, Regime::BLOWUP, Regime::DRIFT, Regime::SHARPEN, Regime::BLUR})
        if (regime_name(r) == s) return r;
    throw InputError(fmt::format("unknown regime '{}' (STABLE, BLOWUP, DRIFT, SHARPEN, BLUR)", s));
}

inline Band parse_band(const std::string& s) {
    if (s == "large") return Band::large;
    if (s == "medium") return Band::medium;
    if (s == "small") return Band::small;
    throw InputError(fmt::format("unknown band '{}' (large, medium, small)", s));
}

/// Reference period whose per-year amplitude jitter defines the seasonal envelope (used for DRIFT labels).
struct EnvelopeReference {
    int first_year = 1990;
    int last_year = 1999;
    double jitter = 0.1;
    std::uint64_t jitter_seed = 0;
};

struct RegimeConfig {
    Regime regime = Regime::STABLE;
    std::size_t n_lat = 18;
    std::size_t n_lon = 360;
    double g_large = 0.75;
    double g_medium = 0.9;  // also applied to the 1000-5000 km gap
    double g_small = 0.9;
    double amplitude = 0.25;  // seasonal forcing A
    double tau_days = 100.0;  // DRIFT
    double onset_days = 150.0;  // BLOWUP t0
    double delta = 0.05;        // BLOWUP rate; SHARPEN bound on g_small - 1
    Band growing_band = Band::medium;
    double noise_large = 0.01;
    double noise_medium = 1e-4;
    double noise_small = 1.0;
    double cap = 0.0;  // |amplitude| clamp, 0 = none
    double year_jitter = 0.0;  // per-calendar-year amplitude factor 1 + U(-j, j)
    std::uint64_t jitter_seed = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> variables{"t2m"};
    std::vector<std::string> static_variables;
    TimePoint start_time = parse_iso8601("2021-01-01");
    EnvelopeReference reference;

    static RegimeConfig preset(Regime r) {
        RegimeConfig c;
        c.regime = r;
        switch (r) {
            case Regime::STABLE:
            case Regime::DRIFT: break;
            case Regime::BLOWUP: c.cap = 1e30; break;
            case Regime::BLUR: c.g_small = 0.8; break;
            case Regime::SHARPEN:
                c.g_large = 1.0;
                c.g_medium = 1.0;
                c.g_small = 1.05;
                c.cap = 4.0;
                break;
        }
        return c;
    }

    GridSpec grid() const { return GridSpec::centred(n_lat, n_lon); }

    double gain(Band b) const {
        switch (b) {
            case Band::large: return g_large;
            case Band::small: return g_small;
            default: return g_medium;
        }
    }
    double noise(Band b) const {
        switch (b) {
            case Band::large: return noise_large;
            case Band::small: return noise_small;
            default: return noise_medium;
        }
    }

    void validate() const {
        auto fail = [&](const std::string& why) { throw InputError(fmt::format("invalid {} config: {}", regime_name(regime), why)); };
        if (n_lat < 1 || n_lon < 4) fail("grid needs n_lat >= 1 and n_lon >= 4");
        for (double g : {g_large, g_medium, g_small})
            if (!(g >= 0.0) || !std::isfinite(g)) fail("gains must be finite and non-negative");
        for (double s : {noise_large, noise_medium, noise_small})
            if (!(s >= 0.0) || !std::isfinite(s)) fail("noise std must be finite and non-negative");
        if (!(amplitude >= 0.0)) fail("seasonal amplitude must be non-negative");
        if (!(cap >= 0.0)) fail("cap must be non-negative");
        if (!(year_jitter >= 0.0 && year_jitter < 1.0)) fail("year jitter must be in [0, 1)");
        if (variables.empty()) fail("no variables");
        const bool sub_unit = g_large <= 1.0 && g_medium <= 1.0 && g_small <= 1.0;
        switch (regime) {
            case Regime::STABLE:
            case Regime::BLUR:
                if (!sub_unit) fail("all gains must be <= 1");
                break;
            case Regime::BLOWUP:
                if (!sub_unit) fail("baseline gains must be <= 1");
                if (!(delta > 0.0)) fail("delta must be > 0");
                if (!(onset_days >= 0.0)) fail("onset must be >= 0");
                if (growing_band == Band::gap) fail("growing band must be large, medium or small");
                break;
            case Regime::DRIFT:
                if (!sub_unit) fail("all gains must be <= 1");
                if (!(tau_days > 0.0)) fail("tau must be > 0");
                break;
            case Regime::SHARPEN:
                if (!(g_small > 1.0 && g_small <= 1.0 + delta + 1e-12)) fail("g_small must lie in (1, 1 + delta]");
                if (!(cap > 0.0)) fail("SHARPEN needs a positive cap");
                break;
        }
    }
};

inline nlohmann::json to_json(const RegimeConfig& c) {
    return {{"regime", regime_name(c.regime)},
            {"n_lat", c.n_lat},
            {"n_lon", c.n_lon},
            {"g_large", c.g_large},
            {"g_medium", c.g_medium},
            {"g_small", c.g_small},
            {"amplitude", c.amplitude},
            {"tau_days", c.tau_days},
            {"onset_days", c.onset_days},
            {"delta", c.delta},
            {"growing_band", std::string(band_name(c.growing_band))},
            {"noise", {c.noise_large, c.noise_medium, c.noise_small}},
            {"cap", c.cap},
            {"year_jitter", c.year_jitter},
            {"jitter_seed", c.jitter_seed},
            {"seed", c.seed},
            {"variables", c.variables},
            {"static_variables", c.static_variables},
            {"start_time", format_iso8601(c.start_time)},
            {"reference",
             {{"first_year", c.reference.first_year},
              {"last_year", c.reference.last_year},
              {"jitter", c.reference.jitter},
              {"jitter_seed", c.reference.jitter_seed}}}};
}

/// Preset for the named regime, then any fields present in `j` override it.
inline RegimeConfig regime_from_json(const nlohmann::json& j) {
    try {
        auto c = RegimeConfig::preset(parse_regime(j.value("regime", std::string("STABLE"))));
        c.n_lat = j.value("n_lat", c.n_lat);
        c.n_lon = j.value("n_lon", c.n_lon);
        c.g_large = j.value("g_large", c.g_large);
        c.g_medium = j.value("g_medium", c.g_medium);
        c.g_small = j.value("g_small", c.g_small);
        c.amplitude = j.value("amplitude", c.amplitude);
        c.tau_days = j.value("tau_days", c.tau_days);
        c.onset_days = j.value("onset_days", c.onset_days);
        c.delta = j.value("delta", c.delta);
        if (j.contains("growing_band")) c.growing_band = parse_band(j.at("growing_band").get<std::string>());
        if (j.contains("noise")) {
            const auto n = j.at("noise").get<std::vector<double>>();
            if (n.size() != 3) throw InputError("noise must list [large, medium, small]");
            c.noise_large = n[0];
            c.noise_medium = n[1];
            c.noise_small = n[2];
        }
        c.cap = j.value("cap", c.cap);
        c.year_jitter = j.value("year_jitter", c.year_jitter);
        c.jitter_seed = j.value("jitter_seed", c.jitter_seed);
        c.seed = j.value("seed", c.seed);
        c.variables = j.value("variables", c.variables);
        c.static_variables = j.value("static_variables", c.static_variables);
        if (j.contains("start_time")) c.start_time = parse_iso8601(j.at("start_time").get<std::string>());
        if (j.contains("reference")) {
            const auto& r = j.at("reference");
            c.reference.first_year = r.value("first_year", c.reference.first_year);
            c.reference.last_year = r.value("last_year", c.reference.last_year);
            c.reference.jitter = r.value("jitter", c.reference.jitter);
            c.reference.jitter_seed = r.value("jitter_seed", c.reference.jitter_seed);
        }
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(fmt::format("bad synth config: {}", e.what()));
    }
}

/// Amplitude factor 1 + U(-jitter, jitter) for one calendar year; exactly 1 without jitter.
inline double year_amplitude_factor(double jitter, std::uint64_t jitter_seed, int year) {
    if (jitter == 0.0) return 1.0;
    std::seed_seq seq{static_cast<std::uint32_t>(jitter_seed), static_cast<std::uint32_t>(jitter_seed >> 32),
                      static_cast<std::uint32_t>(year + 100000), 0x5eA5u};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> u(-jitter, jitter);
    return 1.0 + u(rng);
}

/// STABLE config generating the multi-year reference whose envelope a DRIFT run is judged against.
inline RegimeConfig envelope_reference_config(const RegimeConfig& c, std::uint64_t seed) {
    auto r = RegimeConfig::preset(Regime::STABLE);
    r.n_lat = c.n_lat;
    r.n_lon = c.n_lon;
    r.amplitude = c.amplitude;
    r.noise_large = c.noise_large;
    r.noise_medium = c.noise_medium;
    r.noise_small = c.noise_small;
    r.variables = c.variables;
    r.year_jitter = c.reference.jitter;
    r.jitter_seed = c.reference.jitter_seed;
    r.reference = c.reference;
    r.seed = seed;
    r.start_time = parse_iso8601(fmt::format("{}-01-01", c.reference.first_year));
    return r;
}

/// Linear spectral system stepping one or more independent 2-D fields.
class SynthModel {
  public:
    explicit SynthModel(RegimeConfig cfg) : cfg_(std::move(cfg)), grid_(cfg_.grid()), fft_(RealFft::of_size(cfg_.n_lon)) {
        cfg_.validate();
        const auto bands = band_table(grid_);
        const std::size_t nk = fft_.n_coeffs();
        gain_.resize(nk);
        grow_.resize(nk);
        noise_.resize(nk);
        for (std::size_t k = 0; k < nk; ++k) {
            gain_[k] = cfg_.gain(bands[k]);
            noise_[k] = cfg_.noise(bands[k]);
            grow_[k] = bands[k] == cfg_.growing_band;
        }
        pattern_.resize(grid_.size());
        for (std::size_t i = 0; i < grid_.n_lat(); ++i)
            for (std::size_t j = 0; j < grid_.n_lon(); ++j)
                pattern_[i * grid_.n_lon() + j] = std::max(0.0, std::cos(deg2rad(grid_.lats()[i]))) * std::cos(deg2rad(grid_.lons()[j]));
    }

    const RegimeConfig& config() const { return cfg_; }
    const GridSpec& grid() const { return grid_; }

    double elapsed_days(TimePoint clock) const { return static_cast<double>((clock - cfg_.start_time).count()) / 86400.0; }

    /// A(t) including DRIFT decay and the calendar-year jitter.
    double forcing_amplitude(TimePoint clock) const {
        double a = cfg_.amplitude * year_amplitude_factor(cfg_.year_jitter, cfg_.jitter_seed, calendar_year(clock));
        if (cfg_.regime == Regime::DRIFT) a *= std::exp(-elapsed_days(clock) / cfg_.tau_days);
        return a;
    }

    double seasonal_phase(TimePoint clock) const {
        return std::sin(2.0 * std::numbers::pi * fractional_day_of_year(clock) / 365.25);
    }

    /// One step of variable `var` in place: X' = irfft(G rfft(X) + shaped noise) + S(clock), then the clamp.
    void step(std::span<double> x, TimePoint clock, std::size_t var = 0) const {
        check_size(x.size());
        const std::size_t n = cfg_.n_lon, nk = fft_.n_coeffs();
        const bool growing = cfg_.regime == Regime::BLOWUP && elapsed_days(clock) >= cfg_.onset_days;
        auto rng = noise_rng(clock, var);
        std::normal_distribution<double> nd(0.0, 1.0);
        std::vector<double> white(n);
        std::vector<std::complex<double>> c(nk), w(nk);
        const double s = forcing_amplitude(clock) * seasonal_phase(clock);
        for (std::size_t i = 0; i < cfg_.n_lat; ++i) {
            auto row = x.subspan(i * n, n);
            for (auto& v : white) v = nd(rng);
            fft_.forward(row, c);
            fft_.forward(white, w);
            for (std::size_t k = 0; k < nk; ++k) {
                const double g = growing && grow_[k] ? 1.0 + cfg_.delta : gain_[k];
                c[k] = g * c[k] + noise_[k] * w[k];
            }
            fft_.inverse(c, row);
            for (std::size_t j = 0; j < n; ++j) {
                double v = row[j] / static_cast<double>(n) + s * pattern_[i * n + j];
                if (cfg_.cap > 0.0) v = std::clamp(v, -cfg_.cap, cfg_.cap);
                row[j] = v;
            }
        }
    }

    /// Stationary draw under the STABLE reference gains plus the quasi-static seasonal response.
    std::vector<double> initial_state(std::size_t var = 0) const {
        const auto ref = RegimeConfig::preset(Regime::STABLE);
        const auto bands = band_table(grid_);
        const std::size_t n = cfg_.n_lon, nk = fft_.n_coeffs();
        std::vector<double> sd(nk);
        for (std::size_t k = 0; k < nk; ++k) {
            const double g = ref.gain(bands[k]);
            sd[k] = cfg_.noise(bands[k]) / std::sqrt(1.0 - g * g);
        }
        std::seed_seq seq{static_cast<std::uint32_t>(cfg_.seed), static_cast<std::uint32_t>(cfg_.seed >> 32),
                          static_cast<std::uint32_t>(var), 0x1417u};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> nd(0.0, 1.0);
        const double s = forcing_amplitude(cfg_.start_time) / (1.0 - ref.g_large) * seasonal_phase(cfg_.start_time);
        std::vector<double> x(grid_.size());
        std::vector<double> white(n);
        std::vector<std::complex<double>> w(nk);
        for (std::size_t i = 0; i < cfg_.n_lat; ++i) {
            auto row = std::span<double>(x).subspan(i * n, n);
            for (auto& v : white) v = nd(rng);
            fft_.forward(white, w);
            for (std::size_t k = 0; k < nk; ++k) w[k] *= sd[k];
            fft_.inverse(w, row);
            for (std::size_t j = 0; j < n; ++j) row[j] = row[j] / static_cast<double>(n) + s * pattern_[i * n + j];
        }
        return x;
    }

    /// Fixed field for a static variable (held constant by the step).
    std::vector<double> static_field(std::size_t index) const {
        std::vector<double> x(grid_.size());
        for (std::size_t i = 0; i < grid_.n_lat(); ++i)
            for (std::size_t j = 0; j < grid_.n_lon(); ++j)
                x[i * grid_.n_lon() + j] = std::sin(deg2rad(grid_.lats()[i]) * static_cast<double>(index + 2)) +
                                           0.5 * std::cos(deg2rad(grid_.lons()[j]) * 3.0);
        return x;
    }

  private:
    void check_size(std::size_t n) const {
        if (n != grid_.size()) throw DimensionError(fmt::format("state has {} cells, grid has {}", n, grid_.size()));
    }

    std::mt19937_64 noise_rng(TimePoint clock, std::size_t var) const {
        const auto c = static_cast<std::uint64_t>(clock.time_since_epoch().count());
        std::seed_seq seq{static_cast<std::uint32_t>(cfg_.seed), static_cast<std::uint32_t>(cfg_.seed >> 32),
                          static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32), static_cast<std::uint32_t>(var)};
        return std::mt19937_64(seq);
    }

    RegimeConfig cfg_;
    GridSpec grid_;
    const RealFft& fft_;
    std::vector<double> gain_, noise_;
    std::vector<bool> grow_;
    std::vector<double> pattern_;
};

/// Runs the generator and hands every slice (initial state at index 0) to `visit(index, time, fields)`,
/// `fields` holding one grid per variable (dynamic then static). Nothing is stored.
inline void simulate(const RegimeConfig& cfg, std::size_t n_steps, std::int64_t step_seconds,
                     const std::function<void(std::size_t, TimePoint, const std::vector<std::vector<double>>&)>& visit) {
    if (step_seconds <= 0) throw InputError("step_seconds must be positive");
    const SynthModel model(cfg);
    std::vector<std::vector<double>> fields;
    for (std::size_t v = 0; v < cfg.variables.size(); ++v) fields.push_back(model.initial_state(v));
    for (std::size_t s = 0; s < cfg.static_variables.size(); ++s) fields.push_back(model.static_field(s));
    TimePoint clock = cfg.start_time;
    visit(0, clock, fields);
    for (std::size_t n = 1; n <= n_steps; ++n) {
        for (std::size_t v = 0; v < cfg.variables.size(); ++v) model.step(fields[v], clock, v);
        clock += std::chrono::seconds{step_seconds};
        visit(n, clock, fields);
    }
}

struct GroundTruthLabels {
    Regime regime = Regime::STABLE;
    std::optional<double> blowup_day;
    double emergence_days = 0.0;  // BLOWUP: analytic time from onset to x10 above the noise floor
    std::optional<double> seasonality_loss_day;
    int small_scale_direction = 0;  // -1 blur, +1 sharpen
    std::optional<double> ratio_vs_self;
};

namespace detail {
// Share of a white field's variance carried by the wavenumbers of each band (gap grouped with medium).
inline std::array<double, 3> band_variance_shares(const GridSpec& g) {
    const auto bands = band_table(g);
    const std::size_t n = g.n_lon();
    std::array<double, 3> f{};
    for (std::size_t k = 0; k < bands.size(); ++k) {
        const double m = (k == 0 || (n % 2 == 0 && k == n / 2)) ? 1.0 : 2.0;
        const std::size_t b = bands[k] == Band::large ? 0 : (bands[k] == Band::small ? 2 : 1);
        f[b] += m / static_cast<double>(n);
    }
    return f;
}
inline std::size_t band_slot(Band b) { return b == Band::large ? 0 : (b == Band::small ? 2 : 1); }
}  // namespace detail

/// BLOWUP: steps for the growing band to rise from its stationary level a0 to 10x the other bands' noise floor.
inline double blowup_emergence_days(const RegimeConfig& c, std::int64_t step_seconds = kSixHours) {
    const auto f = detail::band_variance_shares(c.grid());
    const std::array<double, 3> g{c.g_large, c.g_medium, c.g_small};
    const std::array<double, 3> s{c.noise_large, c.noise_medium, c.noise_small};
    const std::size_t gb = detail::band_slot(c.growing_band);
    double floor2 = 0.0;
    for (std::size_t b = 0; b < 3; ++b)
        if (b != gb) floor2 += s[b] * s[b] * f[b] / (1.0 - g[b] * g[b]);
    const double grow = (1.0 + c.delta) * (1.0 + c.delta) - 1.0;
    const double a0 = std::sqrt(s[gb] * s[gb] * f[gb] / (1.0 - g[gb] * g[gb]) + s[gb] * s[gb] * f[gb] / grow);
    if (a0 <= 0.0 || floor2 <= 0.0) throw InputError("BLOWUP label needs nonzero noise in the growing and other bands");
    const double steps = std::max(0.0, std::ceil(std::log(10.0 * std::sqrt(floor2) / a0) / std::log(1.0 + c.delta)));
    return steps * static_cast<double>(step_seconds) / 86400.0;
}

/// DRIFT: first whole day on which the decayed seasonal amplitude leaves multiplier x the reference jitter range.
inline std::optional<double> drift_loss_day(const RegimeConfig& c, double multiplier, double horizon_days,
                                            std::int64_t step_seconds = kSixHours) {
    std::vector<double> j;
    for (int y = c.reference.first_year; y <= c.reference.last_year; ++y)
        j.push_back(year_amplitude_factor(c.reference.jitter, c.reference.jitter_seed, y) - 1.0);
    if (j.size() < 2) throw InputError("envelope reference needs at least two years");
    double jbar = 0.0;
    for (double x : j) jbar += x;
    jbar /= static_cast<double>(j.size());
    const double dj = *std::max_element(j.begin(), j.end()) - *std::min_element(j.begin(), j.end());
    const double step_days = static_cast<double>(step_seconds) / 86400.0;
    const auto spd = static_cast<std::size_t>(std::llround(1.0 / step_days));
    // Lagged response of the large-band filter to a decaying forcing, relative to a steady one.
    const double lag = (1.0 - c.g_large) / (1.0 - c.g_large * std::exp(step_days / c.tau_days));
    for (std::size_t d = 0; static_cast<double>(d) <= horizon_days; ++d) {
        double env = 0.0;
        for (std::size_t s = 0; s < spd; ++s) env += std::exp(-(static_cast<double>(d) + static_cast<double>(s) * step_days) / c.tau_days);
        env /= static_cast<double>(spd);
        if (1.0 + jbar - lag * env > multiplier * dj) return static_cast<double>(d);
    }
    return std::nullopt;
}

inline GroundTruthLabels compute_labels(const RegimeConfig& c, double horizon_days, std::int64_t step_seconds = kSixHours,
                                        double multiplier = 2.0) {
    GroundTruthLabels l;
    l.regime = c.regime;
    const auto ref = RegimeConfig::preset(Regime::STABLE);
    switch (c.regime) {
        case Regime::BLOWUP:
            l.emergence_days = blowup_emergence_days(c, step_seconds);
            if (c.onset_days + l.emergence_days <= horizon_days) l.blowup_day = c.onset_days + l.emergence_days;
            break;
        case Regime::DRIFT: l.seasonality_loss_day = drift_loss_day(c, multiplier, horizon_days, step_seconds); break;
        case Regime::BLUR:
            l.small_scale_direction = c.g_small < ref.g_small ? -1 : 0;
            l.ratio_vs_self = std::sqrt((1.0 - ref.g_small * ref.g_small) / (1.0 - c.g_small * c.g_small));
            break;
        case Regime::SHARPEN: l.small_scale_direction = 1; break;
        case Regime::STABLE: l.ratio_vs_self = 1.0; break;
    }
    return l;
}

inline nlohmann::json to_json(const GroundTruthLabels& l) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    return {{"regime", regime_name(l.regime)},
            {"blowup_day", opt(l.blowup_day)},
            {"emergence_days", l.emergence_days},
            {"seasonality_loss_day", opt(l.seasonality_loss_day)},
            {"small_scale_direction", l.small_scale_direction},
            {"ratio_vs_self", opt(l.ratio_vs_self)}};
}

struct SynthRun {
    RolloutSeries series;
    GroundTruthLabels labels;
};

inline std::size_t horizon_steps(double horizon_days, std::int64_t step_seconds) {
    if (step_seconds <= 0 || 86400 % step_seconds != 0) throw InputError("step_seconds must divide a day");
    return static_cast<std::size_t>(std::llround(horizon_days * 86400.0 / static_cast<double>(step_seconds)));
}

/// Slice 0 is the initial state; slices 1..N follow at `step_seconds`.
inline SynthRun generate(const RegimeConfig& cfg, double horizon_days, std::int64_t step_seconds = kSixHours) {
    cfg.validate();
    if (!(horizon_days >= 60.0)) throw InputError(fmt::format("horizon of {} days is below the 60-day minimum", horizon_days));
    if (cfg.regime == Regime::DRIFT && !(cfg.tau_days < horizon_days)) throw InputError("DRIFT needs tau below the horizon");
    const auto n_steps = horizon_steps(horizon_days, step_seconds);
    auto vars = cfg.variables;
    vars.insert(vars.end(), cfg.static_variables.begin(), cfg.static_variables.end());
    const std::size_t nv = vars.size();
    RolloutSeries r(cfg.grid(), vars, cfg.start_time, step_seconds, n_steps + 1);
    simulate(cfg, n_steps, step_seconds, [&](std::size_t t, TimePoint, const std::vector<std::vector<double>>& fields) {
        for (std::size_t v = 0; v < nv; ++v) {
            auto out = r.field(t, v);
            for (std::size_t c = 0; c < out.size(); ++c) out[c] = static_cast<float>(fields[v][c]);
        }
    });
    r.attributes()["synth"] = to_json(cfg);
    r.attributes()["units"] = "arbitrary";
    return {std::move(r), compute_labels(cfg, horizon_days, step_seconds)};
}

/// Daily band average of one variable straight from the generator (fields are not kept).
inline DailySeries synth_daily_band(const RegimeConfig& cfg, double horizon_days, Band band, std::size_t var = 0,
                                    std::int64_t step_seconds = kSixHours) {
    const auto n_steps = horizon_steps(horizon_days, step_seconds);
    const auto grid = cfg.grid();
    DailySeries out;
    double acc = 0.0;
    std::size_t count = 0;
    auto flush = [&] {
        if (count) out.values.push_back(acc / static_cast<double>(count));
        acc = 0.0;
        count = 0;
    };
    simulate(cfg, n_steps, step_seconds, [&](std::size_t, TimePoint t, const std::vector<std::vector<double>>& fields) {
        const TimePoint day{utc_day(t)};
        if (out.days.empty() || out.days.back() != day) {
            flush();
            out.days.push_back(day);
        }
        acc += band_average(zonal_spectrum(fields[var], grid), grid, band);
        ++count;
    });
    flush();
    return out;
}

}  // namespace rollstab
