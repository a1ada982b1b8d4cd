// rollstab: stability diagnostics for long autoregressive rollouts.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "../vendor/CLI11.hpp"
#include "rollstab/rollstab.hpp"

using namespace rollstab;
using nlohmann::json;

namespace {

/// JSON config: top-level keys set top-level flags, objects named after a subcommand set its flags.
class JsonConfig : public CLI::Config {
  public:
    std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
        json j = json::object();
        for (const CLI::Option* opt : app->get_options({})) {
            if (!opt->get_configurable() || opt->get_lnames().empty()) continue;
            const auto& name = opt->get_lnames().front();
            if (opt->count() > 0)
                j[name] = opt->as<std::string>();
            else if (default_also && !opt->get_default_str().empty())
                j[name] = opt->get_default_str();
        }
        for (const CLI::App* sub : app->get_subcommands({})) j[sub->get_name()] = json::parse(to_config(sub, default_also, false, ""));
        return j.dump(2);
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw CLI::ConversionError("config", e.what());
        }
        std::vector<CLI::ConfigItem> items;
        walk(j, {}, items);
        return items;
    }

  private:
    static std::string scalar(const json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        return v.dump();
    }

    static void walk(const json& j, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& items) {
        if (!j.is_object()) throw CLI::ConversionError("config", "config file must hold a JSON object");
        for (const auto& [key, v] : j.items()) {
            if (v.is_object()) {
                auto p = parents;
                p.push_back(key);
                walk(v, p, items);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            std::replace(item.name.begin(), item.name.end(), '_', '-');
            if (v.is_array())
                for (const auto& x : v) item.inputs.push_back(scalar(x));
            else
                item.inputs.push_back(scalar(v));
            items.push_back(std::move(item));
        }
    }
};

// ---- output helpers -----------------------------------------------------------

RunManifest manifest_for(const CLI::App& sub, std::vector<std::string> inputs, std::optional<std::uint64_t> seed = {}) {
    RunManifest m;
    m.subcommand = sub.get_name();
    m.inputs = std::move(inputs);
    if (const auto* cfg = sub.get_parent()->get_option_no_throw("--config"); cfg && cfg->count() > 0) m.inputs.push_back(cfg->as<std::string>());
    m.seed = seed;
    for (const CLI::Option* opt : sub.get_options({})) {
        if (opt->get_lnames().empty() || opt->get_lnames().front() == "help") continue;
        const auto& name = opt->get_lnames().front();
        if (opt->count() > 0) {
            const auto& r = opt->results();
            m.parameters[name] = r.size() == 1 ? json(r.front()) : json(r);
        } else if (!opt->get_default_str().empty()) {
            m.parameters[name] = opt->get_default_str();
        }
    }
    return m;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError(fmt::format("cannot write '{}'", path));
    out << text;
}

void write_json(const std::string& path, json body, const RunManifest& m) {
    body["manifest"] = m.to_json();
    write_text(path, body.dump(2) + "\n");
}

std::string csv_header(const RunManifest& m, const std::string& units) {
    return fmt::format("# manifest: {}\n# units: {}\n", m.to_json().dump(), units);
}

std::string num(double x) { return fmt::format("{:.9g}", x); }

json opt_day(const std::optional<double>& d, double horizon) {
    if (d) return *d;
    return {{"censored", true}, {"horizon", horizon}};
}

double horizon_of(const RolloutSeries& r) {
    return static_cast<double>(r.n_time() - 1) * static_cast<double>(r.step_seconds()) / 86400.0;
}

std::vector<std::string> pick_variables(const RolloutSeries& r, const std::vector<std::string>& wanted) {
    if (wanted.empty()) return r.variables();
    for (const auto& v : wanted) r.variable_index(v);
    return wanted;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError(fmt::format("cannot open '{}'", path));
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InputError(fmt::format("bad JSON in '{}': {}", path, e.what()));
    }
}

ReferenceMatch parse_match(const std::string& s) {
    if (s == "dates") return ReferenceMatch::exact_dates;
    if (s == "day-of-year") return ReferenceMatch::day_of_year;
    throw InputError(fmt::format("unknown match mode '{}' (auto, dates, day-of-year)", s));
}

SmallScaleResult small_scale_auto(const DailySeries& p, const DailySeries& r, std::optional<double> blowup, const std::string& match) {
    if (match != "auto") return small_scale_ratios(p, r, blowup, parse_match(match));
    try {
        return small_scale_ratios(p, r, blowup, ReferenceMatch::exact_dates);
    } catch (const InputError&) {
        return small_scale_ratios(p, r, blowup, ReferenceMatch::day_of_year);
    }
}

json small_scale_json(const SmallScaleResult& s) {
    return {{"ratio_vs_reference", s.ratio_vs_reference},
            {"ratio_vs_self", s.ratio_vs_self},
            {"window_first_day", s.window_first},
            {"window_days", s.window_days},
            {"truncated", s.truncated},
            {"pre_blowup", s.pre_blowup},
            {"reference_match", s.match == ReferenceMatch::exact_dates ? "dates" : "day-of-year"}};
}

void add_blowup_flags(CLI::App* sub, BlowupParams& p) {
    sub->add_option("--smoothing-days", p.smoothing_days, "Trailing-mean width in days")->capture_default_str();
    sub->add_option("--window-days", p.window_days, "Log-fit window in days")->capture_default_str();
    sub->add_option("--r2", p.r2_threshold, "R^2 threshold of the log fit")->capture_default_str();
    sub->add_option("--min-growth", p.min_growth, "Minimum growth factor across a window")->capture_default_str();
    sub->add_option("--stride-days", p.stride_days, "Window stride in days")->capture_default_str();
}

void add_seasonality_flags(CLI::App* sub, SeasonalityParams& p) {
    sub->add_option("--multiplier", p.multiplier, "Violation when |x - mean| > multiplier * range")->capture_default_str();
    sub->add_option("--run-days", p.run_days, "Consecutive violating days that mark the loss")->capture_default_str();
}

// ---- subcommands --------------------------------------------------------------------

struct Common {
    std::string output;
    std::vector<std::string> variables;
};

void cmd_report(const CLI::App& sub, const std::string& pred_path, const std::string& ref_path, const std::string& run_name,
                const ReportConfig& cfg, const std::string& out, const std::string& csv) {
    const auto pred = read_rollout(pred_path), ref = read_rollout(ref_path);
    const auto name = run_name.empty() ? std::filesystem::path(pred_path).stem().string() : run_name;
    const auto rep = build_report(pred, ref, cfg, name);
    const auto m = manifest_for(sub, {pred_path, ref_path});
    write_json(out, to_json(rep), m);
    if (!csv.empty()) write_text(csv, report_csv({rep}, m.to_json().dump()));
}

void cmd_spectra(const CLI::App& sub, const std::string& in, const Common& c, bool daily, bool full) {
    const auto r = read_rollout(in);
    const auto m = manifest_for(sub, {in});
    std::ostringstream os;
    os << csv_header(m, "energy in field units (mean |c_k| over latitude rows, weighted); timestamp UTC");
    const std::size_t n_k = r.grid().n_lon() / 2 + 1;
    os << "variable,timestamp,band_large,band_medium,band_small";
    if (full)
        for (std::size_t k = 0; k < n_k; ++k) os << ",k" << k;
    os << '\n';
    for (const auto& v : pick_variables(r, c.variables)) {
        const auto s = spectrum_series(r, v, daily);
        auto band = [&](Band b, std::size_t t) { return s.resolved(b) ? num(s.band(b)[t]) : std::string("NA"); };
        for (std::size_t t = 0; t < s.size(); ++t) {
            os << v << ',' << format_iso8601(s.times[t]) << ',' << band(Band::large, t) << ',' << band(Band::medium, t) << ','
               << band(Band::small, t);
            if (full)
                for (double e : s.spectrum(t)) os << ',' << num(e);
            os << '\n';
        }
    }
    write_text(c.output, os.str());
}

void cmd_blowup(const CLI::App& sub, const std::string& in, const Common& c, const BlowupParams& p) {
    const auto r = read_rollout(in);
    const double h = horizon_of(r);
    json vars = json::object();
    for (const auto& v : pick_variables(r, c.variables)) {
        const auto b = detect_blowup(r, v, p);
        json j{{"blowup_day", opt_day(b.day, h)}};
        if (b.day) {
            j["trigger"] = b.trigger;
            j["r2"] = b.r2;
        }
        vars[v] = j;
    }
    write_json(c.output, {{"horizon_days", h}, {"units", {{"blowup_day", "days"}}}, {"variables", vars}}, manifest_for(sub, {in}));
}

void cmd_seasonality(const CLI::App& sub, const std::string& in, const std::string& ref_path, const std::string& env_path,
                     const std::string& env_out, const Common& c, const SeasonalityParams& p) {
    if (ref_path.empty() == env_path.empty()) throw InputError("give exactly one of --reference or --envelope");
    const auto r = read_rollout(in);
    const auto vars = pick_variables(r, c.variables);
    std::optional<RolloutSeries> ref;
    json env_doc;
    if (!ref_path.empty())
        ref = read_rollout(ref_path);
    else
        env_doc = read_json_file(env_path);
    // An envelope file holds one envelope, or {"envelopes": {variable: envelope}} as written by --envelope-out.
    auto envelope_for = [&](const std::string& v) {
        if (ref) return build_envelope(band_daily_series(*ref, v, Band::large), "band_large");
        if (!env_doc.contains("envelopes")) {
            if (vars.size() != 1) throw InputError("a single-envelope file applies to one --variable");
            return envelope_from_json(env_doc);
        }
        if (!env_doc["envelopes"].contains(v)) throw InputError(fmt::format("envelope file has no entry for '{}'", v));
        return envelope_from_json(env_doc["envelopes"][v]);
    };
    const double h = horizon_of(r);
    json out_vars = json::object(), envs = json::object();
    for (const auto& v : vars) {
        const auto env = envelope_for(v);
        if (ref) envs[v] = to_json(env);
        const auto s = detect_seasonality_loss(band_daily_series(r, v, Band::large), env, p);
        json j{{"seasonality_loss_day", s.day ? json(*s.day) : opt_day(std::nullopt, h)}};
        if (s.day) j["run_days"] = s.run_length;
        out_vars[v] = j;
    }
    const auto m = manifest_for(sub, {in, ref_path.empty() ? env_path : ref_path});
    if (!env_out.empty()) write_json(env_out, {{"envelopes", envs}}, m);
    write_json(c.output,
               {{"horizon_days", h}, {"multiplier", p.multiplier}, {"run_days", p.run_days},
                {"units", {{"seasonality_loss_day", "days"}}}, {"variables", out_vars}},
               m);
}

void cmd_smallscale(const CLI::App& sub, const std::string& in, const std::string& ref_path, const std::optional<double>& blowup,
                    const std::string& match, const Common& c) {
    const auto r = read_rollout(in), ref = read_rollout(ref_path);
    json vars = json::object();
    for (const auto& v : pick_variables(r, c.variables)) {
        const auto s = small_scale_auto(band_daily_series(r, v, Band::small), band_daily_series(ref, v, Band::small), blowup, match);
        vars[v] = small_scale_json(s);
    }
    write_json(c.output, {{"units", {{"ratio_vs_reference", "1"}, {"ratio_vs_self", "1"}}}, {"variables", vars}},
               manifest_for(sub, {in, ref_path}));
}

void cmd_cycle_rmse(const CLI::App& sub, const std::string& in, const std::string& ref_path, const Common& c) {
    const auto r = read_rollout(in), ref = read_rollout(ref_path);
    json vars = json::object();
    for (const auto& v : pick_variables(r, c.variables)) vars[v] = seasonal_cycle_rmse(r, ref, v);
    write_json(c.output, {{"units", "field units"}, {"statistic", "RMSE of monthly-mean climatologies"}, {"variables", vars}},
               manifest_for(sub, {in, ref_path}));
}

struct PerturbArgs {
    std::string adapter;
    std::string init;
    std::string kind = "white";
    double k = 1.0;
    double correlation_length = 10.0;
    std::string target = "dynamic";
    std::optional<double> time_shift;
    std::uint64_t seed = 0;
    std::size_t steps = 40;
    int step_hours = 6;
    std::string start;
    std::string images;
    std::string clean_out;
    std::string error_out;
};

void cmd_perturb(const CLI::App& sub, const PerturbArgs& a, const Common& c) {
    const auto colon = a.adapter.find(':');
    if (colon == std::string::npos) throw InputError("--adapter must be synth:<config.json> or external:<manifest.json>");
    const auto type = a.adapter.substr(0, colon), path = a.adapter.substr(colon + 1);
    std::vector<std::string> inputs{path};
    std::unique_ptr<ModelAdapter> adapter;
    FieldSet init;
    TimePoint start{};
    if (type == "synth") {
        auto cfg = regime_from_json(read_json_file(path));
        auto sa = std::make_unique<SynthAdapter>(cfg);
        init = sa->initial_state();
        start = cfg.start_time;
        adapter = std::move(sa);
    } else if (type == "external") {
        if (a.init.empty()) throw InputError("the external adapter needs --init");
        const auto r0 = read_rollout(a.init);
        adapter = std::make_unique<ExternalProcessAdapter>(read_json_file(path), r0.grid());
        if (r0.variables() != adapter->variables()) throw InputError("--init variables differ from the adapter manifest");
        init = state_at(r0, 0);
        start = r0.start_time();
    } else {
        throw InputError(fmt::format("unknown adapter type '{}'", type));
    }
    if (!a.init.empty()) {
        inputs.push_back(a.init);
        if (type == "synth") {
            const auto r0 = read_rollout(a.init);
            if (!(r0.grid() == adapter->grid()) || r0.variables() != adapter->variables())
                throw InputError("--init does not match the synth grid and variables");
            init = state_at(r0, 0);
            start = r0.start_time();
        }
    }
    if (!a.start.empty()) start = parse_iso8601(a.start);
    if (a.step_hours <= 0 || 24 % a.step_hours != 0) throw InputError("--step-hours must divide 24");
    const std::int64_t step = a.step_hours * 3600;

    PerturbationSpec spec;
    spec.kind = parse_perturb_kind(a.kind);
    spec.k = a.k;
    spec.correlation_length = a.correlation_length;
    spec.target = parse_perturb_target(a.target);
    spec.time_shift_days = a.time_shift;
    spec.seed = a.seed;
    if (!a.images.empty()) {
        inputs.push_back(a.images);
        const auto img = read_rollout(a.images);
        for (std::size_t v = 0; v < img.n_vars(); ++v) {
            const auto f = img.field(0, v);
            spec.images[img.variables()[v]].assign(f.begin(), f.end());
        }
    }
    spec.validate();

    // Perturbation scale comes from the unperturbed initial state.
    const auto stats = variable_stats(run_rollout(*adapter, init, start, 0, step).series);
    auto pert = run_rollout(*adapter, init, start, a.steps, step, spec, stats);
    const auto m = manifest_for(sub, inputs, a.seed);
    pert.series.attributes()["manifest"] = m.to_json();
    pert.series.attributes()["perturbation"] = {{"kind", a.kind}, {"k", a.k}, {"seed", a.seed}};
    write_rollout(pert.series, c.output);

    if (!a.clean_out.empty() || !a.error_out.empty()) {
        auto clean = run_rollout(*adapter, init, start, pert.completed_steps, step, std::nullopt, stats);
        if (!a.clean_out.empty()) {
            clean.series.attributes()["manifest"] = m.to_json();
            write_rollout(clean.series, a.clean_out);
        }
        if (!a.error_out.empty()) {
            std::ostringstream os;
            os << csv_header(m, "RMSE (latitude-weighted) in field units between perturbed and clean rollouts; step index from the initial state");
            os << "step,timestamp";
            std::vector<std::vector<double>> errs;
            std::vector<std::string> dyn;
            for (const auto& v : adapter->variables())
                if (!adapter->is_static(v)) dyn.push_back(v);
            for (const auto& v : dyn) {
                os << ',' << v;
                errs.push_back(error_trajectory(clean.series, pert.series, v));
            }
            os << '\n';
            for (std::size_t t = 0; t < pert.series.n_time(); ++t) {
                os << t << ',' << format_iso8601(pert.series.time_at(t));
                for (const auto& e : errs) os << ',' << num(e[t]);
                os << '\n';
            }
            write_text(a.error_out, os.str());
        }
    }
    if (pert.error) throw AdapterError(*pert.error);
}

struct SynthArgs {
    std::string regime = "STABLE";
    std::string config;
    double horizon_days = 730;
    int step_hours = 6;
    std::string labels;
    std::map<std::string, double> numbers;
    std::string start;
    std::string growing_band;
    std::vector<std::string> variables, statics;
    std::optional<std::size_t> n_lat, n_lon;
    std::optional<std::uint64_t> jitter_seed;
};

void cmd_synth(const CLI::App& sub, SynthArgs& a, std::uint64_t seed, const Common& c) {
    RegimeConfig cfg;
    std::vector<std::string> inputs;
    if (!a.config.empty()) {
        auto j = read_json_file(a.config);
        if (sub.get_option("--regime")->count()) j["regime"] = a.regime;
        cfg = regime_from_json(j);
        inputs.push_back(a.config);
    } else {
        cfg = RegimeConfig::preset(parse_regime(a.regime));
    }
    auto set = [&](const char* flag, auto& field) {
        if (sub.get_option(flag)->count()) field = static_cast<std::remove_reference_t<decltype(field)>>(a.numbers.at(flag));
    };
    set("--delta", cfg.delta);
    set("--onset-days", cfg.onset_days);
    set("--tau-days", cfg.tau_days);
    set("--amplitude", cfg.amplitude);
    set("--g-large", cfg.g_large);
    set("--g-medium", cfg.g_medium);
    set("--g-small", cfg.g_small);
    set("--cap", cfg.cap);
    set("--year-jitter", cfg.year_jitter);
    if (a.jitter_seed) cfg.jitter_seed = *a.jitter_seed;
    if (a.n_lat) cfg.n_lat = *a.n_lat;
    if (a.n_lon) cfg.n_lon = *a.n_lon;
    if (sub.get_option("--seed")->count() || a.config.empty()) cfg.seed = seed;
    if (!a.growing_band.empty()) cfg.growing_band = parse_band(a.growing_band);
    if (!a.start.empty()) cfg.start_time = parse_iso8601(a.start);
    if (!a.variables.empty()) cfg.variables = a.variables;
    if (!a.statics.empty()) cfg.static_variables = a.statics;
    if (a.step_hours <= 0 || 24 % a.step_hours != 0) throw InputError("--step-hours must divide 24");

    auto run = generate(cfg, a.horizon_days, a.step_hours * 3600);
    const auto m = manifest_for(sub, inputs, cfg.seed);
    run.series.attributes()["manifest"] = m.to_json();
    write_rollout(run.series, c.output);
    if (!a.labels.empty()) write_json(a.labels, {{"labels", to_json(run.labels)}, {"config", to_json(cfg)}, {"horizon_days", a.horizon_days}}, m);
}

struct ExtremesArgs {
    std::string model, reference, regions_file, out_dir = ".";
    std::vector<std::string> regions;
    std::string variable;
    std::string side = "both";
    double qq_step = 0.1;
    bool no_calendar_match = false;
};

void cmd_extremes(const CLI::App& sub, const ExtremesArgs& a) {
    const auto model = read_rollout(a.model), ref = read_rollout(a.reference);
    const auto var = a.variable.empty() ? model.variables().front() : a.variable;
    auto all = a.regions_file.empty() ? builtin_regions() : load_regions(a.regions_file);
    std::vector<RegionSpec> regions;
    if (a.regions.empty())
        regions = all;
    else
        for (const auto& n : a.regions) regions.push_back(find_region(all, n));
    std::vector<TailSide> sides;
    if (a.side == "both")
        sides = {TailSide::hot, TailSide::cold};
    else
        sides = {parse_tail_side(a.side)};

    std::vector<std::string> inputs{a.model, a.reference};
    if (!a.regions_file.empty()) inputs.push_back(a.regions_file);
    const auto m = manifest_for(sub, inputs);
    std::filesystem::create_directories(a.out_dir);
    const std::filesystem::path dir(a.out_dir);

    for (const auto& region : regions) {
        auto ms = regional_extreme_series(model, var, region), rs = regional_extreme_series(ref, var, region);
        if (!a.no_calendar_match) std::tie(ms, rs) = match_calendar_window(ms, rs);
        std::vector<double> levels{10.0, 90.0};
        for (auto s : sides)
            for (double l : default_exceedance_levels(s)) levels.push_back(l);
        const auto thr = pooled_percentiles(ref, var, region, levels);

        const auto ev_m = event_series(ms, thr), ev_r = event_series(rs, thr);
        std::ostringstream ev;
        ev << csv_header(m, fmt::format("counts of timesteps; thresholds in field units of '{}'", var));
        ev << "series,timesteps,hot_threshold,hot_events,cold_threshold,cold_events\n";
        for (const auto& [name, e] : {std::pair{"model", &ev_m}, std::pair{"reference", &ev_r}})
            ev << name << ',' << e->extremes.size() << ',' << num(e->hot_threshold) << ',' << e->hot_count() << ','
               << num(e->cold_threshold) << ',' << e->cold_count() << '\n';
        write_text((dir / fmt::format("{}_events.csv", region.name)).string(), ev.str());

        for (auto side : sides) {
            const auto sn = std::string(side_name(side));
            std::ostringstream qq;
            qq << csv_header(m, fmt::format("percentile level; quantiles in field units of '{}'", var));
            qq << "level,reference,model\n";
            for (const auto& p : qq_tails(ms, rs, side, default_qq_levels(side, a.qq_step)))
                qq << num(p.level) << ',' << num(p.reference) << ',' << num(p.model) << '\n';
            write_text((dir / fmt::format("{}_qq_{}.csv", region.name, sn)).string(), qq.str());

            ThresholdSet sub_thr = thr;
            sub_thr.levels.clear();
            sub_thr.values.clear();
            for (double l : default_exceedance_levels(side)) {
                sub_thr.levels.push_back(l);
                sub_thr.values.push_back(thr.at(l));
            }
            const auto cm = exceedance_curve(ms, sub_thr, side), cr = exceedance_curve(rs, sub_thr, side);
            const auto ratio = exceedance_ratio(cm, cr);
            std::ostringstream ex;
            ex << csv_header(m, "percentile level; threshold in field units; fractions of timesteps");
            ex << "level,threshold,model_fraction,reference_fraction,ratio\n";
            for (std::size_t i = 0; i < cm.levels.size(); ++i)
                ex << num(cm.levels[i]) << ',' << num(cm.thresholds[i]) << ',' << num(cm.fraction[i]) << ',' << num(cr.fraction[i])
                   << ',' << (ratio[i] ? num(*ratio[i]) : std::string("NA")) << '\n';
            write_text((dir / fmt::format("{}_exceedance_{}.csv", region.name, sn)).string(), ex.str());
        }
    }
}

void cmd_memorize(const CLI::App& sub, const std::string& training_path, const std::string& query_path, std::size_t stride,
                  const Common& c) {
    const auto training = read_rollout(training_path), query = read_rollout(query_path);
    const auto vars = pick_variables(training, c.variables);
    const auto index = NeighborIndex::from_rollout(training, vars, stride);
    const auto res = memorization_series(query, index);
    const auto m = manifest_for(sub, {training_path, query_path});
    std::ostringstream os;
    os << csv_header(m, "distances in standardized, latitude-weighted units; ratio = d1/d2; neighbor = timestamp of the nearest training snapshot");
    os << "timestamp,ratio,d1,d2,neighbor,candidates\n";
    for (const auto& r : res)
        os << format_iso8601(r.time) << ',' << num(r.ratio) << ',' << num(r.d1) << ',' << num(r.d2) << ','
           << format_iso8601(index.time_of(r.first)) << ',' << r.candidates << '\n';
    write_text(c.output, os.str());
}

void cmd_aggregate(const CLI::App& sub, const std::vector<std::string>& inputs, const std::string& out, const std::string& csv) {
    std::vector<StabilityReport> reps;
    for (const auto& p : inputs) reps.push_back(report_from_json(read_json_file(p)));
    const auto agg = aggregate_runs(reps);
    const auto m = manifest_for(sub, inputs);
    write_json(out, to_json(agg), m);
    if (!csv.empty()) write_text(csv, aggregate_csv(agg, m.to_json().dump()));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rollstab: stability diagnostics for long autoregressive rollouts"};
    app.config_formatter(std::make_shared<JsonConfig>());
    app.set_config("--config", "", "JSON file setting any flag; nest subcommand flags under the subcommand name");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));
    app.footer("Exit codes: 0 success, 2 input error or bad flag, 3 detection precondition failed, 1 other failure.\n"
               "ROLLOUT_STAB_THREADS caps worker threads.");

    Common common;
    auto add_common = [&](CLI::App* sub, bool variables = true) {
        sub->add_option("-o,--output", common.output, "Output file ('-' or unset: stdout)");
        if (variables) sub->add_option("--variable", common.variables, "Variables to analyse (default: all)");
    };

    // report
    std::string pred, ref, run_name, csv_out;
    ReportConfig rcfg;
    auto* report = app.add_subcommand("report", "All detectors for every shared variable (JSON + CSV table)");
    report->add_option("prediction", pred, "Prediction rollout (.rgf)")->required()->check(CLI::ExistingFile);
    report->add_option("reference", ref, "Reference rollout (.rgf)")->required()->check(CLI::ExistingFile);
    report->add_option("--run-name", run_name, "Row label (default: prediction file stem)");
    report->add_option("--csv", csv_out, "Also write the CSV table here");
    report->add_flag("!--no-day-of-year", rcfg.day_of_year_reference, "Require exact reference dates for small-scale ratios");
    add_blowup_flags(report, rcfg.blowup);
    add_seasonality_flags(report, rcfg.seasonality);
    report->add_option("-o,--output", common.output, "Output JSON ('-' or unset: stdout)");

    // spectra
    std::string input;
    bool daily = false, full = false;
    auto* spectra = app.add_subcommand("spectra", "Zonal energy spectra and band averages (CSV)");
    spectra->add_option("input", input, "Rollout (.rgf)")->required()->check(CLI::ExistingFile);
    spectra->add_flag("--daily", daily, "Average spectra per UTC day");
    spectra->add_flag("--full", full, "Append the per-wavenumber spectrum");
    add_common(spectra);

    // blowup
    BlowupParams bp;
    auto* blowup = app.add_subcommand("blowup", "Day of exponential growth of spatial extremes (JSON)");
    blowup->add_option("input", input, "Rollout (.rgf)")->required()->check(CLI::ExistingFile);
    add_blowup_flags(blowup, bp);
    add_common(blowup);

    // seasonality
    SeasonalityParams sp;
    std::string env_in, env_out;
    auto* season = app.add_subcommand("seasonality", "First sustained departure of band_large from its climatology (JSON)");
    season->add_option("input", input, "Rollout (.rgf)")->required()->check(CLI::ExistingFile);
    season->add_option("--reference", ref, "Multi-year reference rollout (.rgf)")->check(CLI::ExistingFile);
    season->add_option("--envelope", env_in, "Precomputed envelope JSON instead of --reference")->check(CLI::ExistingFile);
    season->add_option("--envelope-out", env_out, "Write the envelopes built from --reference");
    add_seasonality_flags(season, sp);
    add_common(season);

    // smallscale
    std::optional<double> blowup_day;
    std::string match = "auto";
    auto* small = app.add_subcommand("smallscale", "Small-band energy ratios over the last 30 days (JSON)");
    small->add_option("input", input, "Rollout (.rgf)")->required()->check(CLI::ExistingFile);
    small->add_option("reference", ref, "Reference rollout (.rgf)")->required()->check(CLI::ExistingFile);
    small->add_option("--blowup-day", blowup_day, "End the window at this day");
    small->add_option("--match", match, "Reference matching: auto, dates, day-of-year")->capture_default_str();
    add_common(small);

    // cycle-rmse
    auto* cycle = app.add_subcommand("cycle-rmse", "RMSE between monthly-mean climatologies (JSON)");
    cycle->add_option("input", input, "Rollout (.rgf)")->required()->check(CLI::ExistingFile);
    cycle->add_option("reference", ref, "Reference over the same months (.rgf)")->required()->check(CLI::ExistingFile);
    add_common(cycle);

    // perturb
    PerturbArgs pa;
    auto* perturb = app.add_subcommand("perturb", "Perturbed rollout through a model adapter (.rgf + error CSV)");
    perturb->add_option("--adapter", pa.adapter, "synth:<regime.json> or external:<manifest.json>")->required();
    perturb->add_option("--init", pa.init, "Initial state: slice 0 of this rollout")->check(CLI::ExistingFile);
    perturb->add_option("--kind", pa.kind, "white, grf, pure_noise, image_init")->capture_default_str();
    perturb->add_option("--k", pa.k, "Amplitude in units of the variable std")->capture_default_str();
    perturb->add_option("--correlation-length", pa.correlation_length, "GRF correlation length in pixels")->capture_default_str();
    perturb->add_option("--target", pa.target, "dynamic, static, both")->capture_default_str();
    perturb->add_option("--time-shift-days", pa.time_shift, "Shift the clock seen by the model");
    perturb->add_option("--seed", pa.seed, "Perturbation seed")->capture_default_str();
    perturb->add_option("--steps", pa.steps, "Autoregressive steps")->capture_default_str();
    perturb->add_option("--step-hours", pa.step_hours, "Hours per step")->capture_default_str();
    perturb->add_option("--start", pa.start, "Start time (ISO-8601), default from the adapter or --init");
    perturb->add_option("--images", pa.images, "IMAGE_INIT source: slice 0 of this rollout")->check(CLI::ExistingFile);
    perturb->add_option("--clean", pa.clean_out, "Also write the unperturbed rollout");
    perturb->add_option("--error", pa.error_out, "Write the error trajectory CSV");
    perturb->add_option("-o,--output", common.output, "Perturbed rollout (.rgf)")->required();

    // synth
    SynthArgs sa;
    std::uint64_t seed = 0;
    auto* synth = app.add_subcommand("synth", "Synthetic rollout with a known failure regime (.rgf + labels JSON)");
    synth->add_option("--regime", sa.regime, "STABLE, BLOWUP, DRIFT, SHARPEN, BLUR")->capture_default_str();
    synth->add_option("--regime-config", sa.config, "Regime JSON; flags override its fields")->check(CLI::ExistingFile);
    synth->add_option("--horizon-days", sa.horizon_days, "Rollout length in days (>= 60)")->capture_default_str();
    synth->add_option("--step-hours", sa.step_hours, "Hours per step")->capture_default_str();
    synth->add_option("--seed", seed, "Noise seed")->capture_default_str();
    for (const auto& [flag, help] : std::vector<std::pair<std::string, std::string>>{
             {"--delta", "BLOWUP growth rate per step"},
             {"--onset-days", "BLOWUP onset t0"},
             {"--tau-days", "DRIFT decay time of the seasonal forcing"},
             {"--amplitude", "Seasonal forcing amplitude"},
             {"--g-large", "Large-band gain"},
             {"--g-medium", "Medium-band gain (also the gap)"},
             {"--g-small", "Small-band gain"},
             {"--cap", "Amplitude clamp, 0 for none"},
             {"--year-jitter", "Per-year seasonal amplitude jitter"}})
        synth->add_option(flag, sa.numbers[flag], help);
    synth->add_option("--jitter-seed", sa.jitter_seed, "Seed of the per-year amplitude jitter");
    synth->add_option("--n-lat", sa.n_lat, "Latitude rows");
    synth->add_option("--n-lon", sa.n_lon, "Longitude columns");
    synth->add_option("--growing-band", sa.growing_band, "BLOWUP band: large, medium, small");
    synth->add_option("--start", sa.start, "Start time (ISO-8601)");
    synth->add_option("--variables", sa.variables, "Dynamic variable names");
    synth->add_option("--static-variables", sa.statics, "Static variable names");
    synth->add_option("--labels", sa.labels, "Write ground-truth labels JSON");
    synth->add_option("-o,--output", common.output, "Output rollout (.rgf)")->required();

    // extremes
    ExtremesArgs ea;
    auto* extremes = app.add_subcommand("extremes", "Regional tail statistics: QQ, exceedance, event counts (CSVs)");
    extremes->add_option("model", ea.model, "Model rollout (.rgf)")->required()->check(CLI::ExistingFile);
    extremes->add_option("reference", ea.reference, "Reference rollout (.rgf)")->required()->check(CLI::ExistingFile);
    extremes->add_option("--variable", ea.variable, "Variable (default: first)");
    extremes->add_option("--regions-file", ea.regions_file, "Region definitions JSON")->check(CLI::ExistingFile);
    extremes->add_option("--region", ea.regions, "Regions to analyse (default: all)");
    extremes->add_option("--side", ea.side, "hot, cold, both")->capture_default_str();
    extremes->add_option("--qq-step", ea.qq_step, "QQ level spacing in percent")->capture_default_str();
    extremes->add_flag("--no-calendar-match", ea.no_calendar_match, "Compare full series instead of common timestamps");
    extremes->add_option("--output-dir", ea.out_dir, "Directory for the per-region CSVs")->capture_default_str();

    // memorize
    std::string training;
    std::size_t stride = 1;
    auto* memorize = app.add_subcommand("memorize", "Nearest/second-nearest training distance ratio per slice (CSV)");
    memorize->add_option("training", training, "Training snapshots (.rgf)")->required()->check(CLI::ExistingFile);
    memorize->add_option("query", input, "Rollout to check (.rgf)")->required()->check(CLI::ExistingFile);
    memorize->add_option("--stride", stride, "Use every n-th training slice")->capture_default_str();
    add_common(memorize);

    // aggregate
    std::vector<std::string> reports;
    auto* aggregate = app.add_subcommand("aggregate", "Mean and std over report JSONs of repeated runs");
    aggregate->add_option("reports", reports, "Report JSON files (>= 2)")->required()->check(CLI::ExistingFile);
    aggregate->add_option("--csv", csv_out, "Also write the CSV table here");
    aggregate->add_option("-o,--output", common.output, "Output JSON ('-' or unset: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*report) cmd_report(*report, pred, ref, run_name, rcfg, common.output, csv_out);
        else if (*spectra) cmd_spectra(*spectra, input, common, daily, full);
        else if (*blowup) cmd_blowup(*blowup, input, common, bp);
        else if (*season) cmd_seasonality(*season, input, ref, env_in, env_out, common, sp);
        else if (*small) cmd_smallscale(*small, input, ref, blowup_day, match, common);
        else if (*cycle) cmd_cycle_rmse(*cycle, input, ref, common);
        else if (*perturb) cmd_perturb(*perturb, pa, common);
        else if (*synth) cmd_synth(*synth, sa, seed, common);
        else if (*extremes) cmd_extremes(*extremes, ea);
        else if (*memorize) cmd_memorize(*memorize, training, input, stride, common);
        else if (*aggregate) cmd_aggregate(*aggregate, reports, common.output, csv_out);
    } catch (const PreconditionError& e) {
        std::cerr << "precondition failed: " << e.what() << '\n';
        return 3;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
