#pragma once

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "rollstab/climatology.hpp"
#include "rollstab/detectors.hpp"
#include "rollstab/error.hpp"
#include "rollstab/rollout.hpp"
#include "rollstab/spectra.hpp"
#include "rollstab/stats.hpp"

namespace rollstab {

struct ReportConfig {
    BlowupParams blowup;
    SeasonalityParams seasonality;
    bool day_of_year_reference = true;  // fall back to day-of-year matching when dates are missing
};

/// One cell of a report: a value, a horizon-censored entry, or unavailable with a reason.
struct Cell {
    std::optional<double> value;
    bool censored = false;
    std::string note;

    static Cell of(double v) { return {v, false, {}}; }
    static Cell none() { return {std::nullopt, true, {}}; }
    static Cell unavailable(std::string why) { return {std::nullopt, false, std::move(why)}; }
    bool available() const { return value.has_value() || censored; }
};

struct VariableReport {
    std::string variable;
    Cell blowup_day;
    std::string blowup_trigger;
    double blowup_r2 = 0.0;
    Cell seasonality_day;
    std::size_t seasonality_run = 0;
    Cell ratio_vs_reference;
    Cell ratio_vs_self;
    std::optional<SmallScaleResult> small_scale;
};

struct StabilityReport {
    std::string run;
    double horizon_days = 0.0;
    double multiplier = 2.0;
    std::vector<VariableReport> variables;

    const VariableReport& at(const std::string& v) const {
        for (const auto& r : variables)
            if (r.variable == v) return r;
        throw InputError(fmt::format("report '{}' has no variable '{}'", run, v));
    }
};

inline std::vector<std::string> shared_variables(const RolloutSeries& a, const RolloutSeries& b) {
    std::vector<std::string> out;
    for (const auto& v : a.variables())
        if (b.has_variable(v)) out.push_back(v);
    return out;
}

inline StabilityReport build_report(const RolloutSeries& pred, const RolloutSeries& reference, const ReportConfig& cfg = {},
                                    std::string run_name = "run") {
    const auto vars = shared_variables(pred, reference);
    if (vars.empty()) throw InputError("prediction and reference share no variables");
    StabilityReport rep;
    rep.run = std::move(run_name);
    rep.horizon_days = static_cast<double>(pred.n_time() - 1) * static_cast<double>(pred.step_seconds()) / 86400.0;
    rep.multiplier = cfg.seasonality.multiplier;
    for (const auto& v : vars) {
        VariableReport vr;
        vr.variable = v;
        const auto bu = detect_blowup(pred, v, cfg.blowup);
        if (bu.day) {
            vr.blowup_day = Cell::of(*bu.day);
            vr.blowup_trigger = bu.trigger;
            vr.blowup_r2 = bu.r2;
        } else {
            vr.blowup_day = Cell::none();
        }

        const auto ps = spectrum_series(pred, v, true);
        const auto rs = spectrum_series(reference, v, true);
        try {
            const auto env = build_envelope(band_daily_series(rs, Band::large), "band_large");
            const auto se = detect_seasonality_loss(band_daily_series(ps, Band::large), env, cfg.seasonality);
            vr.seasonality_day = se.day ? Cell::of(static_cast<double>(*se.day)) : Cell::none();
            vr.seasonality_run = se.run_length;
        } catch (const PreconditionError& e) {
            vr.seasonality_day = Cell::unavailable(e.what());
        }

        try {
            const auto pb = band_daily_series(ps, Band::small), rb = band_daily_series(rs, Band::small);
            SmallScaleResult ss;
            try {
                ss = small_scale_ratios(pb, rb, bu.day, ReferenceMatch::exact_dates);
            } catch (const InputError&) {
                if (!cfg.day_of_year_reference) throw;
                ss = small_scale_ratios(pb, rb, bu.day, ReferenceMatch::day_of_year);
            }
            vr.ratio_vs_reference = Cell::of(ss.ratio_vs_reference);
            vr.ratio_vs_self = Cell::of(ss.ratio_vs_self);
            vr.small_scale = ss;
        } catch (const Error& e) {
            vr.ratio_vs_reference = Cell::unavailable(e.what());
            vr.ratio_vs_self = Cell::unavailable(e.what());
        }
        rep.variables.push_back(std::move(vr));
    }
    return rep;
}

// ---- serialization ----------------------------------------------------------

inline nlohmann::json cell_json(const Cell& c, double horizon) {
    if (c.value) return *c.value;
    if (c.censored) return {{"censored", true}, {"horizon", horizon}};
    return {{"unavailable", c.note}};
}

inline Cell cell_from_json(const nlohmann::json& j) {
    if (j.is_number()) return Cell::of(j.get<double>());
    if (j.is_object() && j.value("censored", false)) return Cell::none();
    if (j.is_object() && j.contains("unavailable")) return Cell::unavailable(j.at("unavailable").get<std::string>());
    throw InputError(fmt::format("bad report cell {}", j.dump()));
}

inline std::string cell_csv(const Cell& c, double horizon) {
    if (c.value) return fmt::format("{:.6g}", *c.value);
    if (c.censored) return fmt::format(">{:g}", horizon);
    return "NA";
}

inline nlohmann::json to_json(const StabilityReport& r) {
    nlohmann::json vars = nlohmann::json::object();
    for (const auto& v : r.variables) {
        nlohmann::json j;
        j["blowup_day"] = cell_json(v.blowup_day, r.horizon_days);
        if (v.blowup_day.value) {
            j["blowup_trigger"] = v.blowup_trigger;
            j["blowup_r2"] = v.blowup_r2;
        }
        j["seasonality_loss_day"] = cell_json(v.seasonality_day, r.horizon_days);
        if (v.seasonality_day.value) j["seasonality_run_days"] = v.seasonality_run;
        j["ratio_vs_reference"] = cell_json(v.ratio_vs_reference, r.horizon_days);
        j["ratio_vs_self"] = cell_json(v.ratio_vs_self, r.horizon_days);
        if (v.small_scale)
            j["small_scale_window"] = {{"first_day", v.small_scale->window_first},
                                       {"days", v.small_scale->window_days},
                                       {"truncated", v.small_scale->truncated},
                                       {"pre_blowup", v.small_scale->pre_blowup},
                                       {"reference_match", v.small_scale->match == ReferenceMatch::exact_dates ? "dates" : "day_of_year"}};
        vars[v.variable] = j;
    }
    return {{"run", r.run},
            {"horizon_days", r.horizon_days},
            {"seasonality_multiplier", r.multiplier},
            {"units", {{"blowup_day", "days"}, {"seasonality_loss_day", "days"}, {"ratio_vs_reference", "1"}, {"ratio_vs_self", "1"}}},
            {"variables", vars}};
}

inline StabilityReport report_from_json(const nlohmann::json& j) {
    try {
        StabilityReport r;
        r.run = j.at("run").get<std::string>();
        r.horizon_days = j.at("horizon_days").get<double>();
        r.multiplier = j.value("seasonality_multiplier", 2.0);
        for (const auto& [name, v] : j.at("variables").items()) {
            VariableReport vr;
            vr.variable = name;
            vr.blowup_day = cell_from_json(v.at("blowup_day"));
            vr.blowup_trigger = v.value("blowup_trigger", std::string{});
            vr.blowup_r2 = v.value("blowup_r2", 0.0);
            vr.seasonality_day = cell_from_json(v.at("seasonality_loss_day"));
            vr.seasonality_run = v.value("seasonality_run_days", std::size_t{0});
            vr.ratio_vs_reference = cell_from_json(v.at("ratio_vs_reference"));
            vr.ratio_vs_self = cell_from_json(v.at("ratio_vs_self"));
            r.variables.push_back(std::move(vr));
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(fmt::format("bad report JSON: {}", e.what()));
    }
}

inline const std::vector<std::pair<std::string, Cell VariableReport::*>>& report_metrics() {
    static const std::vector<std::pair<std::string, Cell VariableReport::*>> m{
        {"blowup_day", &VariableReport::blowup_day},
        {"seasonality_loss_day", &VariableReport::seasonality_day},
        {"ratio_vs_reference", &VariableReport::ratio_vs_reference},
        {"ratio_vs_self", &VariableReport::ratio_vs_self}};
    return m;
}

/// Table layout: one row per (run, metric), one column per variable; ">H" marks horizon-censored cells.
inline std::string report_csv(const std::vector<StabilityReport>& reports, const std::string& provenance = {}) {
    std::ostringstream out;
    out << "# units: blowup_day and seasonality_loss_day in days from rollout start; ratios dimensionless\n";
    out << "# >H: no event within the horizon of H days; NA: metric unavailable on this input\n";
    if (!provenance.empty()) out << "# manifest: " << provenance << "\n";
    if (reports.empty()) return out.str();
    out << "run,metric";
    for (const auto& v : reports[0].variables) out << ',' << v.variable;
    out << '\n';
    for (const auto& r : reports)
        for (const auto& [name, member] : report_metrics()) {
            out << r.run << ',' << name;
            for (const auto& v : reports[0].variables) out << ',' << cell_csv(r.at(v.variable).*member, r.horizon_days);
            out << '\n';
        }
    return out.str();
}

// ---- aggregation -------------------------------------------------------------

struct AggregateCell {
    double mean = 0.0;
    double std = 0.0;  // sample std
    std::size_t n = 0;
    std::size_t censored = 0;
};

struct AggregateReport {
    std::vector<std::string> runs;
    std::vector<std::string> variables;
    std::map<std::string, std::map<std::string, std::optional<AggregateCell>>> cells;  // metric -> variable
};

/// Mean and sample std over runs; censored cells count as the run's horizon, unavailable cells are skipped.
inline AggregateReport aggregate_runs(const std::vector<StabilityReport>& reports) {
    if (reports.size() < 2) throw InputError("aggregation needs at least two reports");
    AggregateReport agg;
    for (const auto& v : reports[0].variables) agg.variables.push_back(v.variable);
    for (const auto& r : reports) {
        std::vector<std::string> names;
        for (const auto& v : r.variables) names.push_back(v.variable);
        auto a = names, b = agg.variables;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (a != b) throw InputError(fmt::format("report '{}' has a different variable set", r.run));
        agg.runs.push_back(r.run);
    }
    for (const auto& [metric, member] : report_metrics())
        for (const auto& v : agg.variables) {
            std::vector<double> xs;
            AggregateCell c;
            for (const auto& r : reports) {
                const Cell& cell = r.at(v).*member;
                if (cell.value) {
                    xs.push_back(*cell.value);
                } else if (cell.censored) {
                    xs.push_back(r.horizon_days);
                    ++c.censored;
                }
            }
            if (xs.empty()) {
                agg.cells[metric][v] = std::nullopt;
                continue;
            }
            c.mean = mean(xs);
            c.std = sample_stddev(xs);
            c.n = xs.size();
            agg.cells[metric][v] = c;
        }
    return agg;
}

inline nlohmann::json to_json(const AggregateReport& a) {
    nlohmann::json cells = nlohmann::json::object();
    for (const auto& [metric, row] : a.cells)
        for (const auto& [v, c] : row)
            cells[metric][v] = c ? nlohmann::json{{"mean", c->mean}, {"std", c->std}, {"n", c->n}, {"censored", c->censored}}
                                 : nlohmann::json(nullptr);
    return {{"runs", a.runs}, {"variables", a.variables}, {"statistic", "mean and sample std over runs"}, {"cells", cells}};
}

inline std::string aggregate_csv(const AggregateReport& a, const std::string& provenance = {}) {
    std::ostringstream out;
    out << "# mean ± sample std over " << a.runs.size() << " runs; censored cells count as the horizon\n";
    if (!provenance.empty()) out << "# manifest: " << provenance << "\n";
    out << "metric";
    for (const auto& v : a.variables) out << ',' << v;
    out << '\n';
    for (const auto& [metric, member] : report_metrics()) {
        (void)member;
        out << metric;
        for (const auto& v : a.variables) {
            const auto& c = a.cells.at(metric).at(v);
            out << ',' << (c ? fmt::format("{:.1f} ± {:.1f}", c->mean, c->std) : std::string("NA"));
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace rollstab
