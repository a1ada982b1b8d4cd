// Generate a run that blows up after day 150 and compare the detector against the generator's label.

#include <cstdio>

#include "rollstab/rollstab.hpp"

int main() {
    using namespace rollstab;
    auto cfg = RegimeConfig::preset(Regime::BLOWUP);
    cfg.delta = 0.1;
    cfg.onset_days = 150;
    cfg.seed = 7;
    const auto run = generate(cfg, 365);

    const auto found = detect_blowup(run.series, "t2m");
    std::printf("expected window: [%.0f, %.2f]\n", cfg.onset_days, *run.labels.blowup_day + 5.0);
    if (found.day)
        std::printf("detected: day %.2f (%s, R^2 %.3f)\n", *found.day, found.trigger.c_str(), found.r2);
    else
        std::printf("detected: none\n");

    const auto daily = spectrum_series(run.series, "t2m", true);
    const auto ss = small_scale_ratios(daily, daily, found.day);
    std::printf("small-band energy before blow-up vs first two days: %.3f\n", ss.ratio_vs_self);
}
