#include <catch_amalgamated.hpp>

#include "helpers.hpp"
#include "rollstab/extremes.hpp"

using namespace rollstab;
using Catch::Approx;

TEST_CASE("regional extremes", "[extremes]") {
    const auto g = GridSpec::centred(18, 36);
    const auto europe = find_region(builtin_regions(), "central_europe");
    const auto mask = region_mask(g, europe);
    SECTION("constant field") {
        RolloutSeries r(g, {"t"}, parse_iso8601("2021-01-01"), kSixHours, 2, std::vector<float>(2 * g.size(), 3.0f));
        const auto s = regional_extreme_series(r, "t", europe);
        CHECK(s.max == std::vector<double>{3.0, 3.0});
        CHECK(s.min == std::vector<double>{3.0, 3.0});
    }
    SECTION("spike inside and outside the region") {
        RolloutSeries r(g, {"t"}, parse_iso8601("2021-01-01"), kSixHours, 1);
        std::size_t inside = 0, outside = 0;
        for (std::size_t c = 0; c < g.size(); ++c) (mask.cells[c] ? inside : outside) = c;
        r.field(0, 0)[inside] = 50.0f;
        r.field(0, 0)[outside] = 500.0f;
        CHECK(regional_extreme_series(r, "t", europe).max[0] == 50.0);
    }
    SECTION("random field matches an exhaustive scan") {
        const auto r = testing::random_rollout(g, 10, 6);
        const auto s = regional_extreme_series(r, "t2m", europe);
        for (std::size_t t = 0; t < 10; ++t) {
            double hi = -1e300, lo = 1e300;
            for (std::size_t i = 0; i < g.n_lat(); ++i)
                for (std::size_t j = 0; j < g.n_lon(); ++j) {
                    const double lat = g.lats()[i], lon = g.lons()[j];
                    if (lat < 45 || lat > 55 || lon < 5 || lon > 20) continue;
                    hi = std::max<double>(hi, r.field(t, 0)[i * g.n_lon() + j]);
                    lo = std::min<double>(lo, r.field(t, 0)[i * g.n_lon() + j]);
                }
            CHECK(s.max[t] == hi);
            CHECK(s.min[t] == lo);
        }
    }
    SECTION("event flags agree with a recount on raw fields") {
        const auto r = testing::random_rollout(g, 200, 7);
        const auto ts = pooled_percentiles(r, "t2m", europe, {10, 90});
        const auto ev = event_series(regional_extreme_series(r, "t2m", europe), ts);
        std::size_t hot = 0, cold = 0;
        for (std::size_t t = 0; t < 200; ++t) {
            bool h = false, c = false;
            for (std::size_t k = 0; k < g.size(); ++k)
                if (mask.cells[k]) {
                    h |= r.field(t, 0)[k] > ts.at(90);
                    c |= r.field(t, 0)[k] < ts.at(10);
                }
            CHECK(ev.hot[t] == h);
            CHECK(ev.cold[t] == c);
            hot += h;
            cold += c;
        }
        CHECK(ev.hot_count() == hot);
        CHECK(ev.cold_count() == cold);
    }
}

TEST_CASE("QQ tails", "[extremes]") {
    RegionalSeries ref{"r", {}, testing::normal_draws(5000, 1), testing::normal_draws(5000, 2)};
    ref.times.resize(5000);
    const auto hot = default_qq_levels(TailSide::hot);
    REQUIRE(hot.size() == 100);
    CHECK(hot.front() == 90.0);
    CHECK(hot.back() == 99.9);
    const auto cold = default_qq_levels(TailSide::cold);
    CHECK(cold.front() == 0.1);
    CHECK(cold.back() == 10.0);

    SECTION("self comparison lies on the diagonal") {
        for (const auto& p : qq_tails(ref, ref, TailSide::hot)) CHECK(p.model == p.reference);
    }
    SECTION("shift equivariance") {
        auto model = ref;
        for (auto& x : model.max) x -= 2.0;
        for (const auto& p : qq_tails(model, ref, TailSide::hot)) CHECK(p.model - p.reference == Approx(-2.0).margin(1e-9));
    }
    SECTION("common affine map") {
        auto a = ref, b = ref;
        for (auto& x : b.max) x *= 0.9;
        const auto base = qq_tails(b, a, TailSide::hot);
        for (auto& x : a.max) x = 3.0 * x + 1.0;
        for (auto& x : b.max) x = 3.0 * x + 1.0;
        const auto mapped = qq_tails(b, a, TailSide::hot);
        for (std::size_t i = 0; i < base.size(); ++i) {
            CHECK(mapped[i].model == Approx(3.0 * base[i].model + 1.0));
            CHECK(mapped[i].reference == Approx(3.0 * base[i].reference + 1.0));
        }
    }
    SECTION("shrunk variance gives lighter hot tails") {
        auto model = ref;
        for (auto& x : model.max) x *= 0.5;
        for (const auto& p : qq_tails(model, ref, TailSide::hot)) CHECK(p.model < p.reference);
    }
    SECTION("empty levels") { CHECK_THROWS_AS(qq_tails(ref.max, ref.max, {}), InputError); }
}

TEST_CASE("exceedance curves", "[extremes]") {
    const auto g = GridSpec::centred(18, 36);
    const auto r = testing::random_rollout(g, 300, 12);
    const RegionSpec region{"box", -30, 30, 0, 90};
    const auto series = regional_extreme_series(r, "t2m", region);
    SECTION("threshold below the minimum") {
        ThresholdSet ts{"box", "t2m", {50.0}, {-1e9}, ""};
        CHECK(exceedance_curve(series, ts, TailSide::hot).fraction[0] == 1.0);
    }
    SECTION("regional max exceeds the pooled P90 at least 10% of the time") {
        const auto ts = pooled_percentiles(r, "t2m", region, default_exceedance_levels(TailSide::hot));
        const auto c = exceedance_curve(series, ts, TailSide::hot);
        const auto i90 = static_cast<std::size_t>(std::find(c.levels.begin(), c.levels.end(), 90.0) - c.levels.begin());
        CHECK(c.fraction[i90] >= 0.10);
        for (std::size_t i = 1; i < c.fraction.size(); ++i) CHECK(c.fraction[i] <= c.fraction[i - 1]);
        const auto cold = exceedance_curve(series, pooled_percentiles(r, "t2m", region, default_exceedance_levels(TailSide::cold)),
                                           TailSide::cold);
        for (std::size_t i = 1; i < cold.fraction.size(); ++i) CHECK(cold.fraction[i] >= cold.fraction[i - 1]);
    }
    SECTION("ratio undefined where the reference never exceeds") {
        ThresholdSet ts{"box", "t2m", {90.0, 99.0}, {0.0, 1e9}, ""};
        const auto a = exceedance_curve(series, ts, TailSide::hot);
        const auto ratio = exceedance_ratio(a, a);
        CHECK(*ratio[0] == 1.0);
        CHECK_FALSE(ratio[1]);
    }
    SECTION("empty series") {
        CHECK_THROWS_AS(exceedance_curve(RegionalSeries{}, ThresholdSet{}, TailSide::hot), InputError);
    }
}
