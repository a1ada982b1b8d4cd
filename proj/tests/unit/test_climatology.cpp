#include <catch_amalgamated.hpp>

#include "helpers.hpp"
#include "rollstab/climatology.hpp"

using namespace rollstab;
using Catch::Approx;

namespace {

DailySeries years_series(std::vector<int> years, auto value) {
    DailySeries s;
    for (int y : years) {
        const auto first = parse_iso8601(fmt::format("{}-01-01", y));
        const auto last = parse_iso8601(fmt::format("{}-12-31", y));
        for (auto d = first; d <= last; d += std::chrono::days{1}) {
            s.days.push_back(d);
            s.values.push_back(value(y, day_bucket(d)));
        }
    }
    return s;
}

}  // namespace

TEST_CASE("envelope construction", "[climatology]") {
    SECTION("two identical years") {
        const auto env = build_envelope(years_series({2001, 2002}, [](int, int b) { return std::sin(b * 0.1); }), "x");
        for (std::size_t b = 0; b < 365; ++b) {
            CHECK(env.days[b].range == 0.0);
            CHECK(env.days[b].mean == Approx(std::sin(b * 0.1)));
        }
        CHECK(env.first_year == 2001);
        CHECK(env.last_year == 2002);
    }
    SECTION("values 1, 3, 5") {
        const auto env = build_envelope(years_series({2001, 2002, 2003}, [](int y, int) { return 1.0 + 2.0 * (y - 2001); }), "x");
        CHECK(env.days[100].mean == Approx(3.0));
        CHECK(env.days[100].range == Approx(4.0));
    }
    SECTION("jittered sinusoid stays within twice the jitter") {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> u(-0.3, 0.3);
        std::map<int, double> jitter;
        for (int y = 1990; y < 2000; ++y) jitter[y] = u(rng);
        const auto env = build_envelope(
            years_series({1990, 1991, 1992, 1993, 1994, 1995, 1996, 1997, 1998, 1999},
                         [&](int y, int b) { return 5.0 + std::sin(2 * std::numbers::pi * b / 365.0) + jitter[y]; }),
            "x");
        for (const auto& d : env.days) {
            CHECK(d.range <= 0.6 + 1e-12);
            CHECK(d.min <= d.mean);
            CHECK(d.mean <= d.max);
        }
    }
    SECTION("leap years fold Feb 29 into Feb 28") {
        const auto env = build_envelope(years_series({2019, 2020}, [](int y, int) { return double(y); }), "x");
        const auto feb28 = static_cast<std::size_t>(day_bucket(parse_iso8601("2021-02-28")));
        CHECK(env.days[feb28].samples == 3);
    }
    SECTION("year order does not matter") {
        auto fwd = years_series({2001, 2002, 2003}, [](int y, int b) { return std::cos(y * 1.7 + b); });
        auto rev = fwd;
        std::reverse(rev.days.begin(), rev.days.end());
        std::reverse(rev.values.begin(), rev.values.end());
        const auto a = build_envelope(fwd, "x"), b = build_envelope(rev, "x");
        for (std::size_t d = 0; d < 365; ++d) {
            CHECK(a.days[d].mean == b.days[d].mean);
            CHECK(a.days[d].range == b.days[d].range);
        }
    }
    SECTION("adding a year never shrinks the range") {
        auto value = [](int y, int b) { return std::sin(y * 3.1 + b * 0.2); };
        const auto a = build_envelope(years_series({2001, 2002}, value), "x");
        const auto b = build_envelope(years_series({2001, 2002, 2003}, value), "x");
        for (std::size_t d = 0; d < 365; ++d) {
            CHECK(b.days[d].min <= a.days[d].min);
            CHECK(b.days[d].max >= a.days[d].max);
        }
    }
    SECTION("single year is rejected") {
        CHECK_THROWS_AS(build_envelope(years_series({2001}, [](int, int) { return 1.0; }), "x"), PreconditionError);
    }
    SECTION("JSON round trip") {
        const auto env = build_envelope(years_series({2001, 2002, 2003}, [](int y, int b) { return y * 0.01 + b; }), "band_large");
        const auto back = envelope_from_json(nlohmann::json::parse(to_json(env).dump()));
        CHECK(back.statistic == "band_large");
        for (std::size_t d = 0; d < 365; ++d) CHECK(back.days[d].mean == env.days[d].mean);
    }
}

TEST_CASE("pooled percentiles", "[climatology]") {
    SECTION("pool 1..100") {
        std::vector<double> pool(100);
        std::iota(pool.begin(), pool.end(), 1.0);
        const std::vector<double> lv{90.0};
        CHECK(percentiles(pool, lv)[0] == Approx(90.1));
    }
    SECTION("constant pool") {
        const GridSpec g = GridSpec::centred(4, 8);
        RolloutSeries r(g, {"t"}, parse_iso8601("2001-01-01"), kSixHours, 3, std::vector<float>(3 * g.size(), 7.0f));
        const auto ts = pooled_percentiles(r, "t", {"all", -90, 90, 0, 360}, {10, 50, 90});
        for (double v : ts.values) CHECK(v == 7.0);
    }
    SECTION("standard normal pool") {
        const GridSpec g = GridSpec::centred(100, 100);
        const auto r = testing::random_rollout(g, 100, 21);
        const auto ts = pooled_percentiles(r, "t2m", {"all", -90, 90, 0, 360}, {99.9, 10, 90, 0.1});
        CHECK(ts.levels == std::vector<double>{0.1, 10, 90, 99.9});
        CHECK(ts.at(90) == Approx(1.2816).margin(0.01));
        CHECK(ts.at(10) == Approx(-1.2816).margin(0.01));
        for (std::size_t i = 1; i < ts.values.size(); ++i) CHECK(ts.values[i] >= ts.values[i - 1]);
    }
    SECTION("reshuffling the pool changes nothing") {
        auto pool = testing::normal_draws(1001, 5);
        const std::vector<double> lv{5, 50, 95};
        const auto a = percentiles(pool, lv);
        std::shuffle(pool.begin(), pool.end(), std::mt19937_64(1));
        CHECK(percentiles(pool, lv) == a);
    }
    SECTION("levels outside (0, 100)") {
        const auto r = testing::random_rollout(GridSpec::centred(4, 8), 2, 1);
        CHECK_THROWS_AS(pooled_percentiles(r, "t2m", {"all", -90, 90, 0, 360}, {0.0}), InputError);
        CHECK_THROWS_AS(pooled_percentiles(r, "t2m", {"all", -90, 90, 0, 360}, {100.0}), InputError);
    }
}
