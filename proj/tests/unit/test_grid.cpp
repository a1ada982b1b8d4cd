#include <catch_amalgamated.hpp>

#include <numeric>
#include <sstream>

#include "helpers.hpp"
#include "rollstab/rgf.hpp"

using namespace rollstab;
using Catch::Approx;

TEST_CASE("latitude weights", "[grid]") {
    SECTION("single equatorial row") {
        GridSpec g({0.0}, {0.0, 90.0, 180.0, 270.0});
        REQUIRE(latitude_weights(g) == std::vector<double>{1.0});
    }
    SECTION("symmetric rows") {
        GridSpec g({60.0, -60.0}, {0.0, 180.0});
        const auto w = latitude_weights(g);
        CHECK(w[0] == Approx(0.5));
        CHECK(w[1] == Approx(0.5));
    }
    SECTION("quarter-degree grid sums to one") {
        const auto g = GridSpec::equiangular(0.25);
        REQUIRE(g.n_lat() == 721);
        REQUIRE(g.n_lon() == 1440);
        const auto w = latitude_weights(g);
        CHECK(std::abs(std::accumulate(w.begin(), w.end(), 0.0) - 1.0) < 1e-12);
        CHECK(w.front() == 0.0);
        CHECK(w.back() == 0.0);
    }
    SECTION("reversal permutes weights") {
        auto g = GridSpec::centred(9, 8);
        auto lats = g.lats();
        std::reverse(lats.begin(), lats.end());
        GridSpec rev(lats, g.lons());
        auto a = latitude_weights(g), b = latitude_weights(rev);
        std::reverse(b.begin(), b.end());
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == Approx(b[i]).epsilon(1e-14));
    }
}

TEST_CASE("grid validation", "[grid]") {
    CHECK_THROWS_AS(GridSpec({0.0, 0.0}, {0.0, 180.0}), InputError);
    CHECK_THROWS_AS(GridSpec({95.0}, {0.0, 180.0}), InputError);
    CHECK_THROWS_AS(GridSpec({0.0}, {0.0, 100.0, 180.0}), InputError);
    CHECK_NOTHROW(GridSpec({10.0, 0.0, -10.0}, {0.0, 120.0, 240.0}));
}

TEST_CASE("spatial extremes", "[grid]") {
    const auto g = GridSpec::centred(6, 12);
    SECTION("constant field") {
        RolloutSeries r(g, {"x"}, parse_iso8601("2021-01-01"), kSixHours, 3, std::vector<float>(3 * g.size(), 5.0f));
        const auto e = spatial_extremes(r, "x");
        for (std::size_t t = 0; t < 3; ++t) {
            CHECK(e.min[t] == 5.0);
            CHECK(e.max[t] == 5.0);
        }
    }
    SECTION("single spike") {
        RolloutSeries r(g, {"x"}, parse_iso8601("2021-01-01"), kSixHours, 1);
        r.field(0, 0)[17] = 100.0f;
        const auto e = spatial_extremes(r, "x");
        CHECK(e.max[0] == 100.0);
        CHECK(e.min[0] == 0.0);
    }
    SECTION("random field matches scan and brackets the area mean") {
        const auto r = testing::random_rollout(g, 20, 4, {"a", "b"});
        const auto e = spatial_extremes(r, "b");
        const auto m = area_mean(r, "b");
        for (std::size_t t = 0; t < 20; ++t) {
            double lo = 1e300, hi = -1e300;
            for (std::size_t c = 0; c < g.size(); ++c) {
                lo = std::min<double>(lo, r.data()[(t * 2 + 1) * g.size() + c]);
                hi = std::max<double>(hi, r.data()[(t * 2 + 1) * g.size() + c]);
            }
            CHECK(e.min[t] == lo);
            CHECK(e.max[t] == hi);
            CHECK(e.min[t] <= m[t]);
            CHECK(m[t] <= e.max[t]);
        }
    }
    SECTION("unknown variable names the available ones") {
        const auto r = testing::random_rollout(g, 2, 1, {"t2m", "z500"});
        try {
            spatial_extremes(r, "u10");
            FAIL("expected an error");
        } catch (const InputError& e) {
            CHECK(std::string(e.what()).find("z500") != std::string::npos);
        }
    }
    SECTION("NaN rejected") {
        auto r = testing::random_rollout(g, 2, 1);
        r.field(1, 0)[3] = std::numeric_limits<float>::quiet_NaN();
        CHECK_THROWS_AS(spatial_extremes(r, "t2m"), InputError);
    }
    SECTION("fill value rejected") {
        RolloutSeries r(g, {"x"}, parse_iso8601("2021-01-01"), kSixHours, 1, {}, -999.0f);
        r.field(0, 0)[0] = -999.0f;
        CHECK_THROWS_AS(spatial_extremes(r, "x"), InputError);
    }
}

TEST_CASE("region masks", "[grid]") {
    SECTION("global region covers every cell") {
        const auto g = GridSpec::centred(18, 36);
        const auto m = region_mask(g, {"globe", -90, 90, 0, 360});
        CHECK(m.count == g.size());
    }
    SECTION("amazon on the quarter-degree grid matches a scan") {
        const auto g = GridSpec::equiangular(0.25);
        const auto amazon = find_region(builtin_regions(), "amazon");
        const auto m = region_mask(g, amazon);
        std::size_t count = 0;
        for (double lat : g.lats())
            for (double lon : g.lons()) {
                const double west = lon > 180 ? lon - 360 : lon;
                if (lat >= -15 && lat <= 5 && west >= -70 && west <= -45) ++count;
            }
        CHECK(m.count == count);
        CHECK(count == 81 * 101);
    }
    SECTION("wrapping region equals the union of two halves") {
        const auto g = GridSpec::centred(10, 72);
        const auto wrap = region_mask(g, {"w", -30, 30, 350, 10});
        const auto a = region_mask(g, {"a", -30, 30, 350, 360});
        const auto b = region_mask(g, {"b", -30, 30, 0, 10});
        std::size_t n = 0;
        for (std::size_t c = 0; c < g.size(); ++c) {
            CHECK(bool(wrap.cells[c]) == (a.cells[c] || b.cells[c]));
            n += wrap.cells[c];
        }
        CHECK(n == wrap.count);
    }
    SECTION("empty mask is an error") {
        const auto g = GridSpec::centred(4, 8);
        CHECK_THROWS_AS(region_mask(g, {"tiny", 1.0, 2.0, 3.0, 4.0}), InputError);
    }
    SECTION("region JSON round trip") {
        nlohmann::json j = {{"regions", {{{"name", "box"}, {"lat_min", 0}, {"lat_max", 10}, {"lon_min", -20}, {"lon_max", 20}}}}};
        const auto rs = regions_from_json(j);
        REQUIRE(rs.size() == 1);
        CHECK(rs[0].name == "box");
        CHECK(rs[0].lon_min == -20);
    }
}

TEST_CASE("RGF container", "[rgf]") {
    const auto g = GridSpec::centred(5, 8);
    auto r = testing::random_rollout(g, 10, 9, {"t2m", "msl"});
    r.attributes()["note"] = "x";

    SECTION("round trip is bit exact") {
        std::stringstream ss;
        write_rollout(r, ss);
        const auto back = read_rollout(ss);
        CHECK(back.grid() == r.grid());
        CHECK(back.variables() == r.variables());
        CHECK(back.start_time() == r.start_time());
        CHECK(back.step_seconds() == r.step_seconds());
        CHECK(back.attributes() == r.attributes());
        REQUIRE(back.data().size() == r.data().size());
        CHECK(std::memcmp(back.data().data(), r.data().data(), r.data().size_bytes()) == 0);
    }
    SECTION("missing timestep is truncation") {
        std::stringstream ss;
        write_rollout(r, ss);
        auto bytes = ss.str();
        bytes.resize(bytes.size() - 2 * g.size() * 4);
        std::stringstream in(bytes);
        CHECK_THROWS_AS(read_rollout(in), TruncatedError);
    }
    SECTION("bad magic is a format error") {
        std::stringstream ss;
        write_rollout(r, ss);
        auto bytes = ss.str();
        bytes[0] = 'X';
        std::stringstream in(bytes);
        CHECK_THROWS_AS(read_rollout(in), FormatError);
    }
    SECTION("header/dims disagreement is a dimension error") {
        auto h = rgf_header(r);
        h["dims"]["lat"] = 6;
        const auto text = h.dump();
        std::stringstream ss;
        ss.write("RGF1", 4);
        std::uint64_t n = text.size();
        ss.write(reinterpret_cast<const char*>(&n), 8);
        ss << text;
        ss.write(reinterpret_cast<const char*>(r.data().data()), static_cast<std::streamsize>(r.data().size_bytes()));
        CHECK_THROWS_AS(read_rollout(ss), DimensionError);
    }
    SECTION("series CSV with comments and header") {
        std::stringstream in("# units: K\ntimestamp,value\n2021-01-01T00:00:00Z,1.5\n2021-01-01T06:00:00Z,2.5\n");
        const auto s = read_series_csv(in);
        REQUIRE(s.values.size() == 2);
        CHECK(s.values[1] == 2.5);
        CHECK(s.times[1] - s.times[0] == std::chrono::hours{6});
    }
}

TEST_CASE("calendar helpers", "[time]") {
    CHECK(day_bucket(parse_iso8601("2020-02-29")) == day_bucket(parse_iso8601("2021-02-28")));
    CHECK(day_bucket(parse_iso8601("2020-03-01")) == day_bucket(parse_iso8601("2021-03-01")));
    CHECK(day_bucket(parse_iso8601("2020-12-31T18:00:00")) == 364);
    CHECK(circular_bucket_distance(day_bucket(parse_iso8601("2021-12-28")), day_bucket(parse_iso8601("2021-01-05"))) == 8);
    CHECK(format_iso8601(parse_iso8601("1999-07-04T06:30:00Z")) == "1999-07-04T06:30:00Z");
    CHECK_THROWS_AS(parse_iso8601("2021-13-01"), InputError);
}
