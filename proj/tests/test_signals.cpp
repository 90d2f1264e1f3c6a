#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "maneuverlab/error.hpp"
#include "maneuverlab/rng.hpp"
#include "maneuverlab/signals.hpp"
#include "maneuverlab/stationarity.hpp"

using namespace mlab;
using namespace mlab::signals;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
    const auto p = std::filesystem::temp_directory_path() / name;
    std::ofstream(p) << text;
    return p;
}

MultivariateSeries series_of(std::vector<double> lat, std::vector<double> lon) {
    MultivariateSeries s;
    const std::size_t T = lat.size();
    s.values = Matrix(2, T);
    for (std::size_t t = 0; t < T; ++t) {
        s.values(0, t) = lat[t];
        s.values(1, t) = lon[t];
    }
    return s;
}

std::vector<double> white(Rng& rng, std::size_t n) {
    std::vector<double> x(n);
    for (auto& v : x) v = rng.normal();
    return x;
}

std::vector<double> walk(Rng& rng, std::size_t n) {
    std::vector<double> x(n);
    double s = 0.0;
    for (auto& v : x) v = (s += rng.normal());
    return x;
}

}  // namespace

TEST_CASE("load_csv parses features, labels and masks") {
    SUBCASE("plain three rows") {
        const auto p = write_temp("mlab_sig_a.csv", "a_lat,a_lon\n0.1,0.2\n-0.3,0.4\n0.5,-0.6\n");
        const auto s = load_csv(p);
        std::filesystem::remove(p);
        CHECK(s.features() == 2);
        CHECK(s.length() == 3);
        CHECK(s.values(0, 1) == -0.3);
        CHECK(s.values(1, 2) == -0.6);
        CHECK(!s.labels);
        CHECK(s.observed_mask() == Matrix(2, 3, 1.0));
    }
    SUBCASE("state column attaches labels") {
        const auto p = write_temp("mlab_sig_b.csv", "a_lon,state,a_lat\n1,0,2\n3,3,4\n");
        const auto s = load_csv(p);
        std::filesystem::remove(p);
        REQUIRE(s.labels);
        CHECK(*s.labels == std::vector<int>{0, 3});
        CHECK(s.values(0, 0) == 2.0);
        CHECK(s.values(1, 1) == 3.0);
    }
    SUBCASE("NaN cell without mask becomes a masked zero") {
        const auto p = write_temp("mlab_sig_c.csv", "a_lat,a_lon\n1,NaN\n2,3\n");
        const auto s = load_csv(p);
        std::filesystem::remove(p);
        CHECK(s.values(1, 0) == 0.0);
        REQUIRE(s.mask);
        CHECK((*s.mask)(1, 0) == 0.0);
        CHECK((*s.mask)(0, 0) == 1.0);
    }
}

TEST_CASE("load_csv errors") {
    const auto missing = write_temp("mlab_sig_d.csv", "a_lat,x\n1,2\n");
    CHECK_THROWS_AS((void)load_csv(missing), FormatError);
    std::filesystem::remove(missing);

    const auto bad = write_temp("mlab_sig_e.csv", "a_lat,a_lon\n1,2\n3,abc\n");
    try {
        (void)load_csv(bad);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.row() == 2);
    }
    std::filesystem::remove(bad);
}

TEST_CASE("write_csv round trips at full precision") {
    MultivariateSeries s = series_of({1.0 / 3.0, -2.5e-300, 0.0}, {std::nextafter(1.0, 2.0), -0.1, 7.0});
    s.mask = Matrix(2, 3, 1.0);
    (*s.mask)(0, 2) = 0.0;
    s.labels = std::vector<int>{0, 2, 3};
    const auto p = std::filesystem::temp_directory_path() / "mlab_sig_rt.csv";
    write_csv(p, s);
    const auto back = load_csv(p);
    std::filesystem::remove(p);
    CHECK(back.values == s.values);
    CHECK(back.mask == s.mask);
    CHECK(back.labels == s.labels);
}

TEST_CASE("normalize divides by max abs per feature") {
    const auto n = normalize(series_of({2, -4, 1}, {0, 0.5, -0.25}));
    CHECK(n.values.row(0)[0] == 0.5);
    CHECK(n.values.row(0)[1] == -1.0);
    CHECK(n.values.row(0)[2] == 0.25);
    CHECK(n.values(1, 0) == 0.0);
    CHECK(n.values(1, 1) == 1.0);
    CHECK(normalize(n).values == n.values);
    CHECK_THROWS_AS((void)normalize(series_of({0, 0}, {1, 2})), NormalizationError);
}

TEST_CASE("normalize property: bounded, zero preserving, idempotent") {
    Rng rng(8, "norm");
    for (int rep = 0; rep < 20; ++rep) {
        auto lat = white(rng, 40);
        auto lon = white(rng, 40);
        const double scale = std::exp(4.0 * rng.normal());
        for (std::size_t i = 0; i < 40; i += 7) lat[i] = 0.0;
        for (auto& v : lon) v *= scale;
        const auto n = normalize(series_of(lat, lon));
        for (double v : n.values.data) CHECK(std::abs(v) <= 1.0);
        for (std::size_t i = 0; i < 40; i += 7) CHECK(n.values(0, i) == 0.0);
        CHECK(normalize(n).values == n.values);
    }
}

TEST_CASE("make_windows tiles the series") {
    SUBCASE("T = 1957, window 19 gives 103 windows") {
        const auto b = make_windows(series_of(std::vector<double>(1957, 1.0), std::vector<double>(1957, 1.0)), 19);
        CHECK(b.size() == 103);
        CHECK(b.valid_lengths.back() == 19);
    }
    SUBCASE("T = 5, window 2 pads the last window") {
        const auto b = make_windows(series_of({1, 2, 3, 4, 5}, {6, 7, 8, 9, 10}), 2);
        REQUIRE(b.size() == 3);
        CHECK(b.start_indices == std::vector<std::size_t>{0, 2, 4});
        CHECK(b.valid_lengths == std::vector<std::size_t>{2, 2, 1});
        CHECK(b.windows[2](0, 0) == 5.0);
        CHECK(b.windows[2](0, 1) == 0.0);
        CHECK(b.windows[2](1, 1) == 0.0);
        CHECK(b.masks[2](0, 1) == 0.0);
        CHECK(b.masks[2](1, 0) == 1.0);
    }
    SUBCASE("window equal to T gives the series itself") {
        const auto s = series_of({1, 2, 3}, {4, 5, 6});
        const auto b = make_windows(s, 3);
        REQUIRE(b.size() == 1);
        CHECK(b.windows[0] == s.values);
    }
    SUBCASE("errors") {
        const auto s = series_of({1, 2, 3}, {4, 5, 6});
        CHECK_THROWS_AS((void)make_windows(s, 0), ParameterError);
        CHECK_THROWS_AS((void)make_windows(s, 4), ParameterError);
    }
}

TEST_CASE("reassemble inverts make_windows for every window size") {
    Rng rng(2, "reassemble");
    const auto s = series_of(white(rng, 37), white(rng, 37));
    for (std::size_t w = 1; w <= 37; ++w) {
        const auto b = make_windows(s, w);
        CHECK(b.size() == (37 + w - 1) / w);
        for (std::size_t i = 1; i < b.size(); ++i) CHECK(b.start_indices[i] == b.start_indices[i - 1] + w);
        CHECK(reassemble(b) == s.values);
    }
}

TEST_CASE("window_labels takes the majority with ties to the smaller id") {
    const auto s = series_of(std::vector<double>(7, 1.0), std::vector<double>(7, 1.0));
    const auto b = make_windows(s, 4);
    CHECK(window_labels({3, 3, 1, 2, 2, 0, 0}, b) == std::vector<int>{3, 0});
    CHECK(window_labels({1, 2, 2, 1, 3, 3, 3}, b) == std::vector<int>{1, 3});
}

TEST_CASE("synthesize is deterministic and validated") {
    const auto a = synthesize(four_state_preset(3));
    const auto b = synthesize(four_state_preset(3));
    CHECK(a.values == b.values);
    CHECK(a.labels == b.labels);
    CHECK(a.length() == 2000);
    CHECK(a.mask == Matrix(2, 2000, 1.0));
    CHECK(synthesize(four_state_preset(4)).values != a.values);
    REQUIRE(a.labels);
    CHECK((*a.labels)[0] == 0);
    CHECK((*a.labels)[125] == 1);
    CHECK((*a.labels)[250] == 2);
    CHECK((*a.labels)[375] == 3);
    for (double v : a.values.data) CHECK(std::abs(v) <= 1.0);

    CHECK(synthesize(two_state_preset(1)).length() == 2000);
    CHECK_THROWS_AS((void)preset("five-state", 1), ConfigError);
    CHECK_THROWS_AS((void)parse_regime("brownian"), ConfigError);

    SynthConfig bad;
    bad.segments = {{100, Regime::Ar1, Regime::Ar1}};
    bad.missing_rate = 1.0;
    CHECK_THROWS_AS((void)synthesize(bad), ConfigError);
    bad.missing_rate = 0.0;
    bad.phi = 1.0;
    CHECK_THROWS_AS((void)synthesize(bad), ConfigError);
}

TEST_CASE("synthesize missing rate masks values to zero") {
    SynthConfig cfg;
    cfg.segments = {{1000, Regime::Ar1, Regime::RandomWalk}};
    cfg.missing_rate = 0.2;
    cfg.seed = 5;
    const auto s = synthesize(cfg);
    REQUIRE(s.mask);
    std::size_t missing = 0;
    for (std::size_t i = 0; i < s.values.data.size(); ++i) {
        if (s.mask->data[i] == 0.0) {
            ++missing;
            CHECK(s.values.data[i] == 0.0);
        }
    }
    CHECK(missing > 340);
    CHECK(missing < 460);
}

TEST_CASE("synthesized white noise has small lag-one autocorrelation") {
    SynthConfig cfg;
    cfg.segments = {{2000, Regime::Ar1, Regime::Ar1}};
    cfg.phi = 0.0;
    cfg.seed = 12;
    const auto s = synthesize(cfg);
    const auto x = s.values.row(0);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        den += (x[t] - mean) * (x[t] - mean);
        if (t > 0) num += (x[t] - mean) * (x[t - 1] - mean);
    }
    CHECK(std::abs(num / den) < 3.0 / std::sqrt(2000.0));
}

TEST_CASE("synthesized random walks keep the unit root") {
    int kept = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        SynthConfig cfg;
        cfg.segments = {{250, Regime::RandomWalk, Regime::RandomWalk}};
        cfg.seed = seed;
        const auto s = synthesize(cfg);
        kept += stationarity::adf_test(s.values.row(0)).p_value > 0.01 ? 1 : 0;
    }
    CHECK(kept >= 180);
}

TEST_CASE("state ids follow per-feature stationarity") {
    CHECK(state_from_stationarity(true, true) == 0);
    CHECK(state_from_stationarity(false, true) == 1);
    CHECK(state_from_stationarity(true, false) == 2);
    CHECK(state_from_stationarity(false, false) == 3);
}

TEST_CASE("label_states Monte-Carlo examples") {
    int both = 0, total = 0, lon_only = 0, neither = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed, "label");
        const auto a = label_states(series_of(white(rng, 500), white(rng, 500)));
        const auto b = label_states(series_of(walk(rng, 500), white(rng, 500)));
        const auto c = label_states(series_of(walk(rng, 500), walk(rng, 500)));
        for (std::size_t t : {0u, 250u}) {
            ++total;
            both += (*a.labels)[t] == 0 ? 1 : 0;
            lon_only += (*b.labels)[t] == 1 ? 1 : 0;
            neither += (*c.labels)[t] == 3 ? 1 : 0;
        }
    }
    CHECK(both >= 0.9 * total);
    CHECK(lon_only >= 0.75 * total);
    CHECK(neither >= 0.75 * total);
}

TEST_CASE("label_states block structure, convention and errors") {
    Rng rng(30, "label-block");
    const auto s = series_of(white(rng, 620), walk(rng, 620));
    const auto a = label_states(s);
    const auto b = label_states(s);
    CHECK(a.labels == b.labels);
    REQUIRE(a.labels->size() == 620);
    // The 120-step remainder joins the second block.
    for (std::size_t t = 250; t < 620; ++t) CHECK((*a.labels)[t] == (*a.labels)[250]);
    for (std::size_t t = 0; t < 250; ++t) CHECK((*a.labels)[t] == (*a.labels)[0]);

    const auto flipped = label_states(s, 250, 0.01, StationarityConvention::PValueAbove);
    CHECK((*a.labels)[0] == 2);
    CHECK((*flipped.labels)[0] == 1);

    CHECK_THROWS_AS((void)label_states(series_of(white(rng, 100), white(rng, 100))), ParameterError);
}
