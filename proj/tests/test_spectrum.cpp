#include <doctest.h>

#include <cmath>
#include <random>

#include "shapr/error.hpp"
#include "shapr/spectrum.hpp"
#include "support.hpp"

using namespace shapr;

namespace {

// straight transcription of the power formula, long double accumulation
double oracle_power(const std::vector<std::uint8_t>& b) {
    long double sum = 0;
    for (auto v : b) {
        const long double x = static_cast<long double>(v) / 127.5L - 1.0L;
        sum += x * x;
    }
    return static_cast<double>(10.0L * std::log10(sum / (static_cast<long double>(b.size()) / 2.0L)));
}

IqFrame frame(std::vector<std::uint8_t> bytes, std::uint64_t freq = 300'000'000, SensorId id = 1) {
    return {id, freq, 2'400'000, std::move(bytes)};
}

}  // namespace

TEST_SUITE("spectrum") {

TEST_CASE("full scale alternating bytes give 10 log10 2") {
    CHECK(band_average_power(frame({0, 255, 0, 255})) == doctest::Approx(3.0103).epsilon(1e-5));
    CHECK(band_average_power(frame({0, 255, 0, 255})) == doctest::Approx(10.0 * std::log10(2.0)).epsilon(1e-12));
}

TEST_CASE("near-midpoint bytes") {
    // every value is +-1/255
    CHECK(band_average_power(frame({128, 127, 128, 127})) == doctest::Approx(-45.1205).epsilon(1e-5));
}

TEST_CASE("power matches oracle on random frames") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> byte(0, 255);
    for (int t = 0; t < 200; ++t) {
        std::vector<std::uint8_t> b(4800);
        for (auto& v : b) v = static_cast<std::uint8_t>(byte(rng));
        const double got = band_average_power(frame(b));
        const double want = oracle_power(b);
        CHECK(std::abs(got - want) <= 1e-9 * std::abs(want));
    }
}

TEST_CASE("bad frames are rejected") {
    CHECK_THROWS_AS(band_average_power(frame({1, 2, 3})), IngestError);
    CHECK_THROWS_AS(band_average_power(frame({})), IngestError);
    CHECK_THROWS_AS(band_average_power(frame({7})), IngestError);
}

TEST_CASE("band plan") {
    BandPlan p;
    CHECK(p.band_count() == 101);
    const auto c = band_centers(p);
    CHECK(c.front() == 300'000'000);
    CHECK(c.back() == 420'000'000);
    CHECK(c[1] == 301'200'000);
    CHECK(band_centers({300'000'000, 303'600'000, 1'200'000}).size() == 4);
    CHECK_THROWS_AS(BandPlan({300, 300, 1}).validate(), ConfigError);
    CHECK_THROWS_AS(BandPlan({300, 400, 0}).validate(), ConfigError);
    CHECK_THROWS_AS(BandPlan({300, 400, 30}).validate(), ConfigError);
}

TEST_CASE("assemble sweep ignores frame order") {
    const BandPlan plan{300'000'000, 303'600'000, 1'200'000};
    std::vector<IqFrame> frames;
    for (std::int64_t f : band_centers(plan)) {
        const auto level = static_cast<std::uint8_t>(128 + (f - 300'000'000) / 100'000);
        frames.push_back(frame({level, 127, level, 127}, static_cast<std::uint64_t>(f), 3));
    }
    const auto fwd = assemble_sweep(frames, plan);
    std::reverse(frames.begin(), frames.end());
    const auto rev = assemble_sweep(frames, plan);
    CHECK(fwd.powers_db == rev.powers_db);
    CHECK(fwd.sensor_id == 3);
    REQUIRE(fwd.powers_db.size() == 4);
    CHECK(fwd.powers_db[0] < fwd.powers_db[3]);
}

TEST_CASE("assemble sweep names the offending band") {
    const BandPlan plan{300'000'000, 303'600'000, 1'200'000};
    std::vector<IqFrame> frames;
    for (std::int64_t f : band_centers(plan)) frames.push_back(frame({0, 255}, static_cast<std::uint64_t>(f)));
    auto missing = frames;
    missing.pop_back();
    try {
        assemble_sweep(missing, plan);
        FAIL("expected an error");
    } catch (const IngestError& e) {
        CHECK(std::string(e.what()).find("303600000") != std::string::npos);
    }
    auto dup = frames;
    dup.push_back(frames[1]);
    CHECK_THROWS_AS(assemble_sweep(dup, plan), IngestError);
    auto off = frames;
    off[2].center_freq_hz += 1;
    CHECK_THROWS_AS(assemble_sweep(off, plan), IngestError);
    auto mixed = frames;
    mixed[0].sensor_id = 9;
    CHECK_THROWS_AS(assemble_sweep(mixed, plan), IngestError);
}

TEST_CASE("stack features is sensor-major by ascending id") {
    const BandPlan plan{300'000'000, 302'400'000, 1'200'000};
    std::vector<SpectrumSweep> sweeps{{5, plan, {50, 51, 52}}, {2, plan, {20, 21, 22}}};
    const auto fv = stack_features(sweeps);
    CHECK(fv.values == std::vector<double>{20, 21, 22, 50, 51, 52});
    CHECK(fv.sensor_count == 2);
    CHECK(fv.bands_per_sensor == 3);
    sweeps.push_back({2, plan, {1, 2, 3}});
    CHECK_THROWS(stack_features(sweeps));
}

TEST_CASE("default plan with five sensors gives 505 features") {
    BandPlan plan;
    std::vector<SpectrumSweep> sweeps;
    for (SensorId s = 1; s <= 5; ++s) sweeps.push_back({s, plan, std::vector<double>(plan.band_count(), -20.0)});
    CHECK(stack_features(sweeps).size() == 505);
}

TEST_CASE("normalizer") {
    const std::vector<std::vector<double>> train{{1, 10}, {3, 10}};
    const auto n = Normalizer::fit(train);
    const auto z = n.apply(std::vector<double>{3, 10});
    CHECK(z[0] == doctest::Approx(1.0));
    CHECK(z[1] == doctest::Approx(0.0));
    CHECK(n.stddev()[1] == 1.0);
    const auto back = n.invert(z);
    CHECK(back[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(back[1] == doctest::Approx(10.0).epsilon(1e-12));
    CHECK_THROWS(Normalizer::fit(std::vector<std::vector<double>>{{1.0}}));
}

TEST_CASE("normalized training set has zero mean and unit spread") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(-20.0, 4.0);
    std::vector<std::vector<double>> rows(30, std::vector<double>(6));
    for (auto& r : rows) for (auto& v : r) v = g(rng);
    const auto n = Normalizer::fit(rows);
    for (std::size_t j = 0; j < 6; ++j) {
        double s = 0, s2 = 0;
        for (const auto& r : rows) {
            const double z = n.apply(r)[j];
            s += z;
            s2 += z * z;
        }
        CHECK(std::abs(s / 30) < 1e-9);
        CHECK(std::abs(std::sqrt(s2 / 30) - 1.0) < 1e-9);
    }
}

TEST_CASE("iq file round trip") {
    test::TempDir dir("iq");
    IqFrame f{4, 355'200'000, 2'400'000, {0, 1, 2, 250, 255, 128}};
    write_iq_file(dir / "f.shiq", f);
    CHECK(read_iq_file(dir / "f.shiq") == f);
    const auto blob = encode_iq_frame(f);
    CHECK(blob.substr(0, 4) == "SHIQ");
    CHECK(blob.size() == 28 + 6);
    CHECK_THROWS_AS(decode_iq_frame(blob.substr(0, blob.size() - 1)), ParseError);
    CHECK_THROWS_AS(decode_iq_frame("XXXX" + blob.substr(4)), ParseError);
}

TEST_CASE("sweep csv round trip") {
    const BandPlan plan{300'000'000, 302'400'000, 1'200'000};
    const SpectrumSweep s{2, plan, {-20.125, -21.5, -19.0000001}};
    const auto back = sweep_from_csv(sweep_to_csv(s));
    CHECK(back.sensor_id == 2);
    CHECK(back.band_plan == plan);
    CHECK(back.powers_db == s.powers_db);
}

}
