#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rhm/detection.hpp"
#include "rhm/rng.hpp"
#include "rhm/signal_prep.hpp"

using namespace rhm;

namespace {

Measurement make_measurement(const std::array<std::vector<float>, kSensorCount>& segments) {
    Measurement m;
    m.wheel_id = 1;
    m.load = 100.0f;
    m.speed_kmh = 80.0f;
    m.segments = segments;
    return m;
}

}  // namespace

TEST_CASE("concatenation joins eight segments in sensor order") {
    std::array<std::vector<float>, kSensorCount> segs;
    for (int s = 0; s < kSensorCount; ++s) segs[s] = {static_cast<float>(s + 1)};
    auto joined = concatenate_sensors(make_measurement(segs));
    REQUIRE(joined == std::vector<float>{1, 2, 3, 4, 5, 6, 7, 8});

    for (int s = 0; s < kSensorCount; ++s) segs[s].assign(128, 1.0f);
    REQUIRE(concatenate_sensors(make_measurement(segs)).size() == 1024);
}

TEST_CASE("a missing segment is a data error naming the sensor") {
    std::array<std::vector<float>, kSensorCount> segs;
    for (int s = 0; s < kSensorCount; ++s) segs[s] = {1.0f};
    segs[5].clear();
    try {
        concatenate_sensors(make_measurement(segs));
        FAIL("expected DataError");
    } catch (const DataError& e) {
        REQUIRE(std::string(e.what()).find("5") != std::string::npos);
    }
}

TEST_CASE("linear resampling hits the stated ramp and preserves endpoints") {
    auto out = resample_linear({0.0f, 10.0f}, 5);
    REQUIRE(out.size() == 5);
    REQUIRE(out[0] == 0.0f);
    REQUIRE(out[1] == Catch::Approx(2.5));
    REQUIRE(out[2] == Catch::Approx(5.0));
    REQUIRE(out[3] == Catch::Approx(7.5));
    REQUIRE(out[4] == 10.0f);

    // identity when already at target length
    std::vector<float> sig(1024);
    Rng rng(3);
    for (auto& v : sig) v = static_cast<float>(rng.uniform(0.0, 2.0));
    auto same = resample_linear(sig, 1024);
    for (std::size_t i = 0; i < sig.size(); ++i)
        REQUIRE(same[i] == Catch::Approx(sig[i]).margin(1e-6));

    // endpoints always exact
    auto shrunk = resample_linear(sig, 300);
    REQUIRE(shrunk.front() == sig.front());
    REQUIRE(shrunk.back() == sig.back());

    REQUIRE_THROWS_AS(resample_linear({1.0f}, 10), DataError);
}

TEST_CASE("normalize_load divides by the mean") {
    auto out = normalize_load({2.0f, 4.0f, 6.0f});
    REQUIRE(out[0] == Catch::Approx(0.5));
    REQUIRE(out[1] == Catch::Approx(1.0));
    REQUIRE(out[2] == Catch::Approx(1.5));

    REQUIRE(normalize_load({5.0f, 5.0f, 5.0f}) == std::vector<float>{1.0f, 1.0f, 1.0f});

    // scale invariance
    std::vector<float> x = {1.0f, 3.0f, 2.0f, 6.0f};
    std::vector<float> cx = {2.5f, 7.5f, 5.0f, 15.0f};
    auto nx = normalize_load(x);
    auto ncx = normalize_load(cx);
    for (std::size_t i = 0; i < x.size(); ++i)
        REQUIRE(ncx[i] == Catch::Approx(nx[i]).margin(1e-6));

    REQUIRE_THROWS_AS(normalize_load({-1.0f, -2.0f}), DataError);
}

TEST_CASE("pipeline is invariant to load scale and speed stretch") {
    // same underlying wheel profile (smooth low-order harmonics, as a real
    // tread is), different amplitude and sampling density
    Rng rng(11);
    double amp[8], phase[8];
    for (int k = 0; k < 8; ++k) {
        amp[k] = 0.03 * rng.uniform(0.3, 1.0);
        phase[k] = rng.uniform(0.0, 6.283185307179586);
    }
    auto profile = [&](double theta) {
        double v = 1.0;
        for (int k = 0; k < 8; ++k) v += amp[k] * std::sin((k + 1) * theta + phase[k]);
        return v;
    };
    auto sample_profile = [&](int total_len, double amplitude) {
        std::array<std::vector<float>, kSensorCount> segs;
        const int per = total_len / kSensorCount;
        for (int s = 0; s < kSensorCount; ++s) {
            segs[s].resize(per);
            for (int i = 0; i < per; ++i) {
                const double theta = static_cast<double>(s * per + i) /
                                     static_cast<double>(kSensorCount * per - 1) *
                                     6.283185307179586;
                segs[s][static_cast<std::size_t>(i)] =
                    static_cast<float>(amplitude * profile(theta));
            }
        }
        return make_measurement(segs);
    };

    auto a = prepare(sample_profile(1600, 1.0));
    auto b = prepare(sample_profile(2400, 3.7));  // slower pass, heavier load
    REQUIRE(a.values.size() == kPreparedLength);
    REQUIRE(b.values.size() == kPreparedLength);

    double mean = 0.0;
    for (float v : a.values) mean += v;
    mean /= kPreparedLength;
    REQUIRE(mean == Catch::Approx(1.0).margin(1e-6));

    double rms = 0.0;
    for (int i = 0; i < kPreparedLength; ++i) {
        const double d = static_cast<double>(a.values[i]) - b.values[i];
        rms += d * d;
    }
    rms = std::sqrt(rms / kPreparedLength);
    REQUIRE(rms < 1e-3);
}

TEST_CASE("normalization preserves dynCoeff") {
    std::vector<float> sig = {80.0f, 120.0f, 100.0f, 300.0f, 95.0f};
    const double before = dyn_coeff(sig);
    auto norm = normalize_load(sig);
    const double after = dyn_coeff(norm);
    REQUIRE(after == Catch::Approx(before).margin(1e-6));
    // on a normalized signal the coefficient is just the maximum
    double mx = 0.0;
    for (float v : norm) mx = std::max(mx, static_cast<double>(v));
    REQUIRE(after == Catch::Approx(mx).margin(1e-6));
}
