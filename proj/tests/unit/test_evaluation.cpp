#include <catch2/catch_amalgamated.hpp>

#include "rhm/evaluation.hpp"

using namespace rhm;

namespace {

DetectionResult det_at_day(uint32_t wheel, int day) {
    return DetectionResult{wheel, "d", true,
                           static_cast<uint64_t>(day) * kSecondsPerDay + 3600};
}

DetectionResult no_det(uint32_t wheel) { return DetectionResult{wheel, "d", false, std::nullopt}; }

}  // namespace

TEST_CASE("delay metrics: green, orange, red, missed") {
    ZoneAnnotation ann{50, 100, 140};

    auto green = delay_metrics(det_at_day(1, 47), ann);
    REQUIRE(green.zone == Zone::Green);
    REQUIRE(green.dt_days == -3);
    REQUIRE_FALSE(green.dr.has_value());

    auto orange = delay_metrics(det_at_day(1, 75), ann);
    REQUIRE(orange.zone == Zone::Orange);
    REQUIRE(orange.dt_days == 0);

    // red-start day 100, monitoring end 140, detection day 110 -> dt 10, dr 0.25
    auto red = delay_metrics(det_at_day(1, 110), ann);
    REQUIRE(red.zone == Zone::Red);
    REQUIRE(red.dt_days == 10);
    REQUIRE(red.dr.has_value());
    REQUIRE(*red.dr == Catch::Approx(0.25));

    auto missed = delay_metrics(no_det(1), ann);
    REQUIRE(missed.zone == Zone::Missed);
}

TEST_CASE("delay metrics boundary days") {
    ZoneAnnotation ann{50, 100, 140};
    REQUIRE(delay_metrics(det_at_day(1, 50), ann).zone == Zone::Orange);
    REQUIRE(delay_metrics(det_at_day(1, 49), ann).dt_days == -1);
    // red-start day itself is dt = 0, which the zone rule maps to orange
    REQUIRE(delay_metrics(det_at_day(1, 100), ann).zone == Zone::Orange);
    auto last = delay_metrics(det_at_day(1, 140), ann);
    REQUIRE(last.zone == Zone::Red);
    REQUIRE(*last.dr == Catch::Approx(1.0));
}

TEST_CASE("balanced accuracy reproduces the published arithmetic") {
    REQUIRE(balanced_accuracy({63, 16, 1, 15}) == Catch::Approx(0.867).margin(0.0005));
    REQUIRE(balanced_accuracy({71, 8, 2, 14}) == Catch::Approx(0.887).margin(0.0005));
    REQUIRE(balanced_accuracy({10, 0, 0, 10}) == Catch::Approx(1.0));
    REQUIRE_THROWS_AS(balanced_accuracy({0, 0, 3, 7}), DataError);
}

TEST_CASE("multi-class balanced accuracy is the mean of recalls") {
    // Three classes, diagonal recalls 1.0, 0.5, 0.25
    std::vector<std::vector<int>> confusion = {{4, 0, 0}, {1, 1, 0}, {0, 3, 1}};
    REQUIRE(balanced_accuracy_multi(confusion) ==
            Catch::Approx((1.0 + 0.5 + 0.25) / 3.0));
    REQUIRE_THROWS_AS(balanced_accuracy_multi({{1, 0}, {0, 0}}), DataError);
}

TEST_CASE("report assembly on a hand-built three-wheel scenario") {
    std::vector<GroundTruthWheel> truth;
    for (uint32_t w = 1; w <= 3; ++w) {
        GroundTruthWheel gt;
        gt.wheel_id = w;
        gt.fault = FaultAssignment{w, FaultKind::Shelling, 50, 100};
        gt.annotation = ZoneAnnotation{50, 100, 140};
        truth.push_back(gt);
    }
    GroundTruthWheel healthy;
    healthy.wheel_id = 4;
    truth.push_back(healthy);

    std::map<std::string, std::vector<DetectionResult>> dets;
    dets["d"] = {det_at_day(1, 30), det_at_day(2, 70), det_at_day(3, 120), no_det(4)};

    auto report = build_report(dets, truth);
    REQUIRE(report.defective_wheels == 3);
    REQUIRE(report.healthy_wheels == 1);
    const auto& d = report.detectors.at(0);
    REQUIRE(d.zones.green == 1);
    REQUIRE(d.zones.orange == 1);
    REQUIRE(d.zones.red == 1);
    REQUIRE(d.confusion.tp == 3);
    REQUIRE(d.confusion.tn == 1);
    REQUIRE(d.confusion.total() == 4);
    REQUIRE(d.dr_buckets.upto_05 == 1);  // day 120 -> dt 20, dr = 20/40 = 0.5
    REQUIRE(d.dr_buckets.above_05 == 0);
}

TEST_CASE("report totals: FN + TP equals defective wheel count") {
    std::vector<GroundTruthWheel> truth;
    for (uint32_t w = 1; w <= 5; ++w) {
        GroundTruthWheel gt;
        gt.wheel_id = w;
        if (w <= 3) {
            gt.fault = FaultAssignment{w, FaultKind::Crack, 40, 80};
            gt.annotation = ZoneAnnotation{40, 80, 120};
        }
        truth.push_back(gt);
    }
    std::map<std::string, std::vector<DetectionResult>> dets;
    dets["d"] = {det_at_day(1, 90), no_det(2), no_det(3), no_det(4), det_at_day(5, 10)};
    auto report = build_report(dets, truth);
    const auto& d = report.detectors.at(0);
    REQUIRE(d.confusion.tp + d.confusion.fn == 3);
    REQUIRE(d.confusion.fp == 1);
    // every detected defective wheel lands in exactly one zone
    REQUIRE(d.zones.green + d.zones.orange + d.zones.red == d.confusion.tp);
}

TEST_CASE("all-healthy fleet leaves balanced accuracy undefined") {
    std::vector<GroundTruthWheel> truth(3);
    for (uint32_t w = 0; w < 3; ++w) truth[w].wheel_id = w + 1;
    std::map<std::string, std::vector<DetectionResult>> dets;
    dets["d"] = {no_det(1), no_det(2), no_det(3)};
    auto report = build_report(dets, truth);
    REQUIRE_FALSE(report.detectors.at(0).balanced_accuracy.has_value());
    REQUIRE(report.detectors.at(0).confusion.tn == 3);
}

TEST_CASE("detection for an unknown wheel is an error") {
    std::vector<GroundTruthWheel> truth(1);
    truth[0].wheel_id = 1;
    std::map<std::string, std::vector<DetectionResult>> dets;
    dets["d"] = {no_det(99)};
    REQUIRE_THROWS_AS(build_report(dets, truth), DataError);
}
