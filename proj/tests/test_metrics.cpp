#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "xvlab/metrics.hpp"
#include "xvlab/rng.hpp"
#include "support/oracles.hpp"

using namespace xvlab;

namespace {

TrialRecord rec(std::string truth, std::string predicted, bool present = true) {
    TrialRecord r;
    r.truth = std::move(truth);
    r.outcome.predicted_id = std::move(predicted);
    r.present_truth = present;
    return r;
}

}  // namespace

TEST_CASE("accuracy counts exact id matches", "[metrics]") {
    std::vector<TrialRecord> records;
    records.push_back(rec("a", "a"));
    records.push_back(rec("b", "a"));
    records.push_back(rec("c", "c"));
    records.push_back(rec("d", "d"));
    REQUIRE(accuracy(records) == Catch::Approx(0.75).margin(1e-15));
}

TEST_CASE("accuracy rejects empty and open-world inputs", "[metrics]") {
    REQUIRE_THROWS_AS(accuracy({}), std::invalid_argument);
    std::vector<TrialRecord> with_absent;
    with_absent.push_back(rec("a", "a"));
    with_absent.push_back(rec(kAbsentMarker, "a", false));
    REQUIRE_THROWS_AS(accuracy(with_absent), std::invalid_argument);
}

TEST_CASE("roc of perfect separation has unit area and zero eer", "[metrics]") {
    const std::vector<double> present{0.1, 0.2, 0.3};
    const std::vector<double> absent{0.8, 0.9, 1.1};
    const RocCurve curve = roc_curve(present, absent);
    REQUIRE(auc(curve) == Catch::Approx(1.0).margin(1e-15));
    const EerEstimate e = eer(curve);
    REQUIRE(e.value == Catch::Approx(0.0).margin(1e-15));
    REQUIRE(e.residual == 0.0);
}

TEST_CASE("roc of identical score lists has half area", "[metrics]") {
    const std::vector<double> scores{0.2, 0.4, 0.6, 0.8};
    const RocCurve curve = roc_curve(scores, scores);
    REQUIRE(auc(curve) == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("interleaved example freezes area and eer", "[metrics]") {
    // present {1, 3}, absent {2, 4}: the swept curve passes through
    // (0, .5), (.5, .5), (.5, 1), giving area 3/4 and an exact crossing
    // at fpr = fnr = 1/2.
    const std::vector<double> present{1.0, 3.0};
    const std::vector<double> absent{2.0, 4.0};
    const RocCurve curve = roc_curve(present, absent);
    REQUIRE(auc(curve) == Catch::Approx(0.75).margin(1e-15));
    const EerEstimate e = eer(curve);
    REQUIRE(e.value == Catch::Approx(0.5).margin(1e-15));
    REQUIRE(e.residual == 0.0);
}

TEST_CASE("eer interpolates across a jump", "[metrics]") {
    // present {1, 2, 4}, absent {3}: fpr - fnr jumps from -1/3 to +2/3
    // between thresholds 2 and 3, crossing at 1/3.
    const std::vector<double> present{1.0, 2.0, 4.0};
    const std::vector<double> absent{3.0};
    const EerEstimate e = eer(present, absent);
    REQUIRE(e.value == Catch::Approx(1.0 / 3.0).margin(1e-12));
    REQUIRE(e.residual == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("anti-separated scores give the worst detector", "[metrics]") {
    const std::vector<double> present{2.0};
    const std::vector<double> absent{1.0};
    const RocCurve curve = roc_curve(present, absent);
    REQUIRE(auc(curve) == Catch::Approx(0.0).margin(1e-15));
    const EerEstimate e = eer(curve);
    REQUIRE(e.value == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("roc curve is monotone from origin to corner", "[metrics]") {
    RandomStream rng(42);
    std::vector<double> present(200), absent(200);
    for (double& v : present) v = rng.gaussian(1.0);
    for (double& v : absent) v = 0.8 + rng.gaussian(1.0);
    const RocCurve curve = roc_curve(present, absent);
    REQUIRE(curve.points.front().fpr == 0.0);
    REQUIRE(curve.points.front().tpr == 0.0);
    REQUIRE(curve.points.back().fpr == 1.0);
    REQUIRE(curve.points.back().tpr == 1.0);
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        REQUIRE(curve.points[i].fpr >= curve.points[i - 1].fpr);
        REQUIRE(curve.points[i].tpr >= curve.points[i - 1].tpr);
    }
}

TEST_CASE("trapezoid area matches the pair-counting oracle", "[metrics]") {
    RandomStream rng(7);
    // Quantized scores force plenty of exact ties across the two classes.
    std::vector<double> present(300), absent(300);
    for (double& v : present) v = std::floor(rng.gaussian(1.0) * 4.0) / 4.0;
    for (double& v : absent) v = std::floor((0.5 + rng.gaussian(1.0)) * 4.0) / 4.0;
    const double area = auc(roc_curve(present, absent));
    // The pair count takes (negative, positive) in score order; the curve's
    // positive class is the low-score present class.
    const double want = oracle::auc_by_pair_count(present, absent);
    REQUIRE(area == Catch::Approx(want).margin(1e-9));
}

TEST_CASE("roc rejects an empty class", "[metrics]") {
    REQUIRE_THROWS_AS(roc_curve({}, {1.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(roc_curve({1.0}, {}), std::invalid_argument);
}

TEST_CASE("utility proxy is the cosine distance", "[metrics]") {
    const XVector a{1, 2, 2};
    const XVector b{2, 1, 2};
    REQUIRE(utility_proxy(a, b) == Catch::Approx(cosine_distance(a, b)).margin(1e-15));
    REQUIRE(utility_proxy(a, a) == Catch::Approx(0.0).margin(1e-15));
}
