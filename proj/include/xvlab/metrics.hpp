#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "xvlab/attack.hpp"
#include "xvlab/embedding.hpp"

namespace xvlab {

/// Marker used in the truth field of trials where the target speaker is
/// not among the candidates.
inline const std::string kAbsentMarker = "-";

struct TrialRecord {
    std::string truth;  // candidate id, or kAbsentMarker
    AttackOutcome outcome;
    bool present_truth = true;
};

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

/// Operating points swept over score thresholds, from (0, 0) to (1, 1),
/// non-decreasing in both coordinates.
struct RocCurve {
    std::vector<RocPoint> points;
};

struct EerEstimate {
    double value = 0.0;
    double residual = 0.0;  // |fpr - fnr| actually achieved at the reported point
};

/// Closed-world identification accuracy. Errors if any record is an
/// open-world one (absent target), since accuracy is undefined there.
inline double accuracy(const std::vector<TrialRecord>& records) {
    if (records.empty()) {
        throw std::invalid_argument("accuracy: no records");
    }
    std::size_t correct = 0;
    for (const TrialRecord& r : records) {
        if (!r.present_truth || r.truth == kAbsentMarker) {
            throw std::invalid_argument("accuracy: open-world record");
        }
        if (r.outcome.predicted_id == r.truth) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(records.size());
}

/**
 * ROC of the detector "declare present when score <= t". present_scores
 * are scores of trials where the target really is among the candidates,
 * absent_scores where it is not; lower scores mean stronger presence
 * evidence. Thresholds sweep the distinct pooled scores.
 */
inline RocCurve roc_curve(const std::vector<double>& present_scores,
                          const std::vector<double>& absent_scores) {
    if (present_scores.empty() || absent_scores.empty()) {
        throw std::invalid_argument("roc_curve: need scores from both classes");
    }
    std::vector<double> present = present_scores;
    std::vector<double> absent = absent_scores;
    std::sort(present.begin(), present.end());
    std::sort(absent.begin(), absent.end());
    std::vector<double> thresholds;
    thresholds.reserve(present.size() + absent.size());
    thresholds.insert(thresholds.end(), present.begin(), present.end());
    thresholds.insert(thresholds.end(), absent.begin(), absent.end());
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    RocCurve curve;
    curve.points.push_back({0.0, 0.0});
    const double np = static_cast<double>(present.size());
    const double na = static_cast<double>(absent.size());
    for (double t : thresholds) {
        const double tp = static_cast<double>(
            std::upper_bound(present.begin(), present.end(), t) - present.begin());
        const double fp = static_cast<double>(
            std::upper_bound(absent.begin(), absent.end(), t) - absent.begin());
        RocPoint p{fp / na, tp / np};
        if (p.fpr != curve.points.back().fpr || p.tpr != curve.points.back().tpr) {
            curve.points.push_back(p);
        }
    }
    if (curve.points.back().fpr != 1.0 || curve.points.back().tpr != 1.0) {
        curve.points.push_back({1.0, 1.0});
    }
    return curve;
}

/// Area under the ROC by the trapezoid rule.
inline double auc(const RocCurve& curve) {
    if (curve.points.size() < 2) {
        throw std::invalid_argument("auc: degenerate curve");
    }
    double area = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const RocPoint& a = curve.points[i - 1];
        const RocPoint& b = curve.points[i];
        area += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
    }
    return area;
}

/**
 * Equal error rate: the fpr == fnr crossing of the swept operating
 * points, linearly interpolated between the two points bracketing the
 * sign change of fpr - fnr. The residual reports how far from exact
 * equality the returned point is (zero whenever interpolation applies).
 */
inline EerEstimate eer(const RocCurve& curve) {
    if (curve.points.size() < 2) {
        throw std::invalid_argument("eer: degenerate curve");
    }
    for (const RocPoint& p : curve.points) {
        // diff is monotone non-decreasing along the curve: fpr rises, fnr falls.
        const double fnr = 1.0 - p.tpr;
        if (p.fpr == fnr) return {p.fpr, 0.0};
    }
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const RocPoint& a = curve.points[i - 1];
        const RocPoint& b = curve.points[i];
        const double da = a.fpr - (1.0 - a.tpr);
        const double db = b.fpr - (1.0 - b.tpr);
        if (da < 0.0 && db > 0.0) {
            const double t = -da / (db - da);
            const double fpr = a.fpr + t * (b.fpr - a.fpr);
            const double fnr = (1.0 - a.tpr) + t * ((1.0 - b.tpr) - (1.0 - a.tpr));
            return {0.5 * (fpr + fnr), std::abs(fpr - fnr)};
        }
    }
    // No sign change can only happen at an endpoint; report the closer one.
    const RocPoint& first = curve.points.front();
    const RocPoint& last = curve.points.back();
    const double d_first = std::abs(first.fpr - (1.0 - first.tpr));
    const double d_last = std::abs(last.fpr - (1.0 - last.tpr));
    if (d_first <= d_last) return {0.5 * (first.fpr + 1.0 - first.tpr), d_first};
    return {0.5 * (last.fpr + 1.0 - last.tpr), d_last};
}

inline EerEstimate eer(const std::vector<double>& present_scores,
                       const std::vector<double>& absent_scores) {
    return eer(roc_curve(present_scores, absent_scores));
}

/// Distortion proxy: cosine distance between a speaker's original
/// x-vector and the pseudo x-vector that replaced it. Higher means the
/// anonymized voice moved further from the source identity.
inline double utility_proxy(const XVector& original_speaker_x, const XVector& pseudo) {
    return cosine_distance(original_speaker_x, pseudo);
}

}  // namespace xvlab
