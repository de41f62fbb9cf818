#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "xvlab/rng.hpp"

namespace xvlab::stats {

// Midrank assignment: tied values share the average of the ranks they span.
inline std::vector<double> midranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[idx[j + 1]] == values[idx[i]]) ++j;
        const double shared = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = shared;
        i = j + 1;
    }
    return ranks;
}

// Spearman rank correlation with midrank tie handling (Pearson on ranks).
inline double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2) {
        throw std::invalid_argument("spearman: need two sequences of equal length >= 2");
    }
    const std::vector<double> rx = midranks(xs);
    const std::vector<double> ry = midranks(ys);
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = rx[i] - mx;
        const double dy = ry[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw std::invalid_argument("spearman: a sequence is constant");
    }
    return sxy / std::sqrt(sxx * syy);
}

// One-sided sign test: probability of at least `wins` successes out of
// `wins + losses` fair coin flips. Ties are discarded by the caller.
inline double sign_test_p(std::size_t wins, std::size_t losses) {
    const std::size_t n = wins + losses;
    if (n == 0) return 1.0;
    double p = 0.0;
    const double log_half = std::log(0.5);
    for (std::size_t k = wins; k <= n; ++k) {
        const double log_comb = std::lgamma(static_cast<double>(n) + 1.0) -
                                std::lgamma(static_cast<double>(k) + 1.0) -
                                std::lgamma(static_cast<double>(n - k) + 1.0);
        p += std::exp(log_comb + static_cast<double>(n) * log_half);
    }
    return std::min(p, 1.0);
}

// Percentile bootstrap interval for the AUC of scores (negatives vs positives).
struct BootstrapInterval {
    double lower = 0.0;
    double upper = 0.0;
};

template <typename AucFn>
BootstrapInterval bootstrap_auc_interval(const std::vector<double>& negatives,
                                         const std::vector<double>& positives,
                                         AucFn&& auc_fn, std::size_t resamples,
                                         double coverage, RandomStream& rng) {
    if (negatives.empty() || positives.empty()) {
        throw std::invalid_argument("bootstrap_auc_interval: both classes required");
    }
    if (coverage <= 0.0 || coverage >= 1.0) {
        throw std::invalid_argument("bootstrap_auc_interval: coverage must be in (0, 1)");
    }
    std::vector<double> stat(resamples);
    std::vector<double> neg(negatives.size());
    std::vector<double> pos(positives.size());
    for (std::size_t r = 0; r < resamples; ++r) {
        for (double& v : neg) v = negatives[rng.uniform_index(negatives.size())];
        for (double& v : pos) v = positives[rng.uniform_index(positives.size())];
        stat[r] = auc_fn(neg, pos);
    }
    std::sort(stat.begin(), stat.end());
    const double alpha = 0.5 * (1.0 - coverage);
    auto pick = [&](double q) {
        const double pos_idx = q * static_cast<double>(resamples - 1);
        return stat[static_cast<std::size_t>(std::llround(pos_idx))];
    };
    return {pick(alpha), pick(1.0 - alpha)};
}

}  // namespace xvlab::stats
