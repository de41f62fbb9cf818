#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "xvlab/anonymizer.hpp"
#include "xvlab/embedding.hpp"

namespace xvlab::oracle {

// Reference ranking: compute every affinity, then stable-sort indices. Slow but
// obviously correct, used to cross-check rank_pool's comparator path (equal
// distances resolve to ascending position because iota order is stable).
inline std::vector<std::size_t> rank_by_sort(const XVector& x, const XVectorPool& pool,
                                             RankOrder order) {
    std::vector<double> affinity(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        affinity[i] = cosine_distance(x, pool.entry(i).vector);
    }
    std::vector<std::size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (order == RankOrder::Nearest) {
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return affinity[a] < affinity[b];
        });
    } else {
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return affinity[a] > affinity[b];
        });
    }
    return idx;
}

// Reference AUC via the Mann-Whitney U statistic: count (negative, positive)
// score pairs, ties worth one half.
inline double auc_by_pair_count(const std::vector<double>& negatives,
                                const std::vector<double>& positives) {
    if (negatives.empty() || positives.empty()) {
        throw std::invalid_argument("auc_by_pair_count: both classes required");
    }
    double wins = 0.0;
    for (double n : negatives) {
        for (double p : positives) {
            if (p > n) {
                wins += 1.0;
            } else if (p == n) {
                wins += 0.5;
            }
        }
    }
    return wins / (static_cast<double>(negatives.size()) * static_cast<double>(positives.size()));
}

// Coordinate mean in extended precision, for checking double-precision averages.
inline XVector mean_by_long_double(const std::vector<const XVector*>& vectors) {
    if (vectors.empty()) {
        throw std::invalid_argument("mean_by_long_double: empty input");
    }
    const std::size_t dim = vectors.front()->size();
    XVector out(dim, 0.0);
    for (std::size_t d = 0; d < dim; ++d) {
        long double acc = 0.0L;
        for (const XVector* v : vectors) {
            acc += static_cast<long double>((*v)[d]);
        }
        out[d] = static_cast<double>(acc / static_cast<long double>(vectors.size()));
    }
    return out;
}

}  // namespace xvlab::oracle
