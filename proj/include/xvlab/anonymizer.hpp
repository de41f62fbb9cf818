#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "xvlab/embedding.hpp"
#include "xvlab/rng.hpp"

namespace xvlab {

enum class SelectionStrategy { RankedNearest, RankedFarthest, RandomAverage, RandomSingle };
enum class ApplicationLevel { SpeakerLevel, UtteranceLevel };
enum class GenderMode { SameGender, OppositeGender };
enum class RankOrder { Nearest, Farthest };

/**
 * Parameters of the pseudo x-vector construction. world_size (W) is the
 * size of the ranked affinity pool, subset_size (N) the number of vectors
 * drawn from it and averaged. Random strategies ignore W; RandomSingle
 * also ignores N.
 */
struct AnonymizationPolicy {
    SelectionStrategy strategy = SelectionStrategy::RankedFarthest;
    std::size_t world_size = 200;
    std::size_t subset_size = 100;
    ApplicationLevel level = ApplicationLevel::SpeakerLevel;
    GenderMode gender_mode = GenderMode::SameGender;
    bool exclude_self = false;  // drop the speaker's own pool entries before ranking
};

/// Identity of the speaker being anonymized; gender selects the pool half,
/// id is used only when the policy excludes the speaker's own entries.
struct SpeakerRef {
    std::string id;
    Gender gender = Gender::M;
};

struct PseudoXVector {
    XVector vector;
    std::vector<std::size_t> selected_indices;  // ascending, into the root pool
    AnonymizationPolicy policy_used;
};

/**
 * Full permutation of pool positions ordered by cosine distance to x,
 * ascending for Nearest and descending for Farthest. Equal distances
 * break by ascending position in both orders.
 */
inline std::vector<std::size_t> rank_pool(const XVector& x, const XVectorPool& pool,
                                          RankOrder order) {
    if (pool.empty()) {
        throw std::invalid_argument("rank_pool: empty pool");
    }
    std::vector<double> dist(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        dist[i] = cosine_distance(x, pool.entry(i).vector);
    }
    std::vector<std::size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (order == RankOrder::Nearest) {
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            if (dist[a] != dist[b]) return dist[a] < dist[b];
            return a < b;
        });
    } else {
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            if (dist[a] != dist[b]) return dist[a] > dist[b];
            return a < b;
        });
    }
    return idx;
}

namespace detail {

inline PseudoXVector mean_of_positions(const XVectorPool& pool,
                                       const std::vector<std::size_t>& positions,
                                       const AnonymizationPolicy& policy) {
    PseudoXVector out;
    out.policy_used = policy;
    out.selected_indices.reserve(positions.size());
    for (std::size_t p : positions) out.selected_indices.push_back(pool.source_index(p));
    std::sort(out.selected_indices.begin(), out.selected_indices.end());
    XVector acc(pool.dim(), 0.0);
    for (std::size_t p : positions) {
        const XVector& v = pool.entry(p).vector;
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
    }
    const double inv = 1.0 / static_cast<double>(positions.size());
    for (double& v : acc) v *= inv;
    out.vector = std::move(acc);
    return out;
}

}  // namespace detail

/**
 * Builds one pseudo x-vector from the given pool, which the caller has
 * already restricted to the allowed gender (and any exclusions). Ranked
 * strategies rank the pool against x, keep the best W and average a
 * random N of them; RandomAverage averages a random N of the whole pool;
 * RandomSingle returns one pool vector verbatim. Random strategies never
 * read x, so their output is independent of it.
 */
inline PseudoXVector build_pseudo_xvector(const XVector& x, const XVectorPool& pool,
                                          const AnonymizationPolicy& policy,
                                          RandomStream& rng) {
    if (pool.empty()) {
        throw std::invalid_argument("build_pseudo_xvector: empty pool");
    }
    switch (policy.strategy) {
        case SelectionStrategy::RankedNearest:
        case SelectionStrategy::RankedFarthest: {
            if (policy.subset_size == 0) {
                throw std::invalid_argument("build_pseudo_xvector: subset_size is zero");
            }
            if (policy.subset_size > policy.world_size) {
                throw std::invalid_argument(
                    "build_pseudo_xvector: subset_size exceeds world_size");
            }
            if (policy.world_size > pool.size()) {
                throw std::invalid_argument(
                    "build_pseudo_xvector: world_size exceeds pool size");
            }
            const RankOrder order = policy.strategy == SelectionStrategy::RankedNearest
                                        ? RankOrder::Nearest
                                        : RankOrder::Farthest;
            std::vector<std::size_t> ranked = rank_pool(x, pool, order);
            ranked.resize(policy.world_size);
            std::vector<std::size_t> draw =
                rng.sample_indices(policy.world_size, policy.subset_size);
            std::vector<std::size_t> positions;
            positions.reserve(draw.size());
            for (std::size_t d : draw) positions.push_back(ranked[d]);
            return detail::mean_of_positions(pool, positions, policy);
        }
        case SelectionStrategy::RandomAverage: {
            if (policy.subset_size == 0) {
                throw std::invalid_argument("build_pseudo_xvector: subset_size is zero");
            }
            if (policy.subset_size > pool.size()) {
                throw std::invalid_argument(
                    "build_pseudo_xvector: subset_size exceeds pool size");
            }
            std::vector<std::size_t> positions =
                rng.sample_indices(pool.size(), policy.subset_size);
            return detail::mean_of_positions(pool, positions, policy);
        }
        case SelectionStrategy::RandomSingle: {
            const std::size_t p = rng.uniform_index(pool.size());
            PseudoXVector out;
            out.policy_used = policy;
            out.selected_indices = {pool.source_index(p)};
            out.vector = pool.entry(p).vector;
            return out;
        }
    }
    throw std::logic_error("build_pseudo_xvector: unknown strategy");
}

/// Pool restriction applied before any ranking: gender mode first, then
/// the optional exclusion of the speaker's own entries.
inline XVectorPool restrict_pool(const XVectorPool& pool, const AnonymizationPolicy& policy,
                                 const SpeakerRef& speaker) {
    const Gender allowed = policy.gender_mode == GenderMode::SameGender
                               ? speaker.gender
                               : (speaker.gender == Gender::M ? Gender::F : Gender::M);
    XVectorPool filtered = filter_by_gender(pool, allowed);
    if (policy.exclude_self && !speaker.id.empty()) {
        filtered = exclude_speaker(filtered, speaker.id);
    }
    return filtered;
}

/**
 * Anonymizes one speaker's utterances. SpeakerLevel averages the
 * utterances into a speaker-level x-vector, builds one pseudo x-vector
 * and replicates it per utterance; UtteranceLevel builds independently
 * per utterance, consuming the stream sequentially.
 */
inline std::vector<PseudoXVector> anonymize_speaker(const std::vector<XVector>& utterances,
                                                    const XVectorPool& pool,
                                                    const AnonymizationPolicy& policy,
                                                    const SpeakerRef& speaker,
                                                    RandomStream& rng) {
    if (utterances.empty()) {
        throw std::invalid_argument("anonymize_speaker: no utterances");
    }
    const XVectorPool filtered = restrict_pool(pool, policy, speaker);
    if (filtered.empty()) {
        throw std::invalid_argument("anonymize_speaker: restricted pool is empty");
    }
    std::vector<PseudoXVector> out;
    out.reserve(utterances.size());
    if (policy.level == ApplicationLevel::SpeakerLevel) {
        const XVector x = mean_vector(utterances);
        PseudoXVector p = build_pseudo_xvector(x, filtered, policy, rng);
        for (std::size_t i = 0; i + 1 < utterances.size(); ++i) out.push_back(p);
        out.push_back(std::move(p));
    } else {
        for (const XVector& u : utterances) {
            out.push_back(build_pseudo_xvector(u, filtered, policy, rng));
        }
    }
    return out;
}

}  // namespace xvlab
