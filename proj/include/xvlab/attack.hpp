#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "xvlab/anonymizer.hpp"
#include "xvlab/embedding.hpp"
#include "xvlab/rng.hpp"

namespace xvlab {

/// What the attacker knows about the candidates' audio: Same means the
/// exact utterances the target was anonymized from, Different means other
/// utterances of the same speakers.
enum class KnowledgeLevel { Same, Different };

struct RankedCandidate {
    std::string id;
    double distance = 0.0;
};

struct AttackOutcome {
    std::vector<RankedCandidate> ranked;  // ascending distance, ties by input order
    std::string predicted_id;             // ranked.front().id
    double min_distance = 0.0;
};

struct OpenWorldDecision {
    bool present = false;
    std::string predicted_id;  // empty when declared absent
    double min_distance = 0.0;
    double threshold = 0.0;
};

/// One candidate the attacker simulates: identity plus the utterance
/// vectors the attacker possesses for that speaker.
struct CandidateAudio {
    std::string id;
    Gender gender = Gender::M;
    std::vector<XVector> utterances;
};

namespace detail {

inline AttackOutcome rank_candidates(std::vector<RankedCandidate> scored) {
    std::vector<std::size_t> order(scored.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scored[a].distance != scored[b].distance) {
            return scored[a].distance < scored[b].distance;
        }
        return a < b;
    });
    AttackOutcome out;
    out.ranked.reserve(scored.size());
    for (std::size_t i : order) out.ranked.push_back(std::move(scored[i]));
    out.predicted_id = out.ranked.front().id;
    out.min_distance = out.ranked.front().distance;
    return out;
}

}  // namespace detail

/**
 * Distance-based re-identification. For each candidate the attacker
 * replays the anonymization pipeline on that candidate's utterances
 * (anonymize, then extract each utterance via the supplied model, then
 * average to a speaker-level vector), repeats it `replications` times,
 * averages, and scores the candidate by the l2 distance between the
 * simulated vector and the observed one. Candidates are ranked ascending;
 * equal distances break by candidate input order.
 *
 * extract is called as extract(pseudo_vector, candidate_id, stream) and
 * models the extractor applied to the candidate's anonymized audio.
 *
 * Randomness derives from rng_base: candidate work uses the child
 * "cand/<id>", then "rep"/<r> with stage children "anonymize" and
 * "extract". Derivation depends only on labels, never on evaluation
 * order, so adding a candidate does not disturb the others.
 */
template <typename ExtractFn>
AttackOutcome deanonymize(const XVector& observed_x,
                          const std::vector<CandidateAudio>& candidates,
                          const XVectorPool& pool, const AnonymizationPolicy& policy,
                          std::size_t replications, ExtractFn&& extract,
                          const RandomStream& rng_base) {
    if (candidates.empty()) {
        throw std::invalid_argument("deanonymize: no candidates");
    }
    if (replications == 0) {
        throw std::invalid_argument("deanonymize: replications must be positive");
    }
    {
        std::unordered_set<std::string> ids;
        for (const CandidateAudio& c : candidates) {
            if (!ids.insert(c.id).second) {
                throw std::invalid_argument("deanonymize: duplicate candidate id " + c.id);
            }
        }
    }
    std::vector<RankedCandidate> scored;
    scored.reserve(candidates.size());
    for (const CandidateAudio& cand : candidates) {
        const RandomStream cand_stream = rng_base.child("cand/" + cand.id);
        XVector acc(observed_x.size(), 0.0);
        for (std::size_t r = 0; r < replications; ++r) {
            const RandomStream rep = cand_stream.child("rep").child(r);
            RandomStream anon_rng = rep.child("anonymize");
            std::vector<PseudoXVector> pseudos = anonymize_speaker(
                cand.utterances, pool, policy, SpeakerRef{cand.id, cand.gender}, anon_rng);
            RandomStream ext_rng = rep.child("extract");
            std::vector<XVector> extracted;
            extracted.reserve(pseudos.size());
            for (const PseudoXVector& p : pseudos) {
                extracted.push_back(extract(p.vector, cand.id, ext_rng));
            }
            XVector est = mean_vector(extracted);
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += est[i];
        }
        const double inv = 1.0 / static_cast<double>(replications);
        for (double& v : acc) v *= inv;
        scored.push_back({cand.id, l2_distance(acc, observed_x)});
    }
    return detail::rank_candidates(std::move(scored));
}

/**
 * Baseline that skips the pipeline simulation and ranks candidates by the
 * l2 distance between their original speaker-level x-vectors and the
 * observed one.
 */
inline AttackOutcome naive_deanonymize(
    const XVector& observed_x,
    const std::vector<std::pair<std::string, XVector>>& candidate_xvectors) {
    if (candidate_xvectors.empty()) {
        throw std::invalid_argument("naive_deanonymize: no candidates");
    }
    std::vector<RankedCandidate> scored;
    scored.reserve(candidate_xvectors.size());
    for (const auto& [id, x] : candidate_xvectors) {
        scored.push_back({id, l2_distance(x, observed_x)});
    }
    return detail::rank_candidates(std::move(scored));
}

/**
 * Nearest-rank percentile of the calibration distances: the
 * ceil(q / 100 * n)-th smallest value, q == 0 giving the minimum.
 */
inline double calibrate_threshold(const std::vector<double>& min_distances,
                                  double percentile_q) {
    if (min_distances.empty()) {
        throw std::invalid_argument("calibrate_threshold: no calibration distances");
    }
    if (!(percentile_q >= 0.0 && percentile_q <= 100.0)) {
        throw std::invalid_argument("calibrate_threshold: percentile outside [0, 100]");
    }
    std::vector<double> sorted = min_distances;
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    std::size_t rank =
        static_cast<std::size_t>(std::ceil(percentile_q / 100.0 * n));
    if (rank == 0) rank = 1;
    if (rank > sorted.size()) rank = sorted.size();
    return sorted[rank - 1];
}

/// Declares the target present when the best distance is within the
/// threshold (inclusive); the identity claim is only populated then.
inline OpenWorldDecision open_world_decide(const AttackOutcome& outcome, double threshold) {
    OpenWorldDecision d;
    d.threshold = threshold;
    d.min_distance = outcome.min_distance;
    d.present = outcome.min_distance <= threshold;
    if (d.present) d.predicted_id = outcome.predicted_id;
    return d;
}

}  // namespace xvlab
