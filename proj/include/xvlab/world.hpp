#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "xvlab/embedding.hpp"
#include "xvlab/rng.hpp"

namespace xvlab {

/**
 * Synthetic speaker population parameters. Noise scales are per-coordinate
 * standard deviations, so utterance and extraction perturbations have
 * typical norm sigma * sqrt(dim) relative to unit-norm speaker centroids.
 * lambda_leak scales the speaker-dependent residual that extraction adds
 * on top of the pseudo x-vector; 0 models an anonymizer whose output
 * carries no trace of the source speaker.
 *
 * The noise defaults are tuned, together, so that ranked selection
 * policies are near-perfectly attackable under exact attacker knowledge
 * while random selection stays close to chance when the leak is off.
 */
struct SimParams {
    std::size_t dim = 512;
    std::size_t pool_speakers = 500;
    std::size_t candidates = 29;
    std::size_t utterances_per_speaker = 10;
    double sigma_utt = 0.10;
    double sigma_ext = 0.035;
    double lambda_leak = 0.20;
    std::uint64_t seed = 12061984;

    void validate() const {
        if (dim < 2) {
            throw std::invalid_argument("SimParams: dim must be at least 2");
        }
        if (pool_speakers == 0) {
            throw std::invalid_argument("SimParams: pool_speakers must be positive");
        }
        if (candidates == 0) {
            throw std::invalid_argument("SimParams: candidates must be positive");
        }
        if (utterances_per_speaker == 0) {
            throw std::invalid_argument("SimParams: utterances_per_speaker must be positive");
        }
        if (sigma_utt < 0.0 || sigma_ext < 0.0 || lambda_leak < 0.0) {
            throw std::invalid_argument("SimParams: noise scales must be non-negative");
        }
    }
};

struct SimSpeaker {
    std::string id;
    Gender gender = Gender::M;
    XVector centroid;        // unit norm
    XVector leak_direction;  // deterministic function of the centroid
};

/**
 * A fixed population: an x-vector pool with one entry per pool speaker
 * (the average of that speaker's utterance vectors) and a disjoint list
 * of candidate speakers the attacker will consider.
 */
struct SpeakerWorld {
    SimParams params;
    XVectorPool pool;
    std::vector<SimSpeaker> candidates;
};

/// Uniform draw from the unit sphere.
inline XVector sample_unit_vector(std::size_t dim, RandomStream& rng) {
    XVector v(dim);
    double norm = 0.0;
    do {
        rng.fill_gaussian(v, 1.0);
        norm = 0.0;
        for (double x : v) norm += x * x;
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
}

inline std::vector<XVector> sample_utterances(const SimSpeaker& s, std::size_t n,
                                              double sigma_utt, RandomStream& rng) {
    std::vector<XVector> out;
    out.reserve(n);
    XVector noise(s.centroid.size());
    for (std::size_t i = 0; i < n; ++i) {
        rng.fill_gaussian(noise, sigma_utt);
        XVector u = s.centroid;
        for (std::size_t j = 0; j < u.size(); ++j) u[j] += noise[j];
        out.push_back(std::move(u));
    }
    return out;
}

/// Speaker-level x-vector: the mean of the utterance vectors.
inline XVector speaker_xvector_estimate(const std::vector<XVector>& utterances) {
    return mean_vector(utterances);
}

/**
 * Models the extractor applied to synthesized audio: the pseudo x-vector
 * plus isotropic extraction noise plus the speaker leak term. With
 * lambda_leak == 0 the output distribution is identical for every
 * speaker.
 */
inline XVector simulate_extraction(const XVector& pseudo, const SimSpeaker& s,
                                   double sigma_ext, double lambda_leak,
                                   RandomStream& rng) {
    if (pseudo.size() != s.centroid.size()) {
        throw std::invalid_argument("simulate_extraction: dimension mismatch");
    }
    XVector noise(pseudo.size());
    rng.fill_gaussian(noise, sigma_ext);
    XVector out = pseudo;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] += noise[i] + lambda_leak * s.leak_direction[i];
    }
    return out;
}

namespace detail {

inline std::string numbered_id(const char* prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%04zu", prefix, i);
    return std::string(buf);
}

}  // namespace detail

/**
 * Generates a world from params.seed. Centroids are uniform on the unit
 * sphere, genders alternate M/F in id order, and each pool entry is the
 * mean of utterances_per_speaker noisy utterances of one pool speaker.
 */
inline SpeakerWorld generate_world(const SimParams& params) {
    params.validate();
    SpeakerWorld world;
    world.params = params;
    const RandomStream root = RandomStream(params.seed).child("world");
    for (std::size_t i = 0; i < params.pool_speakers; ++i) {
        RandomStream s = root.child("pool").child(i);
        SimSpeaker spk;
        spk.id = detail::numbered_id("pool", i);
        spk.gender = (i % 2 == 0) ? Gender::M : Gender::F;
        RandomStream cs = s.child("centroid");
        spk.centroid = sample_unit_vector(params.dim, cs);
        spk.leak_direction = spk.centroid;
        RandomStream us = s.child("utt");
        std::vector<XVector> utts =
            sample_utterances(spk, params.utterances_per_speaker, params.sigma_utt, us);
        PoolEntry entry;
        entry.speaker_id = spk.id;
        entry.gender = spk.gender;
        entry.utterance_id = "avg";
        entry.vector = mean_vector(utts);
        world.pool.add(std::move(entry));
    }
    world.candidates.reserve(params.candidates);
    for (std::size_t i = 0; i < params.candidates; ++i) {
        RandomStream s = root.child("cand").child(i);
        SimSpeaker spk;
        spk.id = detail::numbered_id("cand", i);
        spk.gender = (i % 2 == 0) ? Gender::M : Gender::F;
        RandomStream cs = s.child("centroid");
        spk.centroid = sample_unit_vector(params.dim, cs);
        spk.leak_direction = spk.centroid;
        world.candidates.push_back(std::move(spk));
    }
    return world;
}

}  // namespace xvlab
