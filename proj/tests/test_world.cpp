#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "xvlab/world.hpp"
#include "support/oracles.hpp"

using namespace xvlab;

TEST_CASE("unit vectors have unit norm and fill the sphere", "[world]") {
    RandomStream rng(100);
    XVector sum(16, 0.0);
    const int n = 4000;
    for (int i = 0; i < n; ++i) {
        const XVector v = sample_unit_vector(16, rng);
        double norm = 0.0;
        for (double x : v) norm += x * x;
        REQUIRE(std::sqrt(norm) == Catch::Approx(1.0).margin(1e-12));
        for (std::size_t d = 0; d < 16; ++d) sum[d] += v[d];
    }
    // Coordinates of a uniform sphere point have mean zero and variance
    // 1/dim; the mean of n draws stays within five standard errors.
    const double tol = 5.0 / std::sqrt(16.0 * n);
    for (double s : sum) {
        REQUIRE(std::abs(s / n) < tol);
    }
}

TEST_CASE("utterances scatter around the centroid at the requested scale", "[world]") {
    SimSpeaker spk;
    spk.id = "s";
    spk.centroid = XVector(64, 0.0);
    spk.centroid[0] = 1.0;
    spk.leak_direction = spk.centroid;
    RandomStream rng(7);
    const double sigma = 0.25;
    const auto utts = sample_utterances(spk, 400, sigma, rng);
    REQUIRE(utts.size() == 400);
    double mean_norm = 0.0;
    for (const XVector& u : utts) {
        XVector d(64);
        for (std::size_t i = 0; i < 64; ++i) d[i] = u[i] - spk.centroid[i];
        double norm = 0.0;
        for (double x : d) norm += x * x;
        mean_norm += std::sqrt(norm);
    }
    mean_norm /= 400.0;
    // Residual norm concentrates near sigma * sqrt(dim) for dim >= 64.
    const double expect = sigma * std::sqrt(64.0);
    REQUIRE(mean_norm > 0.5 * expect);
    REQUIRE(mean_norm < 1.5 * expect);
}

TEST_CASE("zero utterance noise reproduces the centroid exactly", "[world]") {
    SimSpeaker spk;
    spk.id = "s";
    // Dyadic coordinates keep the running sum and the /n division exact.
    spk.centroid = {0.5, -0.5};
    spk.leak_direction = spk.centroid;
    RandomStream rng(9);
    const auto utts = sample_utterances(spk, 5, 0.0, rng);
    for (const XVector& u : utts) {
        REQUIRE(u == spk.centroid);
    }
    REQUIRE(speaker_xvector_estimate(utts) == spk.centroid);
}

TEST_CASE("speaker estimate is the utterance mean in extended precision", "[world]") {
    SimSpeaker spk;
    spk.id = "s";
    RandomStream cr(3);
    spk.centroid = sample_unit_vector(32, cr);
    spk.leak_direction = spk.centroid;
    RandomStream rng(4);
    const auto utts = sample_utterances(spk, 11, 0.3, rng);
    const XVector est = speaker_xvector_estimate(utts);
    std::vector<const XVector*> ptrs;
    for (const XVector& u : utts) ptrs.push_back(&u);
    const XVector want = oracle::mean_by_long_double(ptrs);
    for (std::size_t d = 0; d < est.size(); ++d) {
        REQUIRE(est[d] == Catch::Approx(want[d]).margin(1e-12));
    }
}

TEST_CASE("extraction with all noise off is the identity", "[world]") {
    SimSpeaker spk;
    spk.id = "s";
    spk.centroid = {1.0, 0.0, 0.0};
    spk.leak_direction = spk.centroid;
    RandomStream rng(5);
    const XVector pseudo{0.2, 0.4, -0.1};
    const XVector out = simulate_extraction(pseudo, spk, 0.0, 0.0, rng);
    REQUIRE(out == pseudo);
}

TEST_CASE("leak shifts extraction along the speaker direction", "[world]") {
    SimSpeaker spk;
    spk.id = "s";
    spk.centroid = {0.0, 1.0};
    spk.leak_direction = spk.centroid;
    RandomStream rng(6);
    const XVector pseudo{0.3, 0.0};
    const XVector out = simulate_extraction(pseudo, spk, 0.0, 0.7, rng);
    REQUIRE(out[0] == Catch::Approx(0.3).margin(1e-15));
    REQUIRE(out[1] == Catch::Approx(0.7).margin(1e-15));
}

TEST_CASE("zero leak makes extraction speaker independent", "[world]") {
    SimSpeaker a, b;
    a.id = "a";
    a.centroid = {1.0, 0.0};
    a.leak_direction = a.centroid;
    b.id = "b";
    b.centroid = {0.0, 1.0};
    b.leak_direction = b.centroid;
    const XVector pseudo{0.1, 0.2};
    // Identical stream state must give identical output for any speaker.
    RandomStream r1(77), r2(77);
    const XVector oa = simulate_extraction(pseudo, a, 0.5, 0.0, r1);
    const XVector ob = simulate_extraction(pseudo, b, 0.5, 0.0, r2);
    REQUIRE(oa == ob);
}

TEST_CASE("extraction rejects dimension mismatch", "[world]") {
    SimSpeaker spk;
    spk.id = "s";
    spk.centroid = {1.0, 0.0};
    spk.leak_direction = spk.centroid;
    RandomStream rng(8);
    REQUIRE_THROWS_AS(simulate_extraction({1.0, 0.0, 0.0}, spk, 0.1, 0.1, rng),
                      std::invalid_argument);
}

TEST_CASE("params validation rejects degenerate settings", "[world]") {
    SimParams p;
    p.validate();
    SimParams bad = p;
    bad.dim = 1;
    REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = p;
    bad.pool_speakers = 0;
    REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = p;
    bad.candidates = 0;
    REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = p;
    bad.utterances_per_speaker = 0;
    REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = p;
    bad.sigma_utt = -0.1;
    REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("generated world has the advertised shape", "[world]") {
    SimParams p;
    p.dim = 24;
    p.pool_speakers = 40;
    p.candidates = 7;
    p.utterances_per_speaker = 3;
    const SpeakerWorld world = generate_world(p);
    REQUIRE(world.pool.size() == 40);
    REQUIRE(world.pool.dim() == 24);
    REQUIRE(world.candidates.size() == 7);

    std::set<std::string> ids;
    for (std::size_t i = 0; i < world.pool.size(); ++i) {
        const PoolEntry& e = world.pool.entry(i);
        ids.insert(e.speaker_id);
        REQUIRE(e.gender == (i % 2 == 0 ? Gender::M : Gender::F));
        REQUIRE(e.utterance_id == "avg");
    }
    REQUIRE(ids.size() == 40);
    REQUIRE(world.pool.entry(0).speaker_id == "pool0000");
    REQUIRE(world.pool.entry(39).speaker_id == "pool0039");

    for (std::size_t i = 0; i < world.candidates.size(); ++i) {
        const SimSpeaker& c = world.candidates[i];
        REQUIRE(c.gender == (i % 2 == 0 ? Gender::M : Gender::F));
        double norm = 0.0;
        for (double x : c.centroid) norm += x * x;
        REQUIRE(std::sqrt(norm) == Catch::Approx(1.0).margin(1e-12));
        REQUIRE(c.leak_direction == c.centroid);
    }
    REQUIRE(world.candidates.front().id == "cand0000");
}

TEST_CASE("world generation is a pure function of the seed", "[world]") {
    SimParams p;
    p.dim = 16;
    p.pool_speakers = 20;
    p.candidates = 4;
    p.seed = 2024;
    const SpeakerWorld a = generate_world(p);
    const SpeakerWorld b = generate_world(p);
    for (std::size_t i = 0; i < a.pool.size(); ++i) {
        REQUIRE(a.pool.entry(i).vector == b.pool.entry(i).vector);
    }
    for (std::size_t i = 0; i < a.candidates.size(); ++i) {
        REQUIRE(a.candidates[i].centroid == b.candidates[i].centroid);
    }
    SimParams q = p;
    q.seed = 2025;
    const SpeakerWorld c = generate_world(q);
    REQUIRE(a.pool.entry(0).vector != c.pool.entry(0).vector);
}

TEST_CASE("pool entries average down the utterance noise", "[world]") {
    SimParams p;
    p.dim = 48;
    p.pool_speakers = 30;
    p.candidates = 2;
    p.utterances_per_speaker = 10;
    p.sigma_utt = 0.2;
    const SpeakerWorld world = generate_world(p);
    // Entry norm should be near 1 with residual variance sigma^2 * dim / n;
    // allow a generous band around the expected root-mean-square norm.
    const double expect = std::sqrt(1.0 + 0.2 * 0.2 * 48.0 / 10.0);
    for (std::size_t i = 0; i < world.pool.size(); ++i) {
        double norm = 0.0;
        for (double x : world.pool.entry(i).vector) norm += x * x;
        norm = std::sqrt(norm);
        REQUIRE(norm > 0.75 * expect);
        REQUIRE(norm < 1.25 * expect);
    }
}
