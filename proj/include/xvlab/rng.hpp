#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace xvlab {

/**
 * Deterministic random stream with stable sub-stream derivation.
 *
 * A stream is identified by its 64-bit root seed. child() derives a new
 * stream by mixing the root with a hash of a label; derivation reads only
 * the root, never the engine state, so the result does not depend on how
 * many values were drawn or on how work is scheduled across threads.
 * Entities that need independent randomness (trials, candidates, pipeline
 * stages) get children keyed by stable labels, which keeps experiment
 * output invariant to worker count.
 *
 * Draws use std::mt19937_64 with the standard distributions. Replay of a
 * stored seed is exact for a fixed standard library implementation; byte
 * identical sequences across different standard libraries are not a goal.
 */
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : root_(seed), engine_(seed) {}

    std::uint64_t root() const { return root_; }

    RandomStream child(std::string_view label) const {
        return RandomStream(mix(root_, fnv1a(label)));
    }

    RandomStream child(std::uint64_t index) const {
        return RandomStream(mix(root_, splitmix(index ^ 0x6a09e667f3bcc909ull)));
    }

    double uniform() {
        return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
    }

    /// Uniform draw from {0, ..., n - 1}.
    std::size_t uniform_index(std::size_t n) {
        if (n == 0) {
            throw std::invalid_argument("uniform_index: empty range");
        }
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    double gaussian(double sigma) {
        if (sigma < 0.0) {
            throw std::invalid_argument("gaussian: negative sigma");
        }
        if (sigma == 0.0) {
            return 0.0;
        }
        return std::normal_distribution<double>(0.0, sigma)(engine_);
    }

    /// Overwrites out with independent N(0, sigma^2) draws.
    void fill_gaussian(std::vector<double>& out, double sigma) {
        if (sigma < 0.0) {
            throw std::invalid_argument("fill_gaussian: negative sigma");
        }
        if (sigma == 0.0) {
            for (double& v : out) v = 0.0;
            return;
        }
        std::normal_distribution<double> dist(0.0, sigma);
        for (double& v : out) v = dist(engine_);
    }

    /**
     * Samples k distinct indices from {0, ..., n - 1} without replacement
     * via a partial Fisher-Yates shuffle, returned in ascending order so
     * that consumers see a canonical form (k == n yields 0..n-1 for any
     * seed).
     */
    std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
        if (k > n) {
            throw std::invalid_argument("sample_indices: k exceeds population");
        }
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        for (std::size_t i = 0; i < k; ++i) {
            std::size_t j =
                i + std::uniform_int_distribution<std::size_t>(0, n - 1 - i)(engine_);
            std::swap(idx[i], idx[j]);
        }
        idx.resize(k);
        std::sort(idx.begin(), idx.end());
        return idx;
    }

    std::mt19937_64& engine() { return engine_; }

private:
    static std::uint64_t splitmix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    static std::uint64_t fnv1a(std::string_view s) {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ull;
        }
        return h;
    }

    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        return splitmix(a ^ splitmix(b));
    }

    std::uint64_t root_;
    std::mt19937_64 engine_;
};

}  // namespace xvlab
