#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace xvlab {

/// Speaker embedding. All operations require matching dimensionality and
/// finite entries; violations throw.
using XVector = std::vector<double>;

enum class Gender { M, F };

inline char gender_char(Gender g) { return g == Gender::M ? 'M' : 'F'; }

inline Gender gender_from_char(char c) {
    if (c == 'M') return Gender::M;
    if (c == 'F') return Gender::F;
    throw std::invalid_argument(std::string("unknown gender '") + c + "'");
}

inline bool all_finite(const XVector& x) {
    for (double v : x) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

struct PoolEntry {
    std::string speaker_id;    // non-empty
    Gender gender = Gender::M;
    std::string utterance_id;  // provenance tag, preserved by file round trips
    XVector vector;
};

/**
 * Ordered, index-addressable collection of pool entries sharing one
 * dimensionality. Entry order is load order and entry indices are the
 * tie-break key for every distance ranking.
 *
 * Pools produced by a filter remember, per entry, the index it had in the
 * pool at the root of the filter chain, so selections made on a filtered
 * view can be reported against the original pool.
 */
class XVectorPool {
public:
    XVectorPool() = default;

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    const PoolEntry& entry(std::size_t i) const { return entries_.at(i); }
    const std::vector<PoolEntry>& entries() const { return entries_; }

    /// Index this entry had in the root pool of the filter chain.
    std::size_t source_index(std::size_t i) const { return source_indices_.at(i); }

    void add(PoolEntry e) {
        if (e.speaker_id.empty()) {
            throw std::invalid_argument("pool entry: empty speaker_id");
        }
        if (e.vector.empty()) {
            throw std::invalid_argument("pool entry: empty vector");
        }
        if (!all_finite(e.vector)) {
            throw std::invalid_argument("pool entry: non-finite value");
        }
        if (dim_ == 0) {
            dim_ = e.vector.size();
        } else if (e.vector.size() != dim_) {
            throw std::invalid_argument("pool entry: dimension mismatch");
        }
        source_indices_.push_back(entries_.size());
        entries_.push_back(std::move(e));
    }

    /// Used by filters to keep source indices pointing at the root pool.
    void add_with_source(PoolEntry e, std::size_t source) {
        add(std::move(e));
        source_indices_.back() = source;
    }

private:
    std::size_t dim_ = 0;
    std::vector<PoolEntry> entries_;
    std::vector<std::size_t> source_indices_;
};

/**
 * Cosine distance 1 - cos(x, y), in [0, 2]. Dimension mismatch and
 * zero-norm inputs are hard errors signaling invalid embeddings.
 */
inline double cosine_distance(const XVector& x, const XVector& y) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("cosine_distance: dimension mismatch");
    }
    if (x.empty()) {
        throw std::invalid_argument("cosine_distance: empty vector");
    }
    double dot = 0.0, nx = 0.0, ny = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        dot += x[i] * y[i];
        nx += x[i] * x[i];
        ny += y[i] * y[i];
    }
    if (nx == 0.0 || ny == 0.0) {
        throw std::invalid_argument("cosine_distance: zero-norm vector");
    }
    double d = 1.0 - dot / (std::sqrt(nx) * std::sqrt(ny));
    if (d < 0.0) return 0.0;
    if (d > 2.0) return 2.0;
    return d;
}

inline double l2_distance(const XVector& x, const XVector& y) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("l2_distance: dimension mismatch");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double d = x[i] - y[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

/// Coordinate-wise mean. Errors on an empty list or mixed dimensions.
inline XVector mean_vector(const std::vector<XVector>& xs) {
    if (xs.empty()) {
        throw std::invalid_argument("mean_vector: empty input");
    }
    const std::size_t dim = xs.front().size();
    XVector out(dim, 0.0);
    for (const XVector& x : xs) {
        if (x.size() != dim) {
            throw std::invalid_argument("mean_vector: dimension mismatch");
        }
        for (std::size_t i = 0; i < dim; ++i) out[i] += x[i];
    }
    const double inv = 1.0 / static_cast<double>(xs.size());
    for (double& v : out) v *= inv;
    return out;
}

/// Subsequence of entries with the requested gender, original order kept.
inline XVectorPool filter_by_gender(const XVectorPool& pool, Gender g) {
    XVectorPool out;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (pool.entry(i).gender == g) {
            out.add_with_source(pool.entry(i), pool.source_index(i));
        }
    }
    return out;
}

/// Drops every entry belonging to speaker_id, original order kept.
inline XVectorPool exclude_speaker(const XVectorPool& pool, const std::string& speaker_id) {
    XVectorPool out;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (pool.entry(i).speaker_id != speaker_id) {
            out.add_with_source(pool.entry(i), pool.source_index(i));
        }
    }
    return out;
}

}  // namespace xvlab
