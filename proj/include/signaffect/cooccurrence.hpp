#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <span>
#include <unordered_map>
#include <vector>

#include "signaffect/corpus.hpp"
#include "signaffect/csv.hpp"
#include "signaffect/error.hpp"
#include "signaffect/feature_id.hpp"
#include "signaffect/parallel.hpp"

namespace signaffect {

/// cond_prob was asked about a feature that never occurs.
class UndefinedSupport : public DataError {
public:
    explicit UndefinedSupport(const FeatureId& f)
        : DataError("undefined support: feature '" + f.key() + "' occurs in no frame") {}
};

/// Marginal and joint frame counts. Features are interned into a sorted
/// vocabulary; joint counts are stored only for pairs seen at least once.
class CoocCounts {
public:
    const std::vector<FeatureId>& vocabulary() const noexcept { return vocab_; }
    std::uint64_t total_frames() const noexcept { return total_frames_; }
    std::size_t observed_pairs() const noexcept { return joint_.size(); }

    std::optional<std::size_t> index_of(const FeatureId& f) const {
        auto it = std::lower_bound(vocab_.begin(), vocab_.end(), f);
        if (it == vocab_.end() || *it != f) return std::nullopt;
        return static_cast<std::size_t>(it - vocab_.begin());
    }

    std::uint64_t marginal_at(std::size_t i) const { return marginal_[i]; }

    std::uint64_t joint_at(std::size_t i, std::size_t j) const {
        if (i == j) return marginal_[i];
        auto it = joint_.find(pair_key(i, j));
        return it == joint_.end() ? 0 : it->second;
    }

    std::uint64_t marginal(const FeatureId& f) const {
        auto i = index_of(f);
        return i ? marginal_[*i] : 0;
    }

    std::uint64_t joint(const FeatureId& a, const FeatureId& b) const {
        auto i = index_of(a), j = index_of(b);
        return (i && j) ? joint_at(*i, *j) : 0;
    }

    /// Adds one frame's feature set. Features outside the vocabulary are ignored.
    void add_frame(const FeatureSet& features) {
        ++total_frames_;
        scratch_.clear();
        for (const auto& f : features)
            if (auto i = index_of(f)) scratch_.push_back(*i);
        std::sort(scratch_.begin(), scratch_.end());
        scratch_.erase(std::unique(scratch_.begin(), scratch_.end()), scratch_.end());
        for (std::size_t a = 0; a < scratch_.size(); ++a) {
            ++marginal_[scratch_[a]];
            for (std::size_t b = a + 1; b < scratch_.size(); ++b) ++joint_[pair_key(scratch_[a], scratch_[b])];
        }
    }

    explicit CoocCounts(std::vector<FeatureId> sorted_vocabulary = {})
        : vocab_(std::move(sorted_vocabulary)), marginal_(vocab_.size(), 0) {}

    /// Count addition; commutative and associative, so sharded accumulation
    /// merges to the same result in any order.
    friend CoocCounts merge(const CoocCounts& a, const CoocCounts& b) {
        std::vector<FeatureId> vocab;
        std::set_union(a.vocab_.begin(), a.vocab_.end(), b.vocab_.begin(), b.vocab_.end(), std::back_inserter(vocab));
        CoocCounts out(std::move(vocab));
        out.total_frames_ = a.total_frames_ + b.total_frames_;
        for (const CoocCounts* src : {&a, &b}) {
            std::vector<std::size_t> remap(src->vocab_.size());
            for (std::size_t i = 0; i < remap.size(); ++i) remap[i] = *out.index_of(src->vocab_[i]);
            for (std::size_t i = 0; i < remap.size(); ++i) out.marginal_[remap[i]] += src->marginal_[i];
            for (const auto& [key, n] : src->joint_)
                out.joint_[pair_key(remap[key >> 32], remap[key & 0xffffffffULL])] += n;
        }
        return out;
    }

private:
    static std::uint64_t pair_key(std::size_t i, std::size_t j) {
        if (i > j) std::swap(i, j);
        return (static_cast<std::uint64_t>(i) << 32) | static_cast<std::uint64_t>(j);
    }

    std::vector<FeatureId> vocab_;
    std::vector<std::uint64_t> marginal_;
    std::unordered_map<std::uint64_t, std::uint64_t> joint_;
    std::uint64_t total_frames_ = 0;
    std::vector<std::size_t> scratch_;
};

using FeatureFilter = std::function<bool(const FeatureId&)>;

namespace detail {

inline std::vector<FeatureId> collect_vocabulary(std::span<const FrameRecord> frames, const FeatureFilter& keep) {
    std::vector<FeatureId> vocab;
    for (const auto& rec : frames)
        for (const auto& f : rec.features)
            if (!keep || keep(f)) vocab.push_back(f);
    std::sort(vocab.begin(), vocab.end());
    vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
    return vocab;
}

} // namespace detail

inline CoocCounts accumulate(std::span<const FrameRecord> frames, const FeatureFilter& vocab_filter = {}) {
    CoocCounts counts(detail::collect_vocabulary(frames, vocab_filter));
    for (const auto& rec : frames) counts.add_frame(rec.features);
    return counts;
}

/// Accumulates contiguous shards on up to `workers` threads and merges them.
inline CoocCounts accumulate_sharded(std::span<const FrameRecord> frames, std::size_t shards, unsigned workers,
                                     const FeatureFilter& vocab_filter = {}) {
    shards = std::max<std::size_t>(1, std::min(shards, frames.size()));
    std::vector<CoocCounts> parts(shards);
    parallel_for(shards, workers, [&](std::size_t s) {
        const std::size_t begin = frames.size() * s / shards, end = frames.size() * (s + 1) / shards;
        parts[s] = accumulate(frames.subspan(begin, end - begin), vocab_filter);
    });
    CoocCounts out;
    for (const auto& p : parts) out = merge(out, p);
    return out;
}

/// Probability that a frame carrying `given` also carries `target`:
/// joint(given, target) / marginal(given).
inline double cond_prob(const CoocCounts& counts, const FeatureId& given, const FeatureId& target) {
    const auto m = counts.marginal(given);
    if (m == 0) throw UndefinedSupport(given);
    return static_cast<double>(counts.joint(given, target)) / static_cast<double>(m);
}

struct CondProbEntry {
    FeatureId feature;
    double probability = 0.0;
    std::uint64_t support = 0; ///< frames carrying `feature`
    std::uint64_t joint = 0;   ///< frames carrying `feature` and the label
};

/// Features ranked by P(label | feature), restricted to features with at
/// least `min_support` frames. Ties go to higher support, then to the smaller
/// FeatureId. The label itself is never a candidate.
inline std::vector<CondProbEntry> rank_features_for_label(const CoocCounts& counts, const FeatureId& label, std::size_t k,
                                                          std::uint64_t min_support, Diagnostics* diag = nullptr,
                                                          const FeatureFilter& candidates = {}) {
    if (k < 1) throw UsageError("k must be at least 1");
    if (min_support < 1) throw UsageError("min_support must be at least 1");
    std::vector<CondProbEntry> out;
    const auto li = counts.index_of(label);
    if (!li || counts.marginal_at(*li) == 0) {
        warn(diag, "label '" + label.key() + "' does not occur in the corpus");
        return out;
    }
    const auto& vocab = counts.vocabulary();
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        if (i == *li || counts.marginal_at(i) < min_support) continue;
        if (candidates && !candidates(vocab[i])) continue;
        const auto m = counts.marginal_at(i), j = counts.joint_at(i, *li);
        out.push_back({vocab[i], static_cast<double>(j) / static_cast<double>(m), m, j});
    }
    std::sort(out.begin(), out.end(), [](const CondProbEntry& a, const CondProbEntry& b) {
        // Exact rational comparison of joint/support.
        const auto lhs = static_cast<unsigned __int128>(a.joint) * b.support;
        const auto rhs = static_cast<unsigned __int128>(b.joint) * a.support;
        if (lhs != rhs) return lhs > rhs;
        if (a.support != b.support) return a.support > b.support;
        return a.feature < b.feature;
    });
    if (out.size() > k) out.resize(k);
    return out;
}

/// `feature,probability,support` for one label; 3 decimals unless full precision.
inline std::string ranking_csv(const std::vector<CondProbEntry>& ranking, bool full_precision = false) {
    std::string out = "feature,probability,support\n";
    for (const auto& e : ranking)
        csv::write_row(out, {e.feature.display(),
                             full_precision ? csv::format_exact(e.probability) : csv::format_fixed(e.probability, 3),
                             std::to_string(e.support)});
    return out;
}

} // namespace signaffect
