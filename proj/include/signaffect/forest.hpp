#pragma once

// Multi-label random forest over binary features, by binary relevance: one
// ensemble of Gini-split decision trees per label.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "signaffect/csv.hpp"
#include "signaffect/error.hpp"
#include "signaffect/feature_id.hpp"
#include "signaffect/parallel.hpp"
#include "signaffect/rng.hpp"

namespace signaffect {

/// Gini impurity of a binary node: 1 - p^2 - (1-p)^2 with p = pos/(pos+neg).
inline double gini(std::uint64_t pos, std::uint64_t neg) {
    const std::uint64_t n = pos + neg;
    if (n == 0) throw DataError("gini of an empty node");
    const double p = static_cast<double>(pos) / static_cast<double>(n);
    return 1.0 - p * p - (1.0 - p) * (1.0 - p);
}

/// Binary design matrix: frame rows by AU-feature columns, with a parallel
/// binary label matrix. Row-major, entries 0 or 1.
struct SampleMatrix {
    std::size_t rows = 0;
    std::vector<std::uint8_t> x; ///< rows * feature_names.size()
    std::vector<std::uint8_t> y; ///< rows * label_names.size()
    std::vector<FeatureId> feature_names;
    std::vector<FeatureId> label_names;

    std::size_t features() const noexcept { return feature_names.size(); }
    std::size_t labels() const noexcept { return label_names.size(); }

    std::uint8_t x_at(std::size_t r, std::size_t c) const { return x[r * features() + c]; }
    std::uint8_t y_at(std::size_t r, std::size_t l) const { return y[r * labels() + l]; }
    std::span<const std::uint8_t> row(std::size_t r) const { return {x.data() + r * features(), features()}; }
    std::span<const std::uint8_t> label_row(std::size_t r) const { return {y.data() + r * labels(), labels()}; }

    void validate() const {
        if (rows == 0) throw DataError("sample matrix has no rows");
        if (features() == 0) throw DataError("sample matrix has no feature columns");
        if (x.size() != rows * features() || y.size() != rows * labels())
            throw DataError("sample matrix storage does not match its shape");
        const auto binary = [](std::uint8_t v) { return v <= 1; };
        if (!std::all_of(x.begin(), x.end(), binary) || !std::all_of(y.begin(), y.end(), binary))
            throw DataError("sample matrix entries must be 0 or 1");
    }

    SampleMatrix select(std::span<const std::size_t> keep) const {
        SampleMatrix out;
        out.rows = keep.size();
        out.feature_names = feature_names;
        out.label_names = label_names;
        out.x.reserve(keep.size() * features());
        out.y.reserve(keep.size() * labels());
        for (auto r : keep) {
            auto xr = row(r);
            auto yr = label_row(r);
            out.x.insert(out.x.end(), xr.begin(), xr.end());
            out.y.insert(out.y.end(), yr.begin(), yr.end());
        }
        return out;
    }
};

enum class FeatureRule { sqrt, all, fixed };

struct Hyperparams {
    std::size_t n_trees = 100;
    std::optional<std::size_t> max_depth; ///< unlimited when empty
    std::size_t min_samples_split = 2;
    FeatureRule feature_rule = FeatureRule::sqrt;
    std::size_t features_fixed = 0; ///< used when feature_rule == fixed
    bool bootstrap = true;
    bool balance_classes = false; ///< class-balanced resampling instead of a plain bootstrap
    std::uint64_t seed = 0;
    double vote_threshold = 0.5;

    void validate() const {
        if (n_trees < 1) throw UsageError("n_trees must be at least 1");
        if (min_samples_split < 2) throw UsageError("min_samples_split must be at least 2");
        if (!(vote_threshold > 0.0 && vote_threshold < 1.0)) throw UsageError("vote_threshold must lie in (0, 1)");
        if (feature_rule == FeatureRule::fixed && features_fixed < 1)
            throw UsageError("features_per_split must be at least 1");
    }

    std::size_t features_per_split(std::size_t d) const {
        switch (feature_rule) {
            case FeatureRule::all: return d;
            case FeatureRule::fixed: return std::min(d, features_fixed);
            case FeatureRule::sqrt: break;
        }
        auto m = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
        while (m * m < d) ++m; // guard against sqrt rounding down
        while (m > 1 && (m - 1) * (m - 1) >= d) --m;
        return std::max<std::size_t>(1, std::min(m, d));
    }

    friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

struct TreeNode {
    std::int32_t feature = -1; ///< split column, -1 at leaves
    std::uint32_t left = 0;    ///< child for value 0
    std::uint32_t right = 0;   ///< child for value 1
    std::uint64_t positives = 0;
    std::uint64_t samples = 0;
    double gain = 0.0; ///< impurity decrease weighted by the node's share of root samples

    bool is_leaf() const noexcept { return feature < 0; }
    double positive_fraction() const noexcept {
        return samples == 0 ? 0.0 : static_cast<double>(positives) / static_cast<double>(samples);
    }
    /// Leaf vote: positive when the positive fraction exceeds one half.
    bool votes_positive() const noexcept { return 2 * positives > samples; }

    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;            ///< nodes[0] is the root
    std::vector<std::uint32_t> trained_on;  ///< sorted bootstrap multiset of row indices

    const TreeNode& leaf_for(std::span<const std::uint8_t> row) const {
        std::size_t i = 0;
        while (!nodes[i].is_leaf()) i = row[static_cast<std::size_t>(nodes[i].feature)] ? nodes[i].right : nodes[i].left;
        return nodes[i];
    }
    bool votes_positive(std::span<const std::uint8_t> row) const { return leaf_for(row).votes_positive(); }

    std::size_t depth() const {
        std::vector<std::size_t> d(nodes.size(), 0);
        std::size_t best = 0;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            best = std::max(best, d[i]);
            if (!nodes[i].is_leaf()) d[nodes[i].left] = d[nodes[i].right] = d[i] + 1;
        }
        return best;
    }
};

namespace detail {

using u128 = unsigned __int128;

/// Split quality as an exact rational num/den, where num/den equals
/// sum over children of (pos_c^2 + neg_c^2) / n_c. Larger is purer.
struct SplitScore {
    u128 num = 0;
    u128 den = 1;
};

inline SplitScore split_score(std::uint64_t n0, std::uint64_t p0, std::uint64_t n1, std::uint64_t p1) {
    const u128 q0 = n0 - p0, q1 = n1 - p1;
    const u128 s0 = u128(p0) * p0 + q0 * q0;
    const u128 s1 = u128(p1) * p1 + q1 * q1;
    return {s0 * n1 + s1 * n0, u128(n0) * n1};
}

/// One level of the exhaustive split search at a node: the best column among
/// `candidates`, or -1 when no column separates the rows with positive gain.
/// Ties go to the lowest column index.
struct SplitChoice {
    std::int32_t feature = -1;
    std::uint64_t n0 = 0, p0 = 0, n1 = 0, p1 = 0;
};

inline SplitChoice best_split(const SampleMatrix& data, std::size_t label, std::span<const std::uint32_t> rows,
                              std::span<const std::size_t> candidates) {
    std::uint64_t pos = 0;
    for (auto r : rows) pos += data.y_at(r, label);
    const std::uint64_t n = rows.size();
    const u128 parent = u128(pos) * pos + u128(n - pos) * (n - pos);

    SplitChoice best;
    SplitScore best_score;
    for (std::size_t c : candidates) {
        std::uint64_t n1 = 0, p1 = 0;
        for (auto r : rows) {
            if (data.x_at(r, c)) {
                ++n1;
                p1 += data.y_at(r, label);
            }
        }
        const std::uint64_t n0 = n - n1, p0 = pos - p1;
        if (n0 == 0 || n1 == 0) continue;
        const SplitScore s = split_score(n0, p0, n1, p1);
        // gain > 0  <=>  num/den * n > parent / n  <=>  num * n > parent * den
        if (!(s.num * n > parent * s.den)) continue;
        const u128 lhs = s.num * best_score.den, rhs = best_score.num * s.den;
        const bool better = best.feature < 0 || lhs > rhs ||
                            (lhs == rhs && static_cast<std::int32_t>(c) < best.feature);
        if (better) {
            best = {static_cast<std::int32_t>(c), n0, p0, n1, p1};
            best_score = s;
        }
    }
    return best;
}

inline double weighted_gini(std::uint64_t n, std::uint64_t p) {
    return n == 0 ? 0.0 : static_cast<double>(n) * gini(p, n - p);
}

} // namespace detail

/// Grows one tree for `label` over the row multiset `rows`.
inline DecisionTree grow_tree(const SampleMatrix& data, std::size_t label, std::vector<std::uint32_t> rows,
                              const Hyperparams& hp, SplitMix64& rng) {
    DecisionTree tree;
    tree.trained_on = rows;
    std::sort(tree.trained_on.begin(), tree.trained_on.end());

    const std::size_t d = data.features();
    const std::size_t m = hp.features_per_split(d);
    std::vector<std::size_t> pool(d);
    std::iota(pool.begin(), pool.end(), 0);
    std::vector<std::size_t> candidates;

    const double root_samples = static_cast<double>(rows.size());
    struct Pending {
        std::uint32_t node;
        std::size_t begin, end, depth;
    };
    std::vector<Pending> stack{{0, 0, rows.size(), 0}};
    tree.nodes.emplace_back();

    while (!stack.empty()) {
        const Pending w = stack.back();
        stack.pop_back();
        const std::span<std::uint32_t> range(rows.data() + w.begin, w.end - w.begin);

        std::uint64_t pos = 0;
        for (auto r : range) pos += data.y_at(r, label);
        tree.nodes[w.node].positives = pos;
        tree.nodes[w.node].samples = range.size();

        const bool stop = (hp.max_depth && w.depth >= *hp.max_depth) || range.size() < hp.min_samples_split ||
                          pos == 0 || pos == range.size();
        if (stop) continue;

        if (m < d) {
            // Partial Fisher-Yates: the first m slots become a uniform sample.
            for (std::size_t i = 0; i < m; ++i) std::swap(pool[i], pool[i + rng.bounded(d - i)]);
            candidates.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(m));
            std::sort(candidates.begin(), candidates.end());
        } else {
            candidates.resize(d);
            std::iota(candidates.begin(), candidates.end(), 0);
        }

        const auto choice = detail::best_split(data, label, range, candidates);
        if (choice.feature < 0) continue;

        const auto col = static_cast<std::size_t>(choice.feature);
        std::stable_partition(range.begin(), range.end(), [&](std::uint32_t r) { return data.x_at(r, col) == 0; });

        const auto left = static_cast<std::uint32_t>(tree.nodes.size());
        const auto right = left + 1;
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        TreeNode& node = tree.nodes[w.node];
        node.feature = choice.feature;
        node.left = left;
        node.right = right;
        const double decrease = detail::weighted_gini(range.size(), pos) - detail::weighted_gini(choice.n0, choice.p0) -
                                detail::weighted_gini(choice.n1, choice.p1);
        node.gain = std::max(0.0, decrease) / root_samples;

        const std::size_t mid = w.begin + choice.n0;
        stack.push_back({right, mid, w.end, w.depth + 1});
        stack.push_back({left, w.begin, mid, w.depth + 1});
    }
    return tree;
}

/// Row multiset a tree trains on.
inline std::vector<std::uint32_t> draw_training_rows(const SampleMatrix& data, std::size_t label, const Hyperparams& hp,
                                                     SplitMix64& rng) {
    const std::size_t n = data.rows;
    std::vector<std::uint32_t> rows;
    rows.reserve(n);
    if (hp.balance_classes) {
        std::vector<std::uint32_t> pos, neg;
        for (std::size_t r = 0; r < n; ++r) (data.y_at(r, label) ? pos : neg).push_back(static_cast<std::uint32_t>(r));
        if (!pos.empty() && !neg.empty()) {
            const std::size_t half = (n + 1) / 2;
            for (std::size_t i = 0; i < half; ++i) rows.push_back(pos[rng.bounded(pos.size())]);
            for (std::size_t i = half; i < n; ++i) rows.push_back(neg[rng.bounded(neg.size())]);
            return rows;
        }
    }
    if (hp.bootstrap || hp.balance_classes) {
        for (std::size_t i = 0; i < n; ++i) rows.push_back(static_cast<std::uint32_t>(rng.bounded(n)));
    } else {
        for (std::size_t i = 0; i < n; ++i) rows.push_back(static_cast<std::uint32_t>(i));
    }
    return rows;
}

struct MultiLabelForest {
    Hyperparams hyperparams;
    std::vector<FeatureId> feature_names;
    std::vector<FeatureId> label_names;
    std::vector<std::vector<DecisionTree>> per_label;
    std::vector<double> importance;                    ///< normalized over all labels
    std::vector<std::vector<double>> label_importance; ///< normalized within each label

    std::size_t features() const noexcept { return feature_names.size(); }
    std::size_t labels() const noexcept { return label_names.size(); }
};

namespace detail {

inline std::vector<double> normalized(std::vector<double> v) {
    double total = 0.0;
    for (double x : v) total += x;
    if (total > 0.0)
        for (double& x : v) x /= total;
    return v;
}

} // namespace detail

/// Trains one ensemble per label column. Tree (l, t) draws from its own
/// stream derive_seed(seed, l, t), so the forest does not depend on `workers`.
inline MultiLabelForest fit(const SampleMatrix& data, const Hyperparams& hp, unsigned workers = 1,
                            Diagnostics* diag = nullptr) {
    data.validate();
    hp.validate();
    const std::size_t L = data.labels(), T = hp.n_trees, d = data.features();

    for (std::size_t l = 0; l < L; ++l) {
        std::uint64_t pos = 0;
        for (std::size_t r = 0; r < data.rows; ++r) pos += data.y_at(r, l);
        if (pos == 0 || pos == data.rows)
            warn(diag, "label '" + data.label_names[l].key() + "' is constant " + (pos == 0 ? "negative" : "positive") +
                           " in training data; its trees are single leaves");
    }

    MultiLabelForest model;
    model.hyperparams = hp;
    model.feature_names = data.feature_names;
    model.label_names = data.label_names;
    model.per_label.assign(L, std::vector<DecisionTree>(T));

    parallel_for(L * T, workers, [&](std::size_t task) {
        const std::size_t l = task / T, t = task % T;
        SplitMix64 rng(derive_seed(hp.seed, l, t));
        auto rows = draw_training_rows(data, l, hp, rng);
        model.per_label[l][t] = grow_tree(data, l, std::move(rows), hp, rng);
    });

    // Summed in fixed (label, tree, node) order for bit-stable results.
    std::vector<double> total(d, 0.0);
    model.label_importance.assign(L, std::vector<double>(d, 0.0));
    for (std::size_t l = 0; l < L; ++l) {
        auto& raw = model.label_importance[l];
        for (const auto& tree : model.per_label[l])
            for (const auto& node : tree.nodes)
                if (!node.is_leaf()) raw[static_cast<std::size_t>(node.feature)] += node.gain;
        for (std::size_t c = 0; c < d; ++c) {
            raw[c] /= static_cast<double>(T);
            total[c] += raw[c];
        }
        raw = detail::normalized(std::move(raw));
    }
    model.importance = detail::normalized(std::move(total));
    return model;
}

struct Prediction {
    std::vector<double> scores;        ///< fraction of trees voting positive, per label
    std::vector<std::uint8_t> labels;  ///< 1 where score >= vote_threshold
};

inline Prediction predict(const MultiLabelForest& model, std::span<const std::uint8_t> row) {
    if (row.size() != model.features())
        throw DataError("prediction row has " + std::to_string(row.size()) + " features, model expects " +
                        std::to_string(model.features()));
    Prediction out;
    out.scores.reserve(model.labels());
    out.labels.reserve(model.labels());
    for (const auto& ensemble : model.per_label) {
        std::size_t votes = 0;
        for (const auto& tree : ensemble) votes += tree.votes_positive(row);
        const double score = static_cast<double>(votes) / static_cast<double>(ensemble.size());
        out.scores.push_back(score);
        out.labels.push_back(score >= model.hyperparams.vote_threshold ? 1 : 0);
    }
    return out;
}

/// Top-k features by importance, descending, ties by FeatureId. With `label`
/// the ranking uses that label's own importance vector.
inline std::vector<std::pair<FeatureId, double>> feature_importance_report(const MultiLabelForest& model, std::size_t k,
                                                                           std::optional<std::size_t> label = std::nullopt) {
    const auto& values = label ? model.label_importance.at(*label) : model.importance;
    std::vector<std::pair<FeatureId, double>> out;
    out.reserve(values.size());
    for (std::size_t c = 0; c < values.size(); ++c) out.emplace_back(model.feature_names[c], values[c]);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (out.size() > k) out.resize(k);
    return out;
}

/// `au,importance` with six decimals.
inline std::string importance_csv(const std::vector<std::pair<FeatureId, double>>& ranked, bool full_precision = false) {
    std::string out = "au,importance\n";
    for (const auto& [f, v] : ranked)
        csv::write_row(out, {f.display(), full_precision ? csv::format_exact(v) : csv::format_fixed(v, 6)});
    return out;
}

} // namespace signaffect
