#pragma once

// Line-oriented text format for MultiLabelForest. Field-by-field description
// in docs/model-format.md. Leaves store integer counts, so a loaded model votes
// exactly like the one that was saved.

#include <charconv>
#include <string>
#include <string_view>
#include <vector>

#include "signaffect/csv.hpp"
#include "signaffect/error.hpp"
#include "signaffect/forest.hpp"

namespace signaffect {

inline constexpr std::string_view model_magic = "signaffect-forest";
inline constexpr int model_version = 1;

namespace detail {

inline std::string feature_rule_name(const Hyperparams& hp) {
    switch (hp.feature_rule) {
        case FeatureRule::sqrt: return "sqrt";
        case FeatureRule::all: return "all";
        case FeatureRule::fixed: return std::to_string(hp.features_fixed);
    }
    return "sqrt";
}

inline void parse_feature_rule(std::string_view s, Hyperparams& hp) {
    if (s == "sqrt") {
        hp.feature_rule = FeatureRule::sqrt;
    } else if (s == "all") {
        hp.feature_rule = FeatureRule::all;
    } else {
        hp.feature_rule = FeatureRule::fixed;
        hp.features_fixed = csv::parse_uint(s, 0, "features_per_split");
    }
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || p != s.data() + s.size()) throw DataError("bad number '" + std::string(s) + "'");
    return v;
}

class LineReader {
public:
    explicit LineReader(std::string_view text) : text_(text) {}

    std::vector<std::string> next(std::string_view expect_tag) {
        if (pos_ >= text_.size()) throw DataError("model file truncated, expected '" + std::string(expect_tag) + "'");
        auto eol = text_.find('\n', pos_);
        if (eol == std::string_view::npos) eol = text_.size();
        std::string_view line = text_.substr(pos_, eol - pos_);
        pos_ = eol + 1;
        ++line_no_;
        std::vector<std::string> fields;
        for (;;) {
            const auto tab = line.find('\t');
            fields.emplace_back(line.substr(0, tab));
            if (tab == std::string_view::npos) break;
            line = line.substr(tab + 1);
        }
        if (fields[0] != expect_tag)
            throw DataError("model file line " + std::to_string(line_no_) + ": expected '" + std::string(expect_tag) +
                            "', found '" + fields[0] + "'");
        return fields;
    }

    std::uint64_t uint_field(const std::vector<std::string>& f, std::size_t i) const {
        check(f, i);
        return csv::parse_uint(f[i], line_no_, "integer");
    }
    double double_field(const std::vector<std::string>& f, std::size_t i) const {
        check(f, i);
        return parse_double(f[i]);
    }
    void check(const std::vector<std::string>& f, std::size_t i) const {
        if (i >= f.size()) throw DataError("model file line " + std::to_string(line_no_) + ": missing field");
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t line_no_ = 0;
};

} // namespace detail

inline std::string save_model(const MultiLabelForest& m) {
    const auto& hp = m.hyperparams;
    std::string out;
    const auto line = [&out](std::initializer_list<std::string> fields) {
        bool first = true;
        for (const auto& f : fields) {
            if (!first) out += '\t';
            out += f;
            first = false;
        }
        out += '\n';
    };
    line({std::string(model_magic), std::to_string(model_version)});
    line({"n_trees", std::to_string(hp.n_trees)});
    line({"max_depth", hp.max_depth ? std::to_string(*hp.max_depth) : "none"});
    line({"min_samples_split", std::to_string(hp.min_samples_split)});
    line({"features_per_split", detail::feature_rule_name(hp)});
    line({"bootstrap", hp.bootstrap ? "1" : "0"});
    line({"balance_classes", hp.balance_classes ? "1" : "0"});
    line({"seed", std::to_string(hp.seed)});
    line({"vote_threshold", csv::format_exact(hp.vote_threshold)});

    line({"features", std::to_string(m.features())});
    for (const auto& f : m.feature_names) line({"feature", std::string(to_string(f.category())), f.type(), f.value()});
    line({"labels", std::to_string(m.labels())});
    for (const auto& f : m.label_names) line({"label", std::string(to_string(f.category())), f.type(), f.value()});

    std::string imp = "importance";
    for (double v : m.importance) imp += "\t" + csv::format_exact(v);
    out += imp + "\n";
    for (std::size_t l = 0; l < m.labels(); ++l) {
        std::string li = "label_importance\t" + std::to_string(l);
        for (double v : m.label_importance[l]) li += "\t" + csv::format_exact(v);
        out += li + "\n";
    }

    for (std::size_t l = 0; l < m.labels(); ++l) {
        for (std::size_t t = 0; t < m.per_label[l].size(); ++t) {
            const auto& tree = m.per_label[l][t];
            line({"tree", std::to_string(l), std::to_string(t), std::to_string(tree.nodes.size())});
            for (const auto& n : tree.nodes)
                line({"node", std::to_string(n.feature), std::to_string(n.left), std::to_string(n.right),
                      std::to_string(n.positives), std::to_string(n.samples), csv::format_exact(n.gain)});
        }
    }
    line({"end"});
    return out;
}

inline MultiLabelForest load_model(std::string_view text) {
    detail::LineReader in(text);
    MultiLabelForest m;
    auto header = in.next(model_magic);
    if (in.uint_field(header, 1) != model_version) throw DataError("unsupported model version " + header.at(1));

    auto& hp = m.hyperparams;
    hp.n_trees = in.uint_field(in.next("n_trees"), 1);
    if (auto f = in.next("max_depth"); f.at(1) == "none")
        hp.max_depth.reset();
    else
        hp.max_depth = in.uint_field(f, 1);
    hp.min_samples_split = in.uint_field(in.next("min_samples_split"), 1);
    {
        auto f = in.next("features_per_split");
        in.check(f, 1);
        detail::parse_feature_rule(f[1], hp);
    }
    hp.bootstrap = in.uint_field(in.next("bootstrap"), 1) != 0;
    hp.balance_classes = in.uint_field(in.next("balance_classes"), 1) != 0;
    hp.seed = in.uint_field(in.next("seed"), 1);
    hp.vote_threshold = in.double_field(in.next("vote_threshold"), 1);
    hp.validate();

    const auto read_ids = [&](const char* count_tag, const char* tag) {
        std::vector<FeatureId> ids(in.uint_field(in.next(count_tag), 1));
        for (auto& id : ids) {
            auto f = in.next(tag);
            in.check(f, 3);
            auto cat = parse_category(f[1]);
            if (!cat) throw DataError("unknown category '" + f[1] + "' in model file");
            id = FeatureId(*cat, f[2], f[3]);
        }
        return ids;
    };
    m.feature_names = read_ids("features", "feature");
    m.label_names = read_ids("labels", "label");
    const std::size_t d = m.features(), L = m.labels();

    {
        auto f = in.next("importance");
        if (f.size() != d + 1) throw DataError("importance vector has the wrong length");
        for (std::size_t c = 0; c < d; ++c) m.importance.push_back(in.double_field(f, c + 1));
    }
    m.label_importance.resize(L);
    for (std::size_t l = 0; l < L; ++l) {
        auto f = in.next("label_importance");
        if (f.size() != d + 2 || in.uint_field(f, 1) != l) throw DataError("malformed label_importance line");
        for (std::size_t c = 0; c < d; ++c) m.label_importance[l].push_back(in.double_field(f, c + 2));
    }

    m.per_label.assign(L, std::vector<DecisionTree>(hp.n_trees));
    for (std::size_t l = 0; l < L; ++l) {
        for (std::size_t t = 0; t < hp.n_trees; ++t) {
            auto f = in.next("tree");
            if (in.uint_field(f, 1) != l || in.uint_field(f, 2) != t) throw DataError("trees out of order in model file");
            const auto count = in.uint_field(f, 3);
            if (count == 0) throw DataError("tree with no nodes");
            auto& nodes = m.per_label[l][t].nodes;
            nodes.resize(count);
            for (std::size_t i = 0; i < nodes.size(); ++i) {
                auto& n = nodes[i];
                auto nf = in.next("node");
                in.check(nf, 6);
                std::int32_t feature = 0;
                auto [p, ec] = std::from_chars(nf[1].data(), nf[1].data() + nf[1].size(), feature);
                if (ec != std::errc{} || feature < -1 || feature >= static_cast<std::int32_t>(d))
                    throw DataError("node split feature out of range");
                n.feature = feature;
                n.left = static_cast<std::uint32_t>(in.uint_field(nf, 2));
                n.right = static_cast<std::uint32_t>(in.uint_field(nf, 3));
                n.positives = in.uint_field(nf, 4);
                n.samples = in.uint_field(nf, 5);
                n.gain = in.double_field(nf, 6);
                if (n.positives > n.samples) throw DataError("leaf with more positives than samples");
                if (!n.is_leaf() && (n.left >= count || n.right >= count || n.left <= i || n.right <= i))
                    throw DataError("node child index out of range");
            }
        }
    }
    in.next("end");
    return m;
}

} // namespace signaffect
