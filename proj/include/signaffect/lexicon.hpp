#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "signaffect/error.hpp"
#include "signaffect/feature_id.hpp"

namespace signaffect {

/// Word-to-category lexicon. Patterns are lowercase words, or prefixes
/// written with a single trailing `*`.
class Lexicon {
public:
    Lexicon() = default;
    explicit Lexicon(std::string name) : name_(canonicalize(name)) {}

    const std::string& name() const noexcept { return name_; }

    void add(std::string_view pattern, const std::set<std::string>& categories) {
        std::string p = canonicalize(pattern);
        const auto star = p.find('*');
        if (star != std::string::npos && star + 1 != p.size()) throw DataError("interior wildcard in pattern '" + p + "'");
        const bool prefix = star != std::string::npos;
        if (prefix) p.pop_back();
        if (p.empty()) throw DataError("empty pattern");
        if (categories.empty()) throw DataError("pattern '" + p + "' has no categories");
        auto& target = prefix ? prefixes_[p] : exact_[p];
        for (const auto& c : categories) {
            auto canon = canonicalize(c);
            if (canon.empty()) throw DataError("empty category for pattern '" + p + "'");
            target.insert(std::move(canon));
        }
    }

    std::size_t pattern_count() const noexcept { return exact_.size() + prefixes_.size(); }

    /// Every category any pattern can emit.
    std::set<std::string> categories() const {
        std::set<std::string> out;
        for (const auto* m : {&exact_, &prefixes_})
            for (const auto& [p, cats] : *m) out.insert(cats.begin(), cats.end());
        return out;
    }

    /// Categories for one normalized token: exact hit plus every prefix hit.
    std::set<std::string> match(std::string_view token) const {
        std::set<std::string> out;
        if (auto it = exact_.find(std::string(token)); it != exact_.end()) out.insert(it->second.begin(), it->second.end());
        for (std::size_t len = 1; len <= token.size(); ++len) {
            if (auto it = prefixes_.find(std::string(token.substr(0, len))); it != prefixes_.end())
                out.insert(it->second.begin(), it->second.end());
        }
        return out;
    }

    /// Entries with prefixes re-suffixed by `*`.
    std::map<std::string, std::set<std::string>> entries() const {
        std::map<std::string, std::set<std::string>> out(exact_.begin(), exact_.end());
        for (const auto& [p, cats] : prefixes_) out[p + "*"] = cats;
        return out;
    }

private:
    std::string name_;
    std::map<std::string, std::set<std::string>> exact_;
    std::map<std::string, std::set<std::string>> prefixes_;
};

/// Reads `pattern : cat1, cat2` lines; `#` starts a comment, blank lines are
/// skipped, repeated patterns merge their categories.
inline Lexicon load_lexicon(std::string_view text, std::string name) {
    Lexicon lex(std::move(name));
    std::size_t pos = 0, line_no = 0;
    while (pos <= text.size()) {
        auto eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const std::string body = trim(line);
        if (body.empty()) continue;

        const auto colon = body.find(':');
        if (colon == std::string::npos) throw ParseError(line_no, "missing ':' in lexicon rule");
        std::set<std::string> cats;
        std::string_view rest = std::string_view(body).substr(colon + 1);
        for (;;) {
            const auto comma = rest.find(',');
            const std::string cat = trim(rest.substr(0, comma));
            if (cat.empty()) throw ParseError(line_no, "empty category");
            cats.insert(cat);
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
        }
        try {
            lex.add(std::string_view(body).substr(0, colon), cats);
        } catch (const DataError& e) {
            throw ParseError(line_no, e.what());
        }
    }
    return lex;
}

/// Lowercases and splits on every non-alphabetic byte. Bytes >= 0x80 count
/// as letters so UTF-8 words stay whole.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (c >= 'A' && c <= 'Z') {
            cur.push_back(static_cast<char>(c - 'A' + 'a'));
        } else if ((c >= 'a' && c <= 'z') || c >= 0x80) {
            cur.push_back(ch);
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

/// Emotion labels for a translation: union over tokens and lexica.
inline std::set<FeatureId> tag_text(std::string_view translation, const std::vector<Lexicon>& lexica) {
    std::set<FeatureId> labels;
    for (const auto& token : tokenize(translation))
        for (const auto& lex : lexica)
            for (const auto& cat : lex.match(token)) labels.insert(emotion_label(lex.name(), cat));
    return labels;
}

/// Labels with at least `min_frames` frames; fewer than that are removed.
inline std::set<FeatureId> apply_threshold(const std::map<FeatureId, std::uint64_t>& label_frame_counts,
                                           std::int64_t min_frames = 10) {
    if (min_frames < 1) throw UsageError("min_frames must be at least 1");
    std::set<FeatureId> kept;
    for (const auto& [label, n] : label_frame_counts)
        if (n >= static_cast<std::uint64_t>(min_frames)) kept.insert(label);
    return kept;
}

} // namespace signaffect
