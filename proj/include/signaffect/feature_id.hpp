#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "signaffect/error.hpp"

namespace signaffect {

enum class Category { facial, linguistic, emotion, au, fer };

inline constexpr std::array<Category, 5> all_categories{
    Category::facial, Category::linguistic, Category::emotion, Category::au, Category::fer};

inline std::string_view to_string(Category c) {
    switch (c) {
        case Category::facial: return "facial";
        case Category::linguistic: return "linguistic";
        case Category::emotion: return "emotion";
        case Category::au: return "au";
        case Category::fer: return "fer";
    }
    return "unknown";
}

inline std::optional<Category> parse_category(std::string_view s) {
    for (Category c : all_categories)
        if (to_string(c) == s) return c;
    return std::nullopt;
}

/// Lowercase ASCII, trim, and collapse internal whitespace runs to one space.
inline std::string canonicalize(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char ch : s) {
        const auto c = static_cast<unsigned char>(ch);
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch);
    }
    return out;
}

inline std::string trim(std::string_view s) {
    const auto is_space = [](char c) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    };
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

/// Canonical (category, type, value) identity of a feature from any modality.
/// Construction canonicalizes type and value, so equality is plain string equality.
class FeatureId {
public:
    FeatureId() = default;
    FeatureId(Category category, std::string_view type, std::string_view value)
        : category_(category), type_(canonicalize(type)), value_(canonicalize(value)) {}

    Category category() const noexcept { return category_; }
    const std::string& type() const noexcept { return type_; }
    const std::string& value() const noexcept { return value_; }

    friend bool operator==(const FeatureId&, const FeatureId&) = default;
    friend std::strong_ordering operator<=>(const FeatureId& a, const FeatureId& b) {
        if (auto c = a.category_ <=> b.category_; c != 0) return c;
        if (auto c = a.type_.compare(b.type_); c != 0) return c <=> 0;
        return a.value_.compare(b.value_) <=> 0;
    }

    /// Stable machine form `category:type=value`.
    std::string key() const {
        return std::string(to_string(category_)) + ":" + type_ + "=" + value_;
    }

    /// Human form used in report tables: `type=value` for annotation features,
    /// the AU label for action units, `category (lexicon)` for emotion labels.
    std::string display() const {
        switch (category_) {
            case Category::au: return value_.empty() ? type_ : value_;
            case Category::emotion: return value_ + " (" + type_ + ")";
            case Category::fer: return "fer " + type_ + "=" + value_;
            default: return value_.empty() ? type_ : type_ + "=" + value_;
        }
    }

private:
    Category category_ = Category::facial;
    std::string type_;
    std::string value_;
};

/// Parses the `category:type=value` form produced by FeatureId::key().
inline FeatureId parse_feature_key(std::string_view key) {
    const auto colon = key.find(':');
    const auto eq = key.find('=', colon == std::string_view::npos ? 0 : colon);
    if (colon == std::string_view::npos || eq == std::string_view::npos)
        throw DataError("malformed feature key '" + std::string(key) + "'");
    const auto cat = parse_category(key.substr(0, colon));
    if (!cat) throw DataError("unknown feature category in '" + std::string(key) + "'");
    return FeatureId(*cat, key.substr(colon + 1, eq - colon - 1), key.substr(eq + 1));
}

/// Emotion labels are emotion-category features qualified by lexicon name, so
/// same-named categories from different lexica stay distinct.
inline FeatureId emotion_label(std::string_view lexicon_name, std::string_view category) {
    return FeatureId(Category::emotion, lexicon_name, category);
}

/// Row names for a report table. Emotion labels show the bare category unless
/// another label in the table shares it, then `category (lexicon)`.
inline std::vector<std::string> table_names(const std::vector<FeatureId>& ids) {
    std::map<std::string, std::size_t> uses;
    for (const auto& f : ids)
        if (f.category() == Category::emotion) ++uses[f.value()];
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (const auto& f : ids)
        out.push_back(f.category() == Category::emotion && uses[f.value()] == 1 ? f.value() : f.display());
    return out;
}

} // namespace signaffect

template <>
struct std::hash<signaffect::FeatureId> {
    std::size_t operator()(const signaffect::FeatureId& f) const noexcept {
        std::size_t h = std::hash<int>{}(static_cast<int>(f.category()));
        h ^= std::hash<std::string>{}(f.type()) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        h ^= std::hash<std::string>{}(f.value()) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        return h;
    }
};
