#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "signaffect/csv.hpp"
#include "signaffect/error.hpp"
#include "signaffect/feature_id.hpp"

namespace signaffect {

/// One tier value over an inclusive frame interval of one video.
struct AnnotationSpan {
    std::string video_id;
    std::string tier;
    std::string value;
    std::uint64_t start_frame = 0;
    std::uint64_t end_frame = 0;

    std::uint64_t length() const noexcept { return end_frame - start_frame + 1; }
    friend bool operator==(const AnnotationSpan&, const AnnotationSpan&) = default;
};

enum class SpanFormat { span_csv, span_jsonl };

inline SpanFormat parse_span_format(std::string_view tag) {
    if (tag == "span_csv" || tag == "csv") return SpanFormat::span_csv;
    if (tag == "span_jsonl" || tag == "jsonl") return SpanFormat::span_jsonl;
    throw DataError("unknown span format '" + std::string(tag) + "'");
}

inline constexpr std::string_view span_csv_header = "video_id,tier,value,start_frame,end_frame";

namespace detail {

inline AnnotationSpan make_span(std::size_t record, std::string_view video, std::string_view tier,
                                std::string_view value, std::uint64_t start, std::uint64_t end) {
    AnnotationSpan span{trim(video), trim(tier), trim(value), start, end};
    if (span.video_id.empty()) throw ParseError(record, "empty video_id");
    if (span.tier.empty()) throw ParseError(record, "empty tier");
    if (span.value.empty()) throw ParseError(record, "empty value");
    if (span.end_frame < span.start_frame) throw ParseError(record, "inverted span");
    return span;
}

inline std::vector<AnnotationSpan> parse_span_csv(std::string_view input) {
    std::vector<AnnotationSpan> spans;
    const auto rows = csv::read(input);
    if (rows.empty()) return spans;

    std::string header;
    for (std::size_t i = 0; i < rows[0].fields.size(); ++i)
        header += (i ? "," : "") + trim(rows[0].fields[i]);
    if (header != span_csv_header)
        throw DataError("span_csv header must be '" + std::string(span_csv_header) + "', got '" + header + "'");

    spans.reserve(rows.size() - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& f = rows[r].fields;
        if (f.size() != 5)
            throw ParseError(r, "expected 5 fields, found " + std::to_string(f.size()) + " (line " +
                                    std::to_string(rows[r].line) + ")");
        spans.push_back(make_span(r, f[0], f[1], f[2], csv::parse_uint(trim(f[3]), r, "start_frame"),
                                  csv::parse_uint(trim(f[4]), r, "end_frame")));
    }
    return spans;
}

inline std::vector<AnnotationSpan> parse_span_jsonl(std::string_view input) {
    std::vector<AnnotationSpan> spans;
    std::size_t record = 0, pos = 0;
    while (pos < input.size()) {
        auto eol = input.find('\n', pos);
        if (eol == std::string_view::npos) eol = input.size();
        const std::string line = trim(input.substr(pos, eol - pos));
        pos = eol + 1;
        if (line.empty()) continue;
        ++record;

        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(record, std::string("invalid JSON (") + e.what() + ")");
        }
        if (!obj.is_object()) throw ParseError(record, "expected a JSON object");
        const auto text = [&](const char* key) {
            auto it = obj.find(key);
            if (it == obj.end() || !it->is_string()) throw ParseError(record, std::string("missing string field '") + key + "'");
            return it->get<std::string>();
        };
        const auto frame = [&](const char* key) {
            auto it = obj.find(key);
            if (it == obj.end() || !it->is_number_unsigned())
                throw ParseError(record, std::string("missing non-negative integer field '") + key + "'");
            return it->get<std::uint64_t>();
        };
        spans.push_back(make_span(record, text("video_id"), text("tier"), text("value"), frame("start_frame"),
                                  frame("end_frame")));
    }
    return spans;
}

} // namespace detail

/// Parses an interchange file into spans, in file order. Records are numbered
/// from 1 (the first data row); errors carry that number.
inline std::vector<AnnotationSpan> parse_annotations(std::string_view input, SpanFormat format) {
    switch (format) {
        case SpanFormat::span_csv: return detail::parse_span_csv(input);
        case SpanFormat::span_jsonl: return detail::parse_span_jsonl(input);
    }
    throw DataError("unknown span format");
}

inline std::vector<AnnotationSpan> parse_annotations(std::string_view input, std::string_view format_tag) {
    return parse_annotations(input, parse_span_format(format_tag));
}

inline std::string serialize_spans(const std::vector<AnnotationSpan>& spans, SpanFormat format) {
    std::string out;
    if (format == SpanFormat::span_csv) {
        out += span_csv_header;
        out += '\n';
        for (const auto& s : spans)
            csv::write_row(out, {s.video_id, s.tier, s.value, std::to_string(s.start_frame), std::to_string(s.end_frame)});
        return out;
    }
    for (const auto& s : spans) {
        nlohmann::ordered_json obj;
        obj["video_id"] = s.video_id;
        obj["tier"] = s.tier;
        obj["value"] = s.value;
        obj["start_frame"] = s.start_frame;
        obj["end_frame"] = s.end_frame;
        out += obj.dump();
        out += '\n';
    }
    return out;
}

enum class TierKind { facial, linguistic, gloss, translation };

/// Decides what each tier contributes to a frame. Tiers not recognized as
/// facial, gloss or translation are linguistic.
class TierScheme {
public:
    static TierScheme defaults() {
        TierScheme s;
        s.facial_prefixes_ = {"eye brows", "eyebrows", "eye gaze", "eye aperture", "eyes", "nose",  "cheeks",
                              "mouth",     "lips",     "tongue",   "head pos",     "head mvmt", "shoulders", "body"};
        s.gloss_tiers_ = {"gloss", "main gloss", "dominant hand gloss", "non-dominant hand gloss"};
        s.translation_tiers_ = {"translation", "english translation"};
        return s;
    }

    void add_facial_tier(std::string_view tier) { facial_exact_.push_back(canonicalize(tier)); }

    TierKind classify(std::string_view tier) const {
        const auto t = canonicalize(tier);
        if (std::find(translation_tiers_.begin(), translation_tiers_.end(), t) != translation_tiers_.end())
            return TierKind::translation;
        if (std::find(gloss_tiers_.begin(), gloss_tiers_.end(), t) != gloss_tiers_.end()) return TierKind::gloss;
        if (std::find(facial_exact_.begin(), facial_exact_.end(), t) != facial_exact_.end()) return TierKind::facial;
        for (const auto& p : facial_prefixes_)
            if (t.starts_with(p)) return TierKind::facial;
        return TierKind::linguistic;
    }

private:
    std::vector<std::string> facial_prefixes_;
    std::vector<std::string> facial_exact_;
    std::vector<std::string> gloss_tiers_;
    std::vector<std::string> translation_tiers_;
};

/// Sorted, duplicate-free feature set.
using FeatureSet = std::vector<FeatureId>;

inline bool insert_feature(FeatureSet& set, FeatureId f) {
    auto it = std::lower_bound(set.begin(), set.end(), f);
    if (it != set.end() && *it == f) return false;
    set.insert(it, std::move(f));
    return true;
}

inline bool contains_feature(const FeatureSet& set, const FeatureId& f) {
    return std::binary_search(set.begin(), set.end(), f);
}

struct FrameRecord {
    std::string video_id;
    std::uint64_t frame_index = 0;
    FeatureSet features;
    std::vector<std::string> gloss_tokens;
    std::string translation;

    friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

struct ExpansionStats {
    std::uint64_t span_frames = 0;         ///< sum of inclusive span lengths
    std::uint64_t payload_instances = 0;   ///< per-frame contributions, before deduplication
    std::uint64_t feature_instances = 0;   ///< feature contributions, before deduplication
    std::uint64_t duplicate_features = 0;  ///< contributions absorbed by set semantics
};

/// Copies every span onto each frame of its inclusive interval. Frames with no
/// span are absent; output is ordered by (video_id, frame_index).
inline std::vector<FrameRecord> expand_to_frames(const std::vector<AnnotationSpan>& spans,
                                                 const TierScheme& scheme = TierScheme::defaults(),
                                                 ExpansionStats* stats = nullptr) {
    std::map<std::pair<std::string, std::uint64_t>, FrameRecord> frames;
    ExpansionStats local;

    for (const auto& span : spans) {
        if (span.end_frame < span.start_frame) throw DataError("inverted span for video " + span.video_id);
        const TierKind kind = scheme.classify(span.tier);
        std::optional<FeatureId> feature;
        if (kind == TierKind::facial) feature.emplace(Category::facial, span.tier, span.value);
        if (kind == TierKind::linguistic) feature.emplace(Category::linguistic, span.tier, span.value);
        local.span_frames += span.length();

        for (std::uint64_t f = span.start_frame;; ++f) {
            auto [it, fresh] = frames.try_emplace({span.video_id, f});
            FrameRecord& rec = it->second;
            if (fresh) {
                rec.video_id = span.video_id;
                rec.frame_index = f;
            }
            ++local.payload_instances;
            switch (kind) {
                case TierKind::gloss: rec.gloss_tokens.push_back(span.value); break;
                case TierKind::translation:
                    if (!rec.translation.empty()) rec.translation += ' ';
                    rec.translation += span.value;
                    break;
                default:
                    ++local.feature_instances;
                    if (!insert_feature(rec.features, *feature)) ++local.duplicate_features;
            }
            if (f == span.end_frame) break;
        }
    }

    if (stats != nullptr) *stats = local;
    std::vector<FrameRecord> out;
    out.reserve(frames.size());
    for (auto& [key, rec] : frames) out.push_back(std::move(rec));
    return out;
}

/// Frame counts per feature, plus the bookkeeping totals reported with them.
struct CountHistogram {
    std::map<FeatureId, std::uint64_t> counts;
    std::uint64_t total_instances = 0;
    std::uint64_t frame_count = 0;

    double mean_per_frame() const {
        return frame_count == 0 ? 0.0 : static_cast<double>(total_instances) / static_cast<double>(frame_count);
    }

    std::uint64_t count(const FeatureId& f) const {
        auto it = counts.find(f);
        return it == counts.end() ? 0 : it->second;
    }
};

inline CountHistogram feature_counts(const std::vector<FrameRecord>& frames,
                                     std::optional<Category> category_filter = std::nullopt) {
    CountHistogram h;
    h.frame_count = frames.size();
    for (const auto& rec : frames) {
        for (const auto& f : rec.features) {
            if (category_filter && f.category() != *category_filter) continue;
            ++h.counts[f];
            ++h.total_instances;
        }
    }
    return h;
}

/// `category,type,value,frames`, most frequent first.
inline std::string histogram_csv(const CountHistogram& h) {
    std::vector<std::pair<FeatureId, std::uint64_t>> rows(h.counts.begin(), h.counts.end());
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::string out = "category,type,value,frames\n";
    for (const auto& [f, n] : rows)
        csv::write_row(out, {std::string(to_string(f.category())), f.type(), f.value(), std::to_string(n)});
    return out;
}

/// Frame table: one row per frame, features as `|`-joined keys.
inline std::string frame_table_csv(const std::vector<FrameRecord>& frames) {
    std::string out = "video_id,frame_index,features,gloss,translation\n";
    for (const auto& rec : frames) {
        std::string features, gloss;
        for (const auto& f : rec.features) {
            if (!features.empty()) features += '|';
            features += f.key();
        }
        for (const auto& g : rec.gloss_tokens) {
            if (!gloss.empty()) gloss += ' ';
            gloss += g;
        }
        csv::write_row(out, {rec.video_id, std::to_string(rec.frame_index), features, gloss, rec.translation});
    }
    return out;
}

} // namespace signaffect
