#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "signaffect/corpus.hpp"
#include "signaffect/error.hpp"
#include "signaffect/feature_id.hpp"

namespace signaffect {

inline constexpr std::array<std::string_view, 7> fer_classes{"angry", "disgust", "fear", "happy",
                                                              "sad",   "surprise", "neutral"};

/// One line of the facial-expression sidecar.
struct FerRecord {
    std::string video_id;
    std::uint64_t frame_index = 0;
    std::array<double, 7> scores{}; ///< in fer_classes order
    bool face_found = false;
};

inline constexpr double fer_sum_tolerance = 1e-3;

/// Parses the JSON-lines sidecar. Each line carries video_id, frame_index,
/// the seven class scores and face_found. Scores must sum to 1 (within 1e-3)
/// when a face was found and be all zero otherwise.
inline std::vector<FerRecord> parse_fer_sidecar(std::string_view text) {
    std::vector<FerRecord> out;
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
        auto eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        const std::string line = trim(text.substr(pos, eol - pos));
        pos = eol + 1;
        ++line_no;
        if (line.empty()) continue;

        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(line_no, std::string("invalid sidecar JSON (") + e.what() + ")");
        }
        if (!obj.is_object()) throw ParseError(line_no, "sidecar line is not an object");
        FerRecord rec;
        try {
            rec.video_id = obj.at("video_id").get<std::string>();
            if (!obj.at("frame_index").is_number_unsigned())
                throw ParseError(line_no, "frame_index must be a non-negative integer");
            rec.frame_index = obj.at("frame_index").get<std::uint64_t>();
            rec.face_found = obj.at("face_found").get<bool>();
            for (std::size_t i = 0; i < fer_classes.size(); ++i) {
                const auto& v = obj.at(std::string(fer_classes[i]));
                if (!v.is_number()) throw ParseError(line_no, "score '" + std::string(fer_classes[i]) + "' is not a number");
                rec.scores[i] = v.get<double>();
            }
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(line_no, std::string("missing or mistyped sidecar field (") + e.what() + ")");
        }

        double sum = 0.0;
        for (double s : rec.scores) {
            if (!(s >= 0.0 && s <= 1.0)) throw ParseError(line_no, "score outside [0, 1]");
            sum += s;
        }
        if (rec.face_found && std::abs(sum - 1.0) > fer_sum_tolerance)
            throw ParseError(line_no, "scores sum to " + std::to_string(sum) + ", expected 1");
        if (!rec.face_found && sum != 0.0) throw ParseError(line_no, "face_found is false but scores are non-zero");
        out.push_back(std::move(rec));
    }
    return out;
}

struct FerIngestStats {
    std::size_t records = 0;
    std::size_t matched_frames = 0;
    std::size_t unmatched_records = 0; ///< sidecar frames absent from the corpus
    std::size_t features_added = 0;
};

/// Adds fer:"emotion"=<class> to every frame for each class scoring at least
/// `threshold`. Frames missing from the sidecar are left alone.
inline FerIngestStats ingest_fer_sidecar(std::vector<FrameRecord>& frames, const std::vector<FerRecord>& records,
                                         double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw UsageError("FER threshold must lie in (0, 1)");
    std::map<std::pair<std::string, std::uint64_t>, std::size_t> index;
    for (std::size_t i = 0; i < frames.size(); ++i) index[{frames[i].video_id, frames[i].frame_index}] = i;

    FerIngestStats stats;
    stats.records = records.size();
    for (const auto& rec : records) {
        auto it = index.find({rec.video_id, rec.frame_index});
        if (it == index.end()) {
            ++stats.unmatched_records;
            continue;
        }
        ++stats.matched_frames;
        if (!rec.face_found) continue;
        for (std::size_t i = 0; i < fer_classes.size(); ++i)
            if (rec.scores[i] >= threshold)
                stats.features_added += insert_feature(frames[it->second].features,
                                                       FeatureId(Category::fer, "emotion", fer_classes[i]));
    }
    return stats;
}

} // namespace signaffect
