#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "signaffect/corpus.hpp"
#include "signaffect/csv.hpp"
#include "signaffect/error.hpp"
#include "signaffect/feature_id.hpp"

namespace signaffect {

/// A FACS action unit.
struct AUCode {
    unsigned au_id = 0;
    std::string label;

    /// The au-category feature this code contributes to a frame.
    FeatureId feature() const { return FeatureId(Category::au, "au" + std::to_string(au_id), label); }

    friend bool operator==(const AUCode&, const AUCode&) = default;
};

/// Maps facial annotation features onto action units. Several sources may
/// share one AU; a source resolves to at most one AU. A row whose value is `*`
/// matches any value of its tier; exact rows take precedence.
class AuMappingTable {
public:
    struct Entry {
        std::string tier;  ///< canonical
        std::string value; ///< canonical, or "*"
        AUCode code;
    };

    static constexpr std::string_view csv_header = "tier,value,au_id,au_label";

    void add(std::string_view tier, std::string_view value, unsigned au_id, std::string_view label) {
        if (au_id == 0) throw DataError("au_id must be a positive integer");
        Entry e{canonicalize(tier), canonicalize(value), AUCode{au_id, canonicalize(label)}};
        if (e.tier.empty() || e.value.empty()) throw DataError("AU mapping row needs a tier and a value");
        if (e.value.find('*') != std::string::npos && e.value != "*")
            throw DataError("AU mapping value may only be '*' or a literal: '" + e.value + "'");
        if (auto it = labels_.find(au_id); it != labels_.end() && it->second != e.code.label)
            throw DataError("AU " + std::to_string(au_id) + " has conflicting labels '" + it->second + "' and '" +
                            e.code.label + "'");
        const auto key = std::make_pair(e.tier, e.value);
        if (auto it = index_.find(key); it != index_.end()) {
            if (entries_[it->second].code.au_id != au_id)
                throw DataError("source '" + e.tier + "=" + e.value + "' maps to more than one AU");
            return;
        }
        labels_[au_id] = e.code.label;
        index_[key] = entries_.size();
        entries_.push_back(std::move(e));
    }

    std::optional<AUCode> lookup(const FeatureId& f) const {
        if (auto it = index_.find({f.type(), f.value()}); it != index_.end()) return entries_[it->second].code;
        if (auto it = index_.find({f.type(), "*"}); it != index_.end()) return entries_[it->second].code;
        return std::nullopt;
    }

    const std::vector<Entry>& entries() const noexcept { return entries_; }
    bool empty() const noexcept { return entries_.empty(); }

    std::set<std::string> tiers() const {
        std::set<std::string> out;
        for (const auto& e : entries_) out.insert(e.tier);
        return out;
    }

    static AuMappingTable load_csv(std::string_view text) {
        AuMappingTable table;
        const auto rows = csv::read(text);
        if (rows.empty()) throw DataError("AU mapping is empty");
        std::string header;
        for (std::size_t i = 0; i < rows[0].fields.size(); ++i) header += (i ? "," : "") + trim(rows[0].fields[i]);
        if (header != csv_header) throw DataError("AU mapping header must be '" + std::string(csv_header) + "'");
        for (std::size_t r = 1; r < rows.size(); ++r) {
            const auto& f = rows[r].fields;
            if (f.size() != 4) throw ParseError(r, "expected 4 fields in AU mapping");
            const auto id = csv::parse_uint(trim(f[2]), r, "au_id");
            try {
                table.add(f[0], f[1], static_cast<unsigned>(id), f[3]);
            } catch (const ParseError&) {
                throw;
            } catch (const DataError& e) {
                throw ParseError(r, e.what());
            }
        }
        return table;
    }

    std::string to_csv() const {
        std::string out(csv_header);
        out += '\n';
        for (const auto& e : entries_) csv::write_row(out, {e.tier, e.value, std::to_string(e.code.au_id), e.code.label});
        return out;
    }

    /// Built-in table: brow, nose, cheek, mouth, gaze and head position/movement codes.
    static AuMappingTable defaults() {
        AuMappingTable t;
        t.add("eye brows", "raised", 1, "eye brows raised");
        t.add("eye brows", "slightly raised", 1, "eye brows raised");
        t.add("eye brows", "further raised", 1, "eye brows raised");
        t.add("eye brows", "lowered", 4, "eye brows lowered");
        t.add("eye brows", "slightly lowered", 4, "eye brows lowered");
        t.add("eye brows", "further lowered", 4, "eye brows lowered");
        t.add("eye aperture", "wide", 5, "eyes wide");
        t.add("cheeks", "tensed", 6, "cheeks tensed");
        t.add("eye aperture", "squint", 7, "eyes squint");
        t.add("nose", "wrinkle", 9, "nose wrinkle/tensed");
        t.add("nose", "tensed", 9, "nose wrinkle/tensed");
        t.add("mouth", "smile", 12, "lip corner puller");
        t.add("mouth", "pursed", 18, "lips pursed");
        t.add("mouth", "tongue out", 19, "tongue show");
        t.add("mouth", "open", 26, "mouth open");
        t.add("cheeks", "puffed", 34, "cheeks puffed");
        t.add("cheeks", "sucked in", 35, "cheeks sucked in");
        t.add("eye aperture", "closed", 43, "eyes closed");
        t.add("eye aperture", "blink", 45, "blink");
        t.add("head pos: turn", "left", 51, "head pos: turn left");
        t.add("head pos: turn", "right", 52, "head pos: turn right");
        t.add("head pos: tilt fr/bk", "back", 53, "head pos: tilt back");
        t.add("head pos: tilt fr/bk", "front", 54, "head pos: tilt front");
        t.add("head pos: tilt side", "left", 55, "head pos: tilt left");
        t.add("head pos: tilt side", "right", 56, "head pos: tilt right");
        t.add("head pos: jut", "front", 57, "head pos: front");
        t.add("head pos: jut", "back", 58, "head pos: back");
        t.add("head mvmt: nod", "*", 59, "head mvmt: nod");
        t.add("head mvmt: side to side", "*", 60, "head mvmt: shake");
        t.add("eye gaze", "left", 61, "eye gaze left");
        t.add("eye gaze", "right", 62, "eye gaze right");
        t.add("eye gaze", "up", 63, "eye gaze up");
        t.add("eye gaze", "down", 64, "eye gaze down");
        t.add("eye gaze", "to addressee", 69, "eye gaze to addressee");
        t.add("head mvmt: jut", "*", 83, "head mvmt: jut");
        return t;
    }

private:
    std::vector<Entry> entries_;
    std::map<std::pair<std::string, std::string>, std::size_t> index_;
    std::map<unsigned, std::string> labels_;
};

/// Facial features the table could not map, with frame counts.
using UnmappedTally = std::map<FeatureId, std::uint64_t>;

/// Adds one au feature per matched AU code. Original features are kept;
/// unmatched facial features are tallied.
inline FrameRecord map_to_aus(FrameRecord frame, const AuMappingTable& table, UnmappedTally* unmapped = nullptr) {
    std::vector<FeatureId> hits;
    for (const auto& f : frame.features) {
        if (f.category() != Category::facial) continue;
        if (auto code = table.lookup(f))
            hits.push_back(code->feature());
        else if (unmapped != nullptr)
            ++(*unmapped)[f];
    }
    for (auto& h : hits) insert_feature(frame.features, std::move(h));
    return frame;
}

} // namespace signaffect
