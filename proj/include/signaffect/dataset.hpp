#pragma once

// Turns tagged frames into the classifier's binary design matrix.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "signaffect/corpus.hpp"
#include "signaffect/forest.hpp"

namespace signaffect {

struct Dataset {
    SampleMatrix matrix;
    std::vector<std::size_t> frame_of_row;  ///< row -> index into the frame list
    std::vector<std::uint64_t> utterance;   ///< row -> utterance group id
};

/// Rows are the given frames in order. Columns are every feature of the
/// `input_categories` seen in those frames, sorted; label columns are `labels`.
inline Dataset make_dataset(const std::vector<FrameRecord>& frames, const std::vector<std::size_t>& rows,
                            const std::set<Category>& input_categories, const std::set<FeatureId>& labels) {
    Dataset ds;
    std::set<FeatureId> columns;
    for (auto i : rows)
        for (const auto& f : frames[i].features)
            if (input_categories.contains(f.category())) columns.insert(f);
    ds.matrix.feature_names.assign(columns.begin(), columns.end());
    ds.matrix.label_names.assign(labels.begin(), labels.end());
    ds.matrix.rows = rows.size();
    const std::size_t d = columns.size(), L = labels.size();
    ds.matrix.x.assign(rows.size() * d, 0);
    ds.matrix.y.assign(rows.size() * L, 0);

    // Frames of one video sharing a translation form one utterance; frames
    // without a translation are their own group.
    std::map<std::pair<std::string, std::string>, std::uint64_t> utterance_ids;
    std::uint64_t next_singleton = 0;
    std::vector<std::pair<std::size_t, bool>> pending;

    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& rec = frames[rows[r]];
        ds.frame_of_row.push_back(rows[r]);
        for (const auto& f : rec.features) {
            if (input_categories.contains(f.category())) {
                auto it = std::lower_bound(ds.matrix.feature_names.begin(), ds.matrix.feature_names.end(), f);
                ds.matrix.x[r * d + static_cast<std::size_t>(it - ds.matrix.feature_names.begin())] = 1;
            } else if (labels.contains(f)) {
                auto it = std::lower_bound(ds.matrix.label_names.begin(), ds.matrix.label_names.end(), f);
                ds.matrix.y[r * L + static_cast<std::size_t>(it - ds.matrix.label_names.begin())] = 1;
            }
        }
        if (rec.translation.empty()) {
            ds.utterance.push_back(next_singleton++);
            pending.emplace_back(r, true);
        } else {
            auto [it, fresh] = utterance_ids.try_emplace({rec.video_id, rec.translation}, utterance_ids.size());
            ds.utterance.push_back(it->second);
            pending.emplace_back(r, false);
        }
    }
    // Keep singleton ids disjoint from translation ids.
    const std::uint64_t offset = utterance_ids.size();
    for (auto [r, singleton] : pending)
        if (singleton) ds.utterance[r] += offset;
    return ds;
}

} // namespace signaffect
