#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "signaffect/csv.hpp"
#include "signaffect/error.hpp"
#include "signaffect/forest.hpp"
#include "signaffect/metrics.hpp"
#include "signaffect/rng.hpp"

namespace signaffect {

enum class FoldGrouping { frame, utterance };

struct FoldAssignment {
    std::vector<std::size_t> fold_of; ///< row -> fold in [0, k)
    std::size_t k = 0;
    std::uint64_t seed = 0;
    FoldGrouping grouping = FoldGrouping::frame;

    std::vector<std::size_t> rows_in(std::size_t fold) const {
        std::vector<std::size_t> out;
        for (std::size_t r = 0; r < fold_of.size(); ++r)
            if (fold_of[r] == fold) out.push_back(r);
        return out;
    }
    std::vector<std::size_t> rows_not_in(std::size_t fold) const {
        std::vector<std::size_t> out;
        for (std::size_t r = 0; r < fold_of.size(); ++r)
            if (fold_of[r] != fold) out.push_back(r);
        return out;
    }
};

/// Shuffled, seeded k-fold assignment. With `groups`, whole groups are dealt
/// to folds so rows sharing a group id never straddle train and test.
inline FoldAssignment kfold_split(std::size_t n_rows, std::size_t k, std::uint64_t seed,
                                  const std::vector<std::uint64_t>* groups = nullptr) {
    if (k < 2) throw UsageError("k must be at least 2");
    FoldAssignment a;
    a.k = k;
    a.seed = seed;
    a.fold_of.assign(n_rows, 0);
    SplitMix64 rng(mix64(seed ^ 0x6b666f6c64ULL));

    if (groups == nullptr) {
        if (k > n_rows) throw DataError("k = " + std::to_string(k) + " exceeds " + std::to_string(n_rows) + " rows");
        std::vector<std::size_t> order(n_rows);
        std::iota(order.begin(), order.end(), 0);
        shuffle(std::span(order), rng);
        for (std::size_t i = 0; i < n_rows; ++i) a.fold_of[order[i]] = i % k;
        return a;
    }

    if (groups->size() != n_rows) throw DataError("group vector length does not match row count");
    a.grouping = FoldGrouping::utterance;
    std::vector<std::uint64_t> ids(*groups);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (k > ids.size()) throw DataError("k = " + std::to_string(k) + " exceeds " + std::to_string(ids.size()) + " groups");
    shuffle(std::span(ids), rng);
    std::map<std::uint64_t, std::size_t> fold_of_group;
    for (std::size_t i = 0; i < ids.size(); ++i) fold_of_group[ids[i]] = i % k;
    for (std::size_t r = 0; r < n_rows; ++r) a.fold_of[r] = fold_of_group.at((*groups)[r]);
    return a;
}

struct FoldResult {
    std::size_t fold = 0;
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;
    std::size_t leaked_rows = 0; ///< test rows whose group also appears in training
    std::vector<std::uint64_t> tp, fp, fn;
};

struct CrossValidation {
    EvalReport report;
    std::vector<FoldResult> folds;
};

/// Trains on each fold's complement, predicts the fold, and pools
/// tp/fp/fn per label over all folds before scoring.
inline CrossValidation evaluate_cv(const SampleMatrix& data, const Hyperparams& hp, const FoldAssignment& folds,
                                   unsigned workers = 1, const std::vector<std::uint64_t>* groups = nullptr) {
    data.validate();
    if (folds.fold_of.size() != data.rows) throw DataError("fold assignment does not cover every row");
    const std::size_t L = data.labels();
    CrossValidation cv;
    std::vector<std::uint64_t> tp(L, 0), fp(L, 0), fn(L, 0);
    std::vector<std::size_t> positives(L, 0);
    for (std::size_t r = 0; r < data.rows; ++r)
        for (std::size_t l = 0; l < L; ++l) positives[l] += data.y_at(r, l);
    for (std::size_t l = 0; l < L; ++l)
        if (positives[l] == data.rows)
            cv.report.warnings.push_back("label '" + data.label_names[l].key() + "' is positive in every row (degenerate)");

    for (std::size_t fold = 0; fold < folds.k; ++fold) {
        const auto test = folds.rows_in(fold);
        const auto train = folds.rows_not_in(fold);
        FoldResult fr;
        fr.fold = fold;
        fr.train_rows = train.size();
        fr.test_rows = test.size();
        fr.tp.assign(L, 0);
        fr.fp.assign(L, 0);
        fr.fn.assign(L, 0);
        if (test.empty() || train.empty()) {
            cv.report.warnings.push_back("fold " + std::to_string(fold) + " has an empty train or test split");
            cv.folds.push_back(std::move(fr));
            continue;
        }

        const SampleMatrix train_data = data.select(train);
        for (std::size_t l = 0; l < L; ++l) {
            bool any = false;
            for (std::size_t r = 0; r < train_data.rows && !any; ++r) any = train_data.y_at(r, l) != 0;
            if (!any)
                cv.report.warnings.push_back("fold " + std::to_string(fold) + ": label '" + data.label_names[l].key() +
                                             "' absent from training split; predicting constant negative");
        }

        Hyperparams fold_hp = hp;
        fold_hp.seed = mix64(hp.seed ^ (0x666f6c64ULL + fold));
        const auto model = fit(train_data, fold_hp, workers);

        if (groups != nullptr) {
            std::vector<std::uint64_t> seen;
            for (auto r : train) seen.push_back((*groups)[r]);
            std::sort(seen.begin(), seen.end());
            for (auto r : test) fr.leaked_rows += std::binary_search(seen.begin(), seen.end(), (*groups)[r]);
        }

        for (auto r : test) {
            const auto pred = predict(model, data.row(r));
            for (std::size_t l = 0; l < L; ++l) {
                const bool truth = data.y_at(r, l) != 0, guess = pred.labels[l] != 0;
                fr.tp[l] += truth && guess;
                fr.fp[l] += !truth && guess;
                fr.fn[l] += truth && !guess;
            }
        }
        for (std::size_t l = 0; l < L; ++l) {
            tp[l] += fr.tp[l];
            fp[l] += fr.fp[l];
            fn[l] += fr.fn[l];
        }
        cv.folds.push_back(std::move(fr));
    }

    std::vector<LabelMetrics> per_label;
    for (std::size_t l = 0; l < L; ++l) per_label.push_back(LabelMetrics::from_counts(data.label_names[l], tp[l], fp[l], fn[l]));
    auto warnings = std::move(cv.report.warnings);
    cv.report = aggregate(std::move(per_label));
    warnings.insert(warnings.end(), cv.report.warnings.begin(), cv.report.warnings.end());
    cv.report.warnings = std::move(warnings);
    return cv;
}

/// `feature,precision,recall,f1,support`, 2 decimals, plus micro and weighted rows.
inline std::string eval_report_csv(const EvalReport& r) {
    std::string out = "feature,precision,recall,f1,support\n";
    const auto row = [&out](const std::string& name, const Prf& p, std::uint64_t support) {
        csv::write_row(out, {name, csv::format_fixed(p.precision, 2), csv::format_fixed(p.recall, 2),
                             csv::format_fixed(p.f1, 2), std::to_string(support)});
    };
    std::vector<FeatureId> ids;
    for (const auto& m : r.per_label) ids.push_back(m.label);
    const auto names = table_names(ids);
    for (std::size_t i = 0; i < r.per_label.size(); ++i) row(names[i], r.per_label[i].scores, r.per_label[i].support());
    row("micro avg", r.micro, r.total_support);
    row("weighted avg", r.weighted, r.total_support);
    return out;
}

/// Full-precision twin of the CSV with per-fold counts.
inline nlohmann::ordered_json eval_report_json(const CrossValidation& cv) {
    const auto prf_json = [](const Prf& p) {
        nlohmann::ordered_json j;
        j["precision"] = p.precision;
        j["recall"] = p.recall;
        j["f1"] = p.f1;
        return j;
    };
    nlohmann::ordered_json j;
    auto& labels = j["labels"] = nlohmann::ordered_json::array();
    std::vector<FeatureId> ids;
    for (const auto& m : cv.report.per_label) ids.push_back(m.label);
    const auto names = table_names(ids);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto& m = cv.report.per_label[i];
        nlohmann::ordered_json e;
        e["feature"] = names[i];
        e["key"] = m.label.key();
        e["tp"] = m.tp;
        e["fp"] = m.fp;
        e["fn"] = m.fn;
        e.update(prf_json(m.scores));
        e["support"] = m.support();
        labels.push_back(std::move(e));
    }
    j["micro"] = prf_json(cv.report.micro);
    j["weighted"] = prf_json(cv.report.weighted);
    j["total_support"] = cv.report.total_support;
    auto& folds = j["folds"] = nlohmann::ordered_json::array();
    for (const auto& f : cv.folds) {
        nlohmann::ordered_json e;
        e["fold"] = f.fold;
        e["train_rows"] = f.train_rows;
        e["test_rows"] = f.test_rows;
        e["leaked_rows"] = f.leaked_rows;
        e["tp"] = f.tp;
        e["fp"] = f.fp;
        e["fn"] = f.fn;
        folds.push_back(std::move(e));
    }
    j["warnings"] = cv.report.warnings;
    return j;
}

} // namespace signaffect
