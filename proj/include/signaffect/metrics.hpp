#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "signaffect/error.hpp"
#include "signaffect/feature_id.hpp"

namespace signaffect {

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    friend bool operator==(const Prf&, const Prf&) = default;
};

/// Harmonic mean of precision and recall; 0 when both are 0.
inline double f1_score(double precision, double recall) {
    const double sum = precision + recall;
    return sum == 0.0 ? 0.0 : 2.0 * precision * recall / sum;
}

/// Precision, recall and F1 from counts, with 0 on every zero division.
inline Prf prf(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
    Prf m;
    if (tp + fp > 0) m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (tp + fn > 0) m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    m.f1 = f1_score(m.precision, m.recall);
    return m;
}

struct LabelMetrics {
    FeatureId label;
    std::uint64_t tp = 0, fp = 0, fn = 0;
    Prf scores;

    std::uint64_t support() const noexcept { return tp + fn; }

    static LabelMetrics from_counts(FeatureId label, std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
        return {std::move(label), tp, fp, fn, prf(tp, fp, fn)};
    }
};

struct EvalReport {
    std::vector<LabelMetrics> per_label;
    Prf micro;
    Prf weighted;
    std::uint64_t total_support = 0;
    std::vector<std::string> warnings;
};

/// Micro scores from pooled counts; weighted scores as support-weighted means
/// of the per-label scores.
inline EvalReport aggregate(std::vector<LabelMetrics> per_label) {
    if (per_label.empty()) throw DataError("cannot aggregate zero labels");
    EvalReport report;
    std::uint64_t tp = 0, fp = 0, fn = 0;
    double wp = 0.0, wr = 0.0, wf = 0.0;
    for (const auto& m : per_label) {
        tp += m.tp;
        fp += m.fp;
        fn += m.fn;
        const auto s = static_cast<double>(m.support());
        wp += s * m.scores.precision;
        wr += s * m.scores.recall;
        wf += s * m.scores.f1;
    }
    report.total_support = tp + fn;
    report.micro = prf(tp, fp, fn);
    if (report.total_support == 0) {
        report.micro = Prf{};
        report.warnings.push_back("total support is zero; aggregate scores are reported as 0");
    } else {
        const auto total = static_cast<double>(report.total_support);
        report.weighted = {wp / total, wr / total, wf / total};
    }
    report.per_label = std::move(per_label);
    return report;
}

} // namespace signaffect
