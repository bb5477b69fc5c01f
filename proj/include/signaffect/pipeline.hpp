#pragma once

// Batch orchestration: ingest -> tag -> stats -> train -> eval -> report.
// Each command rebuilds the in-memory corpus from the inputs, renders its
// artifacts in memory, and commits them to the output directory only after
// everything succeeded. A manifest records input digests, the config hash and
// one digest per artifact.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "signaffect/au_mapping.hpp"
#include "signaffect/cooccurrence.hpp"
#include "signaffect/corpus.hpp"
#include "signaffect/crossval.hpp"
#include "signaffect/dataset.hpp"
#include "signaffect/digest.hpp"
#include "signaffect/error.hpp"
#include "signaffect/fer_sidecar.hpp"
#include "signaffect/forest.hpp"
#include "signaffect/lexicon.hpp"
#include "signaffect/model_io.hpp"

namespace signaffect {

inline constexpr std::string_view tool_version = "0.1.0";

enum class Command { ingest, tag, stats, train, eval, report, all };

inline Command parse_command(std::string_view s) {
    if (s == "ingest") return Command::ingest;
    if (s == "tag") return Command::tag;
    if (s == "stats") return Command::stats;
    if (s == "train") return Command::train;
    if (s == "eval") return Command::eval;
    if (s == "report") return Command::report;
    if (s == "all") return Command::all;
    throw UsageError("unknown command '" + std::string(s) + "'");
}

struct PipelineConfig {
    std::filesystem::path spans;
    std::string span_format = "auto"; ///< auto picks span_jsonl for *.jsonl
    std::filesystem::path au_map;     ///< empty: built-in table
    std::vector<std::filesystem::path> lexica;
    std::filesystem::path fer;        ///< optional sidecar
    std::filesystem::path out = "out";

    std::int64_t min_frames = 10;
    std::uint64_t min_support = 10;
    double fer_threshold = 0.5;
    bool include_negatives = false;
    FoldGrouping grouping = FoldGrouping::frame;
    std::size_t folds = 10;
    std::uint64_t seed = 0;
    Hyperparams hp;

    std::vector<std::string> stats_labels; ///< empty: every retained label
    std::size_t top_k = 10;
    bool full_precision = false;
    unsigned jobs = 1; ///< worker threads; never affects outputs

    void validate() const {
        if (spans.empty()) throw UsageError("no spans file given (--spans)");
        if (lexica.empty()) throw UsageError("no lexicon given (--lexicon)");
        if (min_frames < 1) throw UsageError("--min-frames must be at least 1");
        if (min_support < 1) throw UsageError("--min-support must be at least 1");
        if (!(fer_threshold > 0.0 && fer_threshold < 1.0)) throw UsageError("--fer-threshold must lie in (0, 1)");
        if (folds < 2) throw UsageError("--folds must be at least 2");
        if (top_k < 1) throw UsageError("--top-k must be at least 1");
        hp.validate();
        for (const auto* p : {&spans, &au_map, &fer})
            if (!p->empty() && !std::filesystem::exists(*p)) throw DataError("input not found: " + p->string());
        for (const auto& p : lexica)
            if (!std::filesystem::exists(p)) throw DataError("input not found: " + p.string());
    }

    /// Every setting that can change an artifact. Paths, `out` and `jobs` are
    /// excluded; inputs are identified by digest instead.
    nlohmann::ordered_json canonical() const {
        nlohmann::ordered_json j;
        j["span_format"] = span_format;
        j["min_frames"] = min_frames;
        j["min_support"] = min_support;
        j["fer_threshold"] = fer_threshold;
        j["include_negatives"] = include_negatives;
        j["group_folds_by"] = grouping == FoldGrouping::frame ? "frame" : "utterance";
        j["folds"] = folds;
        j["seed"] = seed;
        j["n_trees"] = hp.n_trees;
        j["max_depth"] = hp.max_depth ? nlohmann::ordered_json(*hp.max_depth) : nlohmann::ordered_json(nullptr);
        j["min_samples_split"] = hp.min_samples_split;
        j["features_per_split"] = detail::feature_rule_name(hp);
        j["bootstrap"] = hp.bootstrap;
        j["balance_classes"] = hp.balance_classes;
        j["vote_threshold"] = hp.vote_threshold;
        j["stats_labels"] = stats_labels;
        j["top_k"] = top_k;
        j["full_precision"] = full_precision;
        return j;
    }
};

/// Everything derived from the inputs before any analysis.
struct Corpus {
    std::vector<FrameRecord> frames;
    ExpansionStats expansion;
    CountHistogram annotation_histogram; ///< spans only, before AU/FER/emotion enrichment
    UnmappedTally unmapped;
    std::optional<FerIngestStats> fer;
    std::vector<Lexicon> lexica;
    std::map<FeatureId, std::uint64_t> label_counts; ///< every lexicon category, zero counts included
    std::set<FeatureId> retained;
    std::vector<std::size_t> analysis_rows; ///< frames used by stats, train and eval
};

namespace detail {

inline SpanFormat resolve_span_format(const PipelineConfig& cfg) {
    if (cfg.span_format != "auto") return parse_span_format(cfg.span_format);
    return cfg.spans.extension() == ".jsonl" ? SpanFormat::span_jsonl : SpanFormat::span_csv;
}

inline std::string slug(const FeatureId& label) {
    std::string out;
    for (char c : label.value() + "_" + label.type()) {
        const bool keep = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
        if (keep)
            out.push_back(c);
        else if (!out.empty() && out.back() != '-')
            out.push_back('-');
    }
    return out;
}

} // namespace detail

inline Corpus build_corpus(const PipelineConfig& cfg) {
    Corpus c;
    const auto spans = parse_annotations(read_file(cfg.spans), detail::resolve_span_format(cfg));
    const auto table = cfg.au_map.empty() ? AuMappingTable::defaults() : AuMappingTable::load_csv(read_file(cfg.au_map));

    TierScheme scheme = TierScheme::defaults();
    for (const auto& tier : table.tiers()) scheme.add_facial_tier(tier);
    c.frames = expand_to_frames(spans, scheme, &c.expansion);
    c.annotation_histogram = feature_counts(c.frames);

    for (auto& rec : c.frames) rec = map_to_aus(std::move(rec), table, &c.unmapped);

    if (!cfg.fer.empty())
        c.fer = ingest_fer_sidecar(c.frames, parse_fer_sidecar(read_file(cfg.fer)), cfg.fer_threshold);

    std::set<std::string> names;
    for (const auto& path : cfg.lexica) {
        auto lex = load_lexicon(read_file(path), path.stem().string());
        if (!names.insert(lex.name()).second) throw DataError("two lexica share the name '" + lex.name() + "'");
        for (const auto& cat : lex.categories()) c.label_counts[emotion_label(lex.name(), cat)] = 0;
        c.lexica.push_back(std::move(lex));
    }

    std::map<std::string, std::set<FeatureId>> tag_cache;
    for (auto& rec : c.frames) {
        auto [it, fresh] = tag_cache.try_emplace(rec.translation);
        if (fresh) it->second = tag_text(rec.translation, c.lexica);
        for (const auto& label : it->second) {
            insert_feature(rec.features, label);
            ++c.label_counts[label];
        }
    }
    c.retained = apply_threshold(c.label_counts, cfg.min_frames);

    for (std::size_t i = 0; i < c.frames.size(); ++i) {
        const auto& fs = c.frames[i].features;
        const bool labeled = std::any_of(fs.begin(), fs.end(), [&](const FeatureId& f) { return c.retained.contains(f); });
        if (labeled || cfg.include_negatives) c.analysis_rows.push_back(i);
    }
    return c;
}

using Artifacts = std::map<std::string, std::string>; ///< file name -> bytes

namespace detail {

inline std::vector<FrameRecord> analysis_frames(const Corpus& c) {
    std::vector<FrameRecord> out;
    out.reserve(c.analysis_rows.size());
    for (auto i : c.analysis_rows) out.push_back(c.frames[i]);
    return out;
}

inline Dataset classifier_dataset(const Corpus& c) {
    if (c.retained.empty()) throw DataError("no emotion label reaches the minimum frame count; nothing to classify");
    auto ds = make_dataset(c.frames, c.analysis_rows, {Category::au, Category::fer}, c.retained);
    if (ds.matrix.rows == 0) throw DataError("no frames carry a retained emotion label");
    if (ds.matrix.features() == 0) throw DataError("no action-unit features in the analysis frames");
    return ds;
}

inline void ingest_artifacts(const Corpus& c, Artifacts& out) { out["frames.csv"] = frame_table_csv(c.frames); }

inline void tag_artifacts(const Corpus& c, Artifacts& out) {
    std::string csv = "lexicon,category,frames,retained\n";
    for (const auto& [label, n] : c.label_counts)
        csv::write_row(csv, {label.type(), label.value(), std::to_string(n), c.retained.contains(label) ? "1" : "0"});
    out["label_counts.csv"] = std::move(csv);
}

inline void stats_artifacts(const Corpus& c, const PipelineConfig& cfg, Artifacts& out, Diagnostics& diag) {
    std::vector<FeatureId> targets;
    if (cfg.stats_labels.empty()) {
        targets.assign(c.retained.begin(), c.retained.end());
    } else {
        for (const auto& wanted : cfg.stats_labels) {
            const auto w = canonicalize(wanted);
            bool found = false;
            for (const auto& [label, n] : c.label_counts) {
                if (w == label.value() || w == label.display() || w == label.type() + ":" + label.value()) {
                    targets.push_back(label);
                    found = true;
                }
            }
            if (!found) throw DataError("unknown label '" + wanted + "'");
        }
    }
    const auto frames = analysis_frames(c);
    const auto counts = accumulate_sharded(frames, std::max(1u, cfg.jobs), cfg.jobs);
    const FeatureFilter candidates = [](const FeatureId& f) {
        return f.category() == Category::facial || f.category() == Category::linguistic || f.category() == Category::fer;
    };
    for (const auto& label : targets) {
        auto ranked = rank_features_for_label(counts, label, cfg.top_k, cfg.min_support, &diag, candidates);
        out["ranking_" + detail::slug(label) + ".csv"] = ranking_csv(ranked, cfg.full_precision);
    }
}

inline void train_artifacts(const Corpus& c, const PipelineConfig& cfg, Artifacts& out, Diagnostics& diag) {
    const auto ds = classifier_dataset(c);
    const auto model = fit(ds.matrix, cfg.hp, cfg.jobs, &diag);
    out["model.saf"] = save_model(model);
    out["importance.csv"] = importance_csv(feature_importance_report(model, cfg.top_k), cfg.full_precision);
}

inline void eval_artifacts(const Corpus& c, const PipelineConfig& cfg, Artifacts& out) {
    const auto ds = classifier_dataset(c);
    const auto folds = kfold_split(ds.matrix.rows, cfg.folds, cfg.seed,
                                   cfg.grouping == FoldGrouping::utterance ? &ds.utterance : nullptr);
    const auto cv = evaluate_cv(ds.matrix, cfg.hp, folds, cfg.jobs, &ds.utterance);
    out["eval.csv"] = eval_report_csv(cv.report);
    auto j = eval_report_json(cv);
    std::size_t leaked = 0, tested = 0;
    for (const auto& f : cv.folds) {
        leaked += f.leaked_rows;
        tested += f.test_rows;
    }
    j["diagnostics"]["rows"] = ds.matrix.rows;
    j["diagnostics"]["features"] = ds.matrix.features();
    j["diagnostics"]["labels"] = ds.matrix.labels();
    j["diagnostics"]["group_folds_by"] = cfg.grouping == FoldGrouping::frame ? "frame" : "utterance";
    j["diagnostics"]["test_rows_sharing_utterance_with_training"] = leaked;
    j["diagnostics"]["test_rows"] = tested;
    out["eval.json"] = j.dump(2) + "\n";
}

inline void report_artifacts(const Corpus& c, Artifacts& out) {
    out["hist_facial.csv"] = histogram_csv(feature_counts(c.frames, Category::facial));
    out["hist_au.csv"] = histogram_csv(feature_counts(c.frames, Category::au));
    out["hist_emotion.csv"] = histogram_csv(feature_counts(c.frames, Category::emotion));

    const auto all = feature_counts(c.frames);
    nlohmann::ordered_json s;
    s["frames_raw"] = c.frames.size();
    s["frames_analysis"] = c.analysis_rows.size();
    s["span_frames"] = c.expansion.span_frames;
    s["annotation_feature_instances"] = c.annotation_histogram.total_instances;
    s["annotation_features_per_frame"] = c.annotation_histogram.mean_per_frame();
    s["feature_instances"] = all.total_instances;
    s["features_per_frame"] = all.mean_per_frame();
    s["lexicon_categories"] = c.label_counts.size();
    s["label_space_size"] = c.retained.size();
    auto& retained = s["labels_retained"] = nlohmann::ordered_json::array();
    for (const auto& l : c.retained) retained.push_back(l.display());
    auto& unmapped = s["unmapped_facial_features"] = nlohmann::ordered_json::object();
    for (const auto& [f, n] : c.unmapped) unmapped[f.display()] = n;
    if (c.fer) {
        s["fer"]["records"] = c.fer->records;
        s["fer"]["matched_frames"] = c.fer->matched_frames;
        s["fer"]["unmatched_records"] = c.fer->unmatched_records;
        s["fer"]["features_added"] = c.fer->features_added;
    }
    out["summary.json"] = s.dump(2) + "\n";
}

inline void write_atomically(const std::filesystem::path& dir, const Artifacts& files) {
    std::vector<std::pair<std::filesystem::path, std::filesystem::path>> staged;
    for (const auto& [name, bytes] : files) {
        const auto tmp = dir / ("." + name + ".tmp");
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        f.close();
        if (!f) throw DataError("failed writing '" + tmp.string() + "'");
        staged.emplace_back(tmp, dir / name);
    }
    for (const auto& [tmp, final_path] : staged) std::filesystem::rename(tmp, final_path);
}

inline nlohmann::json input_digests(const PipelineConfig& cfg) {
    nlohmann::json in;
    const auto entry = [](const std::filesystem::path& p) {
        return nlohmann::json{{"file", p.filename().string()}, {"sha256", sha256_hex(read_file(p))}};
    };
    in["spans"] = entry(cfg.spans);
    in["au_map"] = cfg.au_map.empty() ? nlohmann::json("builtin") : entry(cfg.au_map);
    auto& lex = in["lexica"] = nlohmann::json::array();
    for (const auto& p : cfg.lexica) lex.push_back(entry(p));
    if (!cfg.fer.empty()) in["fer"] = entry(cfg.fer);
    return in;
}

} // namespace detail

struct RunResult {
    Artifacts artifacts; ///< everything written, manifest included
    Diagnostics diagnostics;
};

/// Runs one command and commits its artifacts plus an updated manifest.
inline RunResult run(const PipelineConfig& cfg, Command command) {
    cfg.validate();
    RunResult result;
    const Corpus corpus = build_corpus(cfg);
    auto& files = result.artifacts;
    auto& diag = result.diagnostics;
    const auto wants = [command](Command c) { return command == Command::all || command == c; };

    if (wants(Command::ingest)) detail::ingest_artifacts(corpus, files);
    if (wants(Command::tag)) detail::tag_artifacts(corpus, files);
    if (wants(Command::stats)) detail::stats_artifacts(corpus, cfg, files, diag);
    if (wants(Command::train)) detail::train_artifacts(corpus, cfg, files, diag);
    if (wants(Command::eval)) detail::eval_artifacts(corpus, cfg, files);
    if (wants(Command::report)) detail::report_artifacts(corpus, files);

    const auto config = cfg.canonical();
    const auto inputs = detail::input_digests(cfg);
    const std::string config_hash = sha256_hex(config.dump());

    std::filesystem::create_directories(cfg.out);
    const auto manifest_path = cfg.out / "manifest.json";
    nlohmann::json artifacts = nlohmann::json::object();
    if (std::filesystem::exists(manifest_path)) {
        try {
            const auto old = nlohmann::json::parse(read_file(manifest_path));
            if (old.value("config_sha256", "") == config_hash && old.at("inputs") == inputs) artifacts = old.at("artifacts");
        } catch (const nlohmann::json::exception&) {
            diag.warn("existing manifest is unreadable and will be replaced");
        }
    }
    for (const auto& [name, bytes] : files) artifacts[name] = sha256_hex(bytes);

    nlohmann::ordered_json manifest;
    manifest["tool"] = "signaffect";
    manifest["version"] = tool_version;
    manifest["config_sha256"] = config_hash;
    manifest["config"] = config;
    manifest["inputs"] = inputs;
    manifest["artifacts"] = artifacts;
    detail::write_atomically(cfg.out, files);
    files["manifest.json"] = manifest.dump(2) + "\n";
    detail::write_atomically(cfg.out, {{"manifest.json", files["manifest.json"]}});
    return result;
}

} // namespace signaffect
