#pragma once

#include <exception>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "signaffect/pipeline.hpp"

namespace signaffect {

enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_data = 2 };

/// Command-line front end. Returns the process exit code: 0 on success,
/// 1 for usage errors, 2 for data errors.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sign-language facial feature and emotion analytics"};
    app.name("signaffect");
    app.fallthrough();
    app.require_subcommand(1, 1);
    app.set_config("--config", "", "Flat key = value config file; command-line flags take precedence");
    app.set_version_flag("--version", std::string(tool_version));

    PipelineConfig cfg;
    std::string grouping = "frame", max_depth = "none", features_rule = "sqrt";
    bool no_bootstrap = false;
    std::vector<std::string> lexica;
    std::string spans, au_map, fer, out_dir = cfg.out.string();

    app.add_option("--spans", spans, "Annotation spans (span_csv or span_jsonl)");
    app.add_option("--format", cfg.span_format, "Span file format: auto, span_csv or span_jsonl")->capture_default_str();
    app.add_option("--au-map", au_map, "AU mapping CSV (tier,value,au_id,au_label); built-in table if omitted");
    app.add_option("--lexicon", lexica, "Lexicon file; repeat for several lexica (name = file stem)");
    app.add_option("--fer", fer, "Facial-expression sidecar (JSON lines)");
    app.add_option("--fer-threshold", cfg.fer_threshold, "Score at which a FER class becomes a feature")->capture_default_str();
    app.add_option("--out", out_dir, "Output directory")->capture_default_str();
    app.add_option("--seed", cfg.seed, "Seed for folds and forests")->capture_default_str();
    app.add_option("--min-frames", cfg.min_frames, "Minimum frames for an emotion label to be kept")->capture_default_str();
    app.add_option("--min-support", cfg.min_support, "Minimum frames for a feature to be ranked")->capture_default_str();
    app.add_option("--group-folds-by", grouping, "Cross-validation grouping: frame or utterance")
        ->check(CLI::IsMember({"frame", "utterance"}))
        ->capture_default_str();
    app.add_option("--folds", cfg.folds, "Number of cross-validation folds")->capture_default_str();
    app.add_flag("--include-negatives", cfg.include_negatives, "Keep frames without emotion labels as all-negative rows");
    app.add_option("--label", cfg.stats_labels, "Label to rank features for (stats); repeatable");
    app.add_option("--top-k", cfg.top_k, "Rows in ranking and importance tables")->capture_default_str();
    app.add_flag("--full-precision", cfg.full_precision, "Print probabilities and importances unrounded");
    app.add_option("--trees", cfg.hp.n_trees, "Trees per label")->capture_default_str();
    app.add_option("--max-depth", max_depth, "Maximum tree depth or 'none'")->capture_default_str();
    app.add_option("--min-samples-split", cfg.hp.min_samples_split, "Minimum node size to split")->capture_default_str();
    app.add_option("--features-per-split", features_rule, "sqrt, all, or a count")->capture_default_str();
    app.add_flag("--no-bootstrap", no_bootstrap, "Grow every tree on all rows");
    app.add_flag("--balance-classes", cfg.hp.balance_classes, "Class-balanced resampling per tree");
    app.add_option("--vote-threshold", cfg.hp.vote_threshold, "Tree-vote fraction that asserts a label")->capture_default_str();
    app.add_option("--jobs", cfg.jobs, "Worker threads (does not change results)")->capture_default_str();

    Command command = Command::all;
    for (const char* name : {"ingest", "tag", "stats", "train", "eval", "report", "all"}) {
        auto* sub = app.add_subcommand(name);
        sub->callback([&command, name] { command = parse_command(name); });
    }
    app.get_subcommand("ingest")->description("Expand spans to frames and map AUs (frames.csv)");
    app.get_subcommand("tag")->description("Tag translations with emotion labels (label_counts.csv)");
    app.get_subcommand("stats")->description("Rank features by P(label | feature) (ranking_*.csv)");
    app.get_subcommand("train")->description("Train the multi-label forest (model.saf, importance.csv)");
    app.get_subcommand("eval")->description("Cross-validate the forest (eval.csv, eval.json)");
    app.get_subcommand("report")->description("Frame-count histograms and corpus bookkeeping");
    app.get_subcommand("all")->description("Run every command in order");

    std::vector<std::string> argv(args.rbegin(), args.rend());
    if (!argv.empty()) argv.pop_back(); // program name
    try {
        app.parse(argv);
    } catch (const CLI::Success& e) {
        out << (e.get_name() == "CallForVersion" ? std::string(tool_version) + "\n" : app.help());
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "signaffect: " << e.what() << "\n" << "Run with --help for usage.\n";
        return exit_usage;
    }

    try {
        cfg.spans = spans;
        cfg.au_map = au_map;
        cfg.fer = fer;
        cfg.out = out_dir;
        for (const auto& l : lexica) cfg.lexica.emplace_back(l);
        cfg.grouping = grouping == "utterance" ? FoldGrouping::utterance : FoldGrouping::frame;
        cfg.hp.bootstrap = !no_bootstrap;
        cfg.hp.seed = cfg.seed;
        if (max_depth == "none")
            cfg.hp.max_depth.reset();
        else
            cfg.hp.max_depth = csv::parse_uint(max_depth, 0, "--max-depth");
        detail::parse_feature_rule(features_rule, cfg.hp);

        const auto result = run(cfg, command);
        for (const auto& w : result.diagnostics.warnings) err << "warning: " << w << "\n";
        for (const auto& [name, bytes] : result.artifacts) out << (cfg.out / name).string() << "\n";
        return exit_ok;
    } catch (const UsageError& e) {
        err << "signaffect: " << e.what() << "\n";
        return exit_usage;
    } catch (const DataError& e) {
        err << "signaffect: " << e.what() << "\n";
        return exit_data;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "signaffect: " << e.what() << "\n";
        return exit_data;
    }
}

} // namespace signaffect
