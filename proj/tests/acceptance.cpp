// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <unistd.h>

#include "signaffect/pipeline.hpp"

using namespace signaffect;
namespace fs = std::filesystem;

namespace {

// Tolerances and sizes.
constexpr std::size_t planted_frames = 5000;
constexpr std::size_t planted_aus = 20;
constexpr std::size_t planted_labels = 5;
constexpr double planted_flip = 0.1;
constexpr std::uint64_t planted_data_seed = 1;
constexpr double planted_min_f1 = 0.90;
constexpr std::size_t planted_top = 3;
constexpr double planted_max_seconds = 60.0;
constexpr double cooc_tolerance = 1e-12;
constexpr double metric_tolerance = 0.005;

const fs::path data_dir = SIGNAFFECT_DATA_DIR;

struct Outcome {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
}

std::string fixed(double v, int decimals = 4) { return csv::format_fixed(v, decimals); }

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("signaffect-acceptance-" + std::to_string(::getpid()) + "-" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = read_file(e.path());
    return out;
}

unsigned worker_count() { return std::max(1u, std::min(8u, std::thread::hardware_concurrency())); }

// ---------------------------------------------------------------------------

Outcome planted_signal() {
    SplitMix64 rng(planted_data_seed);
    SampleMatrix m;
    m.rows = planted_frames;
    for (std::size_t c = 0; c < planted_aus; ++c) m.feature_names.emplace_back(Category::au, "au" + std::to_string(100 + c), "planted");
    for (std::size_t l = 0; l < planted_labels; ++l) m.label_names.push_back(emotion_label("synthetic", "label" + std::to_string(l)));
    m.x.resize(planted_frames * planted_aus);
    m.y.resize(planted_frames * planted_labels);
    for (std::size_t r = 0; r < planted_frames; ++r) {
        for (std::size_t c = 0; c < planted_aus; ++c) m.x[r * planted_aus + c] = static_cast<std::uint8_t>(rng.bounded(2));
        for (std::size_t l = 0; l < planted_labels; ++l)
            m.y[r * planted_labels + l] = m.x[r * planted_aus + l] ^ static_cast<std::uint8_t>(rng.uniform() < planted_flip);
    }

    const Hyperparams hp; // defaults
    const auto start = std::chrono::steady_clock::now();
    const auto cv = evaluate_cv(m, hp, kfold_split(m.rows, 10, hp.seed), worker_count());
    const auto model = fit(m, hp, worker_count());
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    Outcome o;
    std::ostringstream d;
    for (std::size_t l = 0; l < planted_labels; ++l) {
        // Reference: predicting the planted AU itself, the noise-optimal rule.
        std::uint64_t tp = 0, fp = 0, fn = 0;
        for (std::size_t r = 0; r < m.rows; ++r) {
            const bool truth = m.y_at(r, l), guess = m.x_at(r, l);
            tp += truth && guess;
            fp += !truth && guess;
            fn += truth && !guess;
        }
        const double f1 = cv.report.per_label[l].scores.f1;
        const auto top = feature_importance_report(model, planted_top, l);
        const bool in_top = std::any_of(top.begin(), top.end(), [&](const auto& e) { return e.first == m.feature_names[l]; });
        o.pass = o.pass && f1 >= planted_min_f1 && in_top;
        d << "label" << l << " f1=" << fixed(f1) << " (planted-AU rule " << fixed(prf(tp, fp, fn).f1) << ")"
          << (in_top ? " top3" : " NOT-top3") << "; ";
    }
    o.pass = o.pass && seconds <= planted_max_seconds;
    d << "cv+fit " << fixed(seconds, 1) << "s on " << worker_count() << " threads; need f1>=" << fixed(planted_min_f1, 2);
    o.detail = d.str();
    return o;
}

// ---------------------------------------------------------------------------

Outcome cooccurrence_oracle() {
    SplitMix64 rng(1001);
    std::size_t pairs = 0, rankings = 0;
    double worst = 0.0;
    for (int corpus = 0; corpus < 100; ++corpus) {
        const std::size_t n = rng.bounded(201), d = 1 + rng.bounded(15);
        std::vector<FeatureId> ids;
        for (std::size_t k = 0; k < d; ++k) ids.emplace_back(k % 3 ? Category::facial : Category::emotion, "t" + std::to_string(k % 4), "v" + std::to_string(k));
        std::vector<double> rate(d);
        for (auto& p : rate) p = rng.uniform();
        std::vector<FrameRecord> frames;
        for (std::size_t i = 0; i < n; ++i) {
            FrameRecord f{"v", i, {}, {}, {}};
            for (std::size_t k = 0; k < d; ++k)
                if (rng.uniform() < rate[k]) insert_feature(f.features, ids[k]);
            frames.push_back(std::move(f));
        }
        const auto counts = accumulate(frames);

        // Frame-scan oracle.
        const auto has = [&](const FrameRecord& f, const FeatureId& id) {
            return std::find(f.features.begin(), f.features.end(), id) != f.features.end();
        };
        const auto scan = [&](const FeatureId& a, const FeatureId& b) {
            std::uint64_t c = 0;
            for (const auto& f : frames) c += has(f, a) && has(f, b);
            return c;
        };
        for (const auto& a : ids) {
            const auto ma = scan(a, a);
            for (const auto& b : ids) {
                if (ma == 0) {
                    bool threw = false;
                    try {
                        cond_prob(counts, a, b);
                    } catch (const UndefinedSupport&) {
                        threw = true;
                    }
                    if (!threw) return {false, "cond_prob accepted a zero-support conditioning feature"};
                    continue;
                }
                const double expect = static_cast<double>(scan(a, b)) / static_cast<double>(ma);
                const double diff = std::abs(cond_prob(counts, a, b) - expect);
                worst = std::max(worst, diff);
                if (diff > cooc_tolerance) return {false, "cond_prob mismatch for " + a.key() + " -> " + b.key()};
                ++pairs;
            }
        }

        const std::uint64_t min_support = 1 + rng.bounded(5);
        const std::size_t k = 1 + rng.bounded(d + 2);
        for (const auto& label : ids) {
            struct Row {
                FeatureId f;
                double p;
                std::uint64_t s;
            };
            std::vector<Row> expect;
            if (scan(label, label) > 0)
                for (const auto& f : ids) {
                    const auto s = scan(f, f);
                    if (f == label || s < min_support) continue;
                    expect.push_back({f, static_cast<double>(scan(f, label)) / static_cast<double>(s), s});
                }
            std::sort(expect.begin(), expect.end(), [](const Row& a, const Row& b) {
                return std::tie(b.p, b.s, a.f) < std::tie(a.p, a.s, b.f);
            });
            if (expect.size() > k) expect.resize(k);
            const auto got = rank_features_for_label(counts, label, k, min_support);
            if (got.size() != expect.size()) return {false, "ranking length mismatch for " + label.key()};
            for (std::size_t i = 0; i < got.size(); ++i) {
                if (got[i].feature != expect[i].f || got[i].support != expect[i].s ||
                    std::abs(got[i].probability - expect[i].p) > cooc_tolerance)
                    return {false, "ranking mismatch for " + label.key() + " at position " + std::to_string(i)};
            }
            ++rankings;
        }
    }
    return {true, "100 corpora, " + std::to_string(pairs) + " pairs and " + std::to_string(rankings) +
                      " rankings match the frame scan; max |diff| = " + csv::format_exact(worst)};
}

// ---------------------------------------------------------------------------

Outcome metric_oracle() {
    std::vector<std::string> bad;
    const auto near = [&](const std::string& what, double got, double want, double tol) {
        if (std::abs(got - want) > tol) bad.push_back(what + " got " + csv::format_exact(got) + " want " + csv::format_exact(want));
    };
    near("F1(0.79, 0.55)", f1_score(0.79, 0.55), 0.65, metric_tolerance);
    const auto horror = prf(0, 0, 73);
    near("horror P", horror.precision, 0.0, 0.0);
    near("horror R", horror.recall, 0.0, 0.0);
    near("horror F1", horror.f1, 0.0, 0.0);
    const auto perfect = prf(89, 0, 0);
    near("perfect F1", perfect.f1, 1.0, 0.0);
    // 3 tp, 1 fp, 2 fn: P = 3/4, R = 3/5, F1 = 2/3.
    const auto hand = prf(3, 1, 2);
    near("P(3,1,2)", hand.precision, 0.75, 1e-15);
    near("R(3,1,2)", hand.recall, 0.6, 1e-15);
    near("F1(3,1,2)", hand.f1, 2.0 / 3.0, 1e-15);
    const auto w = aggregate({LabelMetrics::from_counts(emotion_label("a", "x"), 10, 0, 0),
                              LabelMetrics::from_counts(emotion_label("a", "y"), 0, 0, 30)});
    near("weighted F1", w.weighted.f1, 0.25, 1e-15);
    // Pooled: tp 10, fp 0, fn 30 -> P 1, R 0.25, F1 0.4.
    near("micro F1", w.micro.f1, 0.4, 1e-15);
    const auto z = aggregate({LabelMetrics::from_counts(emotion_label("a", "x"), 0, 4, 0)});
    near("zero-support micro F1", z.micro.f1, 0.0, 0.0);
    if (z.warnings.empty()) bad.push_back("zero-support aggregate gave no warning");
    const auto rendered = csv::format_fixed(f1_score(0.79, 0.55), 2);
    if (rendered != "0.65") bad.push_back("rendered F1 " + rendered);
    if (!bad.empty()) return {false, bad.front()};
    return {true, "F1(0.79, 0.55) = " + fixed(f1_score(0.79, 0.55)) + " renders 0.65; (0,0,73) -> 0/0/0; weighted 0.25"};
}

// ---------------------------------------------------------------------------

using i128 = __int128;

// Best split by exhaustive search over columns and both child assignments,
// scored as weighted impurity decrease in exact integers (2pq/n per node).
int exhaustive_split(const SampleMatrix& m, const std::vector<std::uint32_t>& rows) {
    const i128 n = static_cast<i128>(rows.size());
    i128 p = 0;
    for (auto r : rows) p += m.y_at(r, 0);
    int best = -1;
    i128 best_num = 0, best_den = 1;
    for (std::size_t c = 0; c < m.features(); ++c) {
        for (int value_right = 0; value_right < 2; ++value_right) {
            i128 nr = 0, pr = 0;
            for (auto r : rows)
                if (m.x_at(r, c) == value_right) {
                    ++nr;
                    pr += m.y_at(r, 0);
                }
            const i128 nl = n - nr, pl = p - pr;
            if (nl == 0 || nr == 0) continue;
            const i128 num = 2 * (p * (n - p) * nl * nr - pl * (nl - pl) * n * nr - pr * (nr - pr) * n * nl);
            const i128 den = n * nl * nr;
            if (num <= 0) continue;
            if (best < 0 || num * best_den > best_num * den) {
                best = static_cast<int>(c);
                best_num = num;
                best_den = den;
            }
        }
    }
    return best;
}

Outcome split_oracle() {
    SplitMix64 rng(2002);
    std::size_t nodes_checked = 0;
    for (int trial = 0; trial < 3000; ++trial) {
        SampleMatrix m;
        m.rows = 1 + rng.bounded(32);
        const std::size_t d = 1 + rng.bounded(4);
        for (std::size_t c = 0; c < d; ++c) m.feature_names.emplace_back(Category::au, "au" + std::to_string(c + 1), "x");
        m.label_names = {emotion_label("lex", "y")};
        const double density = rng.uniform();
        for (std::size_t i = 0; i < m.rows * d; ++i) m.x.push_back(rng.uniform() < density);
        for (std::size_t i = 0; i < m.rows; ++i) m.y.push_back(static_cast<std::uint8_t>(rng.bounded(2)));

        Hyperparams hp;
        hp.n_trees = 1;
        hp.feature_rule = FeatureRule::all;
        hp.bootstrap = false;
        hp.seed = trial;
        const auto tree = fit(m, hp).per_label[0][0];

        // Route the training rows to every node and re-check each decision.
        std::vector<std::vector<std::uint32_t>> at(tree.nodes.size());
        for (std::uint32_t r = 0; r < m.rows; ++r) at[0].push_back(r);
        for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
            const auto& node = tree.nodes[i];
            const auto& rows = at[i];
            std::uint64_t pos = 0;
            for (auto r : rows) pos += m.y_at(r, 0);
            const bool can_split = rows.size() >= hp.min_samples_split && pos > 0 && pos < rows.size();
            const int want = can_split ? exhaustive_split(m, rows) : -1;
            if (node.feature != want)
                return {false, "trial " + std::to_string(trial) + " node " + std::to_string(i) + " split on " +
                                   std::to_string(node.feature) + ", exhaustive search says " + std::to_string(want)};
            ++nodes_checked;
            if (node.is_leaf()) continue;
            for (auto r : rows) at[m.x_at(r, static_cast<std::size_t>(node.feature)) ? node.right : node.left].push_back(r);
        }
    }
    return {true, "3000 trees (d<=4, n<=32), " + std::to_string(nodes_checked) + " nodes match exhaustive best-Gini search"};
}

// ---------------------------------------------------------------------------

Outcome expansion_conservation() {
    SplitMix64 rng(3003);
    const char* tiers[] = {"eye brows", "nose", "pos", "wh question", "head mvmt: nod", "role shift"};
    const char* values[] = {"raised", "lowered", "wrinkle", "whq", "slow", "3"};
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<AnnotationSpan> spans;
        std::uint64_t expected = 0;
        for (std::uint64_t i = 0, n = 1 + rng.bounded(40); i < n; ++i) {
            const auto start = rng.bounded(100);
            const auto end = start + rng.bounded(30);
            spans.push_back({"v" + std::to_string(rng.bounded(4)), tiers[rng.bounded(6)], values[rng.bounded(6)], start, end});
            expected += end - start + 1;
        }
        ExpansionStats stats;
        const auto frames = expand_to_frames(spans, TierScheme::defaults(), &stats);
        std::uint64_t kept = 0;
        for (const auto& f : frames) kept += f.features.size();
        if (stats.feature_instances != expected || kept + stats.duplicate_features != expected)
            return {false, "trial " + std::to_string(trial) + ": " + std::to_string(stats.feature_instances) + " instances, expected " +
                               std::to_string(expected)};
    }
    const auto demo = expand_to_frames(parse_annotations(read_file(data_dir / "demo/spans.csv"), SpanFormat::span_csv));
    const auto h = feature_counts(demo);
    const bool demo_ok = demo.size() == 50 && h.total_instances == 169;
    return {demo_ok, "1000 span sets conserve instances; demo " + std::to_string(h.total_instances) + "/" +
                         std::to_string(demo.size()) + " = " + fixed(h.mean_per_frame(), 2) + " (hand count 169/50 = 3.38)"};
}

// ---------------------------------------------------------------------------

Outcome threshold_boundary() {
    TempDir tmp("threshold");
    {
        std::ofstream s(tmp.path / "spans.csv");
        s << "video_id,tier,value,start_frame,end_frame\n"
          << "a,translation,I am sad.,0,9\n"
          << "a,eye brows,lowered,0,9\n"
          << "b,translation,I am angry.,0,8\n"
          << "b,nose,wrinkle,0,8\n";
        std::ofstream l(tmp.path / "lex.lex");
        l << "sad : sad\nangry : anger\n";
    }
    PipelineConfig cfg;
    cfg.spans = tmp.path / "spans.csv";
    cfg.lexica = {tmp.path / "lex.lex"};
    cfg.out = tmp.path / "out";
    run(cfg, Command::tag);
    const auto text = read_file(cfg.out / "label_counts.csv");
    const bool kept = text.find("lex,sad,10,1\n") != std::string::npos;
    const bool dropped = text.find("lex,anger,9,0\n") != std::string::npos;
    return {kept && dropped, std::string("10-frame label ") + (kept ? "retained" : "NOT retained") + ", 9-frame label " +
                                 (dropped ? "dropped" : "NOT dropped") + " at the default minimum of 10"};
}

// ---------------------------------------------------------------------------

PipelineConfig demo_config(const fs::path& out) {
    PipelineConfig cfg;
    cfg.spans = data_dir / "demo/spans.csv";
    cfg.lexica = {data_dir / "lexicons/liwc.lex", data_dir / "lexicons/empath.lex"};
    cfg.fer = data_dir / "demo/fer_sidecar.jsonl";
    cfg.out = out;
    cfg.seed = 7;
    cfg.hp.seed = 7;
    cfg.min_support = 3;
    return cfg;
}

Outcome determinism() {
    TempDir a("det-a"), b("det-b"), c("det-c");
    auto cfg = demo_config(a.path);
    cfg.jobs = 1;
    run(cfg, Command::all);
    cfg.out = b.path;
    run(cfg, Command::all);
    cfg.out = c.path;
    cfg.jobs = 8;
    run(cfg, Command::all);
    const auto sa = snapshot(a.path), sb = snapshot(b.path), sc = snapshot(c.path);
    const bool ok = sa == sb && sa == sc;
    return {ok, std::to_string(sa.size()) + " files; rerun " + (sa == sb ? "identical" : "DIFFERS") + ", jobs 1 vs 8 " +
                    (sa == sc ? "identical" : "DIFFERS")};
}

// ---------------------------------------------------------------------------

Outcome schema() {
    TempDir a("schema");
    auto cfg = demo_config(a.path);
    cfg.stats_labels = {"confusion", "liwc:negative emotion"};
    run(cfg, Command::all);
    const auto files = snapshot(a.path);
    const auto header = [&](const std::string& name) {
        const auto& t = files.at(name);
        return t.substr(0, t.find('\n'));
    };
    std::vector<std::string> bad;
    const auto expect = [&](bool ok, const std::string& what) {
        if (!ok) bad.push_back(what);
    };
    expect(header("ranking_negative-emotion_liwc.csv") == "feature,probability,support", "ranking (negative emotion) header");
    expect(header("ranking_confusion_empath.csv") == "feature,probability,support", "ranking (confusion) header");
    expect(header("eval.csv") == "feature,precision,recall,f1,support", "eval header");
    expect(header("importance.csv") == "au,importance", "importance header");
    const auto& ev = files.at("eval.csv");
    expect(ev.find("\nmicro avg,") != std::string::npos && ev.find("\nweighted avg,") != std::string::npos, "eval average rows");
    expect(ev.find("\nnegative emotion (liwc),") != std::string::npos && ev.find("\nnegative emotion (empath),") != std::string::npos,
           "lexicon-qualified duplicate names");
    expect(ev.find("\nsad,") != std::string::npos, "bare unique names");

    // Numeric formats: 3 decimals for probabilities, 2 for metrics, 6 for importance.
    const auto second_line = [&](const std::string& name) {
        const auto& t = files.at(name);
        const auto s = t.find('\n') + 1;
        return t.substr(s, t.find('\n', s) - s);
    };
    const auto column = [](const std::string& row, std::size_t i) {
        std::vector<std::string> f;
        std::stringstream ss(row);
        for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
        return i < f.size() ? f[i] : std::string();
    };
    const auto decimals = [](const std::string& v) { return v.find('.') == std::string::npos ? 0 : v.size() - v.find('.') - 1; };
    expect(decimals(column(second_line("ranking_confusion_empath.csv"), 1)) == 3, "probability decimals");
    expect(decimals(column(second_line("eval.csv"), 3)) == 2, "f1 decimals");
    expect(decimals(column(second_line("importance.csv"), 1)) == 6, "importance decimals");
    if (!bad.empty()) return {false, "mismatch: " + bad.front()};
    return {true, "ranking feature,probability,support; eval feature,precision,recall,f1,support + micro/weighted rows; "
                  "importance au,importance"};
}

} // namespace

int main() {
    report("planted-signal-recovery", planted_signal);
    report("cooccurrence-oracle", cooccurrence_oracle);
    report("metric-oracle", metric_oracle);
    report("split-oracle", split_oracle);
    report("expansion-conservation", expansion_conservation);
    report("threshold-boundary", threshold_boundary);
    report("determinism", determinism);
    report("schema-reproduction", schema);
    std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " criteria fail") << std::endl;
    return failures == 0 ? 0 : 1;
}
