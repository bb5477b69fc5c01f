#include <catch_amalgamated.hpp>

#include "signaffect/digest.hpp"
#include "signaffect/lexicon.hpp"
#include "signaffect/rng.hpp"

using namespace signaffect;

namespace {

Lexicon small_lexicon() {
    return load_lexicon("happi* : positive emotion\n"
                        "sad* : sad, negative emotion\n"
                        "terrif* : anxiety, negative emotion\n",
                        "liwc");
}

std::set<std::string> categories_of(const std::set<FeatureId>& labels) {
    std::set<std::string> out;
    for (const auto& l : labels) out.insert(l.value());
    return out;
}

} // namespace

TEST_CASE("prefix patterns match words with that stem", "[lexicon]") {
    const auto lex = small_lexicon();
    CHECK(lex.match("happiness") == std::set<std::string>{"positive emotion"});
    CHECK(lex.match("happily") == std::set<std::string>{"positive emotion"});
    CHECK(lex.match("happy").empty());
    CHECK(lex.match("happi") == std::set<std::string>{"positive emotion"});

    Lexicon exact("x");
    exact.add("happy", {"joy"});
    CHECK(exact.match("happy") == std::set<std::string>{"joy"});
    CHECK(exact.match("happyish").empty());
}

TEST_CASE("tag_text unions categories over tokens", "[lexicon]") {
    const std::vector<Lexicon> lexica{small_lexicon()};
    const auto labels = tag_text("Sadly, he was terrified.", lexica);
    CHECK(categories_of(labels) == std::set<std::string>{"sad", "negative emotion", "anxiety"});
    CHECK(labels.contains(FeatureId(Category::emotion, "liwc", "sad")));
    CHECK(tag_text("", lexica).empty());
    CHECK(tag_text("the tree", lexica).empty());
}

TEST_CASE("same category name in two lexica stays two labels", "[lexicon]") {
    Lexicon a("liwc"), b("empath");
    a.add("sad", {"negative emotion"});
    b.add("sad", {"negative emotion"});
    const auto labels = tag_text("sad", {a, b});
    CHECK(labels.size() == 2);
    CHECK(labels.begin()->display() != std::next(labels.begin())->display());
}

TEST_CASE("lexicon rules are validated", "[lexicon]") {
    Lexicon lex("x");
    CHECK_THROWS_WITH(lex.add("ha*py", {"c"}), Catch::Matchers::ContainsSubstring("interior wildcard"));
    CHECK_THROWS_AS(lex.add("*", {"c"}), DataError);
    CHECK_THROWS_AS(lex.add("  ", {"c"}), DataError);
    try {
        load_lexicon("# comment\n\nok : a\nbroken line\n", "x");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.record() == 4);
    }
    CHECK_THROWS_AS(load_lexicon("word : a, , b\n", "x"), ParseError);
    const auto merged = load_lexicon("word : a\nWord : b\n", "x");
    CHECK(merged.match("word") == std::set<std::string>{"a", "b"});
}

TEST_CASE("tokenize splits on non-letters and keeps UTF-8 words", "[lexicon]") {
    CHECK(tokenize("Don't  STOP-now!") == std::vector<std::string>{"don", "t", "stop", "now"});
    CHECK(tokenize("café au lait") == std::vector<std::string>{"café", "au", "lait"});
    CHECK(tokenize("42 ...").empty());
}

TEST_CASE("tagging is monotone in the text and invariant to case and spacing", "[lexicon][property]") {
    const std::vector<Lexicon> lexica{load_lexicon(read_file(SIGNAFFECT_DATA_DIR "/lexicons/liwc.lex"), "liwc"),
                                      load_lexicon(read_file(SIGNAFFECT_DATA_DIR "/lexicons/empath.lex"), "empath")};
    static const char* words[] = {"sad", "happy", "tree", "Why", "scared", "the", "LOVE", "maybe", "cut", "dog", "surprised"};
    SplitMix64 rng(17);
    for (int trial = 0; trial < 300; ++trial) {
        std::string a, b;
        for (int i = 0, n = static_cast<int>(rng.bounded(6)); i < n; ++i) a += std::string(words[rng.bounded(11)]) + " ";
        for (int i = 0, n = static_cast<int>(rng.bounded(6)); i < n; ++i) b += std::string(words[rng.bounded(11)]) + ", ";
        const auto la = tag_text(a, lexica);
        const auto lab = tag_text(a + b, lexica);
        REQUIRE(std::includes(lab.begin(), lab.end(), la.begin(), la.end()));

        std::string shouty;
        for (char c : a) shouty += c == ' ' ? std::string("  \t") : std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
        REQUIRE(tag_text(shouty, lexica) == la);
    }
}

TEST_CASE("apply_threshold keeps labels at the minimum", "[lexicon]") {
    const FeatureId ten(Category::emotion, "liwc", "sad"), nine(Category::emotion, "liwc", "anger");
    const std::map<FeatureId, std::uint64_t> counts{{ten, 10}, {nine, 9}};
    CHECK(apply_threshold(counts) == std::set<FeatureId>{ten});
    CHECK(apply_threshold(counts, 9).size() == 2);
    CHECK(apply_threshold(counts, 11).empty());
    CHECK_THROWS_AS(apply_threshold(counts, 0), UsageError);
}

TEST_CASE("shipped lexica parse and carry the expected categories", "[lexicon]") {
    const auto liwc = load_lexicon(read_file(SIGNAFFECT_DATA_DIR "/lexicons/liwc.lex"), "liwc");
    const auto empath = load_lexicon(read_file(SIGNAFFECT_DATA_DIR "/lexicons/empath.lex"), "empath");
    CHECK(liwc.categories().size() == 7);
    CHECK(empath.categories().size() == 11);
}
