#include <catch_amalgamated.hpp>

#include "signaffect/au_mapping.hpp"
#include "signaffect/digest.hpp"
#include "signaffect/rng.hpp"

using namespace signaffect;

namespace {

FrameRecord frame_with(std::initializer_list<FeatureId> features) {
    FrameRecord r{"v", 0, {}, {}, {}};
    for (const auto& f : features) insert_feature(r.features, f);
    return r;
}

} // namespace

TEST_CASE("map_to_aus adds one AU per matched source", "[au]") {
    const auto table = AuMappingTable::defaults();
    const FeatureId brows(Category::facial, "eye brows", "lowered");
    const FeatureId nose(Category::facial, "nose", "wrinkle");

    const auto mapped = map_to_aus(frame_with({brows, nose}), table);
    CHECK(contains_feature(mapped.features, brows));
    CHECK(contains_feature(mapped.features, nose));
    CHECK(contains_feature(mapped.features, FeatureId(Category::au, "au4", "eye brows lowered")));
    CHECK(contains_feature(mapped.features, FeatureId(Category::au, "au9", "nose wrinkle/tensed")));
    CHECK(mapped.features.size() == 4);

    SECTION("two sources of one AU give one AU feature") {
        const auto m = map_to_aus(frame_with({FeatureId(Category::facial, "nose", "wrinkle"), FeatureId(Category::facial, "nose", "tensed")}), table);
        CHECK(feature_counts({m}, Category::au).total_instances == 1);
    }
    SECTION("unmapped facial features are tallied") {
        UnmappedTally tally;
        const FeatureId odd(Category::facial, "eye brows", "wiggling");
        const auto m = map_to_aus(frame_with({odd, FeatureId(Category::linguistic, "pos", "wh-word")}), table, &tally);
        CHECK(feature_counts({m}, Category::au).total_instances == 0);
        CHECK(tally.size() == 1);
        CHECK(tally[odd] == 1);
    }
    SECTION("wildcard rows match any value, exact rows win") {
        AuMappingTable t;
        t.add("head mvmt: nod", "*", 59, "head mvmt: nod");
        t.add("head mvmt: nod", "rapid", 83, "other");
        CHECK(t.lookup(FeatureId(Category::facial, "head mvmt: nod", "slow"))->au_id == 59);
        CHECK(t.lookup(FeatureId(Category::facial, "Head Mvmt: Nod", "Rapid"))->au_id == 83);
        CHECK_FALSE(t.lookup(FeatureId(Category::facial, "head mvmt: shake", "slow")).has_value());
    }
}

TEST_CASE("map_to_aus is idempotent", "[au][property]") {
    const auto table = AuMappingTable::defaults();
    SplitMix64 rng(3);
    const auto& entries = table.entries();
    for (int trial = 0; trial < 200; ++trial) {
        FrameRecord r{"v", 0, {}, {}, {}};
        for (int k = 0; k < 5; ++k) {
            const auto& e = entries[rng.bounded(entries.size())];
            insert_feature(r.features, FeatureId(Category::facial, e.tier, e.value == "*" ? "x" : e.value));
        }
        const auto once = map_to_aus(r, table);
        REQUIRE(map_to_aus(once, table).features == once.features);
    }
}

TEST_CASE("AU mapping table validation", "[au]") {
    AuMappingTable t;
    t.add("nose", "wrinkle", 9, "nose wrinkle");
    CHECK_THROWS_AS(t.add("nose", "tensed", 9, "something else"), DataError);
    CHECK_THROWS_AS(t.add("nose", "wrinkle", 4, "eye brows lowered"), DataError);
    CHECK_NOTHROW(t.add("nose", "wrinkle", 9, "nose wrinkle"));
    CHECK_THROWS_AS(t.add("nose", "wr*", 9, "nose wrinkle"), DataError);
    CHECK_THROWS_AS(t.add("nose", "x", 0, "zero"), DataError);
    CHECK(t.entries().size() == 1);

    CHECK_THROWS_AS(AuMappingTable::load_csv("tier,value,au\n"), DataError);
    try {
        AuMappingTable::load_csv("tier,value,au_id,au_label\nnose,wrinkle,9,a\nnose,tensed,nine,a\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.record() == 2);
    }
}

TEST_CASE("shipped default AU map equals the built-in table", "[au]") {
    const auto builtin = AuMappingTable::defaults();
    const auto text = read_file(SIGNAFFECT_DATA_DIR "/au_map_default.csv");
    CHECK(text == builtin.to_csv());
    CHECK(AuMappingTable::load_csv(text).to_csv() == text);
    std::set<unsigned> ids;
    for (const auto& e : builtin.entries()) ids.insert(e.code.au_id);
    CHECK(ids.size() == 30);
}
