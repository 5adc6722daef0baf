#include "incivility/corpus.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

using namespace incivility;

namespace {

std::string fixture(const std::string& name) { return read_file(std::string(INCIVILITY_SOURCE_DIR) + "/tests/fixtures/" + name); }

std::string line(const std::string& id, const char* parent, int t, const std::string& body = "text", const char* extra = "") {
    std::string p = parent ? "\"" + std::string(parent) + "\"" : "null";
    return "{\"id\":\"" + id + "\",\"parent_id\":" + p + ",\"author_id\":\"u\",\"subreddit\":\"s\",\"created_at\":" + std::to_string(t) +
           ",\"body\":\"" + body + "\"" + extra + "}\n";
}

}  // namespace

TEST(ParsePosts, EmptyInput) { EXPECT_TRUE(parse_posts("").empty()); }

TEST(ParsePosts, TwoLines) {
    auto posts = parse_posts(line("a", nullptr, 1) + line("b", "a", 2));
    ASSERT_EQ(posts.size(), 2u);
    EXPECT_EQ(posts[1].parent_id, "a");
    EXPECT_EQ(posts[1].line, 2u);
}

TEST(ParsePosts, DuplicateIdNamesLine) {
    try {
        parse_posts(line("a", nullptr, 1) + line("b", nullptr, 2) + line("a", nullptr, 3));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::DuplicateId);
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST(ParsePosts, MalformedLineReportsLineNumber) {
    try {
        parse_posts(line("a", nullptr, 1) + "{not json\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::Parse);
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(ParsePosts, MissingFieldIsSchemaError) {
    try {
        parse_posts("{\"id\":\"a\",\"author_id\":\"u\",\"subreddit\":\"s\",\"body\":\"x\"}\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::Schema);
    }
}

TEST(ParsePosts, RejectsSelfParentAndNegativeTime) {
    EXPECT_THROW(parse_posts(line("a", "a", 1)), Error);
    EXPECT_THROW(parse_posts(line("a", nullptr, -5)), Error);
}

TEST(ParsePosts, RoundTrip) {
    const auto text = fixture("forest20.jsonl");
    const auto posts = parse_posts(text);
    const auto again = parse_posts(posts_to_jsonl(posts));
    ASSERT_EQ(posts.size(), again.size());
    for (std::size_t i = 0; i < posts.size(); ++i) {
        EXPECT_EQ(posts[i].id, again[i].id);
        EXPECT_EQ(posts[i].parent_id, again[i].parent_id);
        EXPECT_EQ(posts[i].body, again[i].body);
        EXPECT_EQ(posts[i].hateful, again[i].hateful);
        EXPECT_EQ(posts[i].moderated, again[i].moderated);
    }
}

TEST(Forest, Chain) {
    auto f = build_forest(parse_posts(line("a", nullptr, 1) + line("b", "a", 2) + line("c", "b", 3)));
    EXPECT_EQ(f.roots(), std::vector<std::string>{"a"});
    EXPECT_EQ(f.children("a"), std::vector<std::string>{"b"});
    EXPECT_EQ(f.children("b"), std::vector<std::string>{"c"});
    EXPECT_TRUE(f.children("c").empty());
    EXPECT_EQ(f.descendants("a"), (std::vector<std::string>{"b", "c"}));
    EXPECT_EQ(f.depth_below("c", "a"), 2u);
}

TEST(Forest, SingleRoot) {
    auto f = build_forest(parse_posts(line("a", nullptr, 1)));
    EXPECT_EQ(f.roots().size(), 1u);
    EXPECT_TRUE(f.children("a").empty());
}

TEST(Forest, CycleIsStructuralError) {
    try {
        build_forest(parse_posts(line("a", nullptr, 1) + line("b", "c", 2) + line("c", "b", 3)));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::Structure);
        EXPECT_NE(std::string(e.what()).find("b -> c"), std::string::npos) << e.what();
    }
}

TEST(Forest, DanglingPostsBecomeRoots) {
    auto f = build_forest(parse_posts(line("x", "missing", 5) + line("y", "x", 6)));
    EXPECT_TRUE(f.is_dangling("x"));
    EXPECT_FALSE(f.is_dangling("y"));
    EXPECT_EQ(f.roots(), std::vector<std::string>{"x"});
}

TEST(Forest, ChildrenOrderedByTimeThenId) {
    auto f = build_forest(parse_posts(line("r", nullptr, 1) + line("z", "r", 5) + line("b", "r", 5) + line("a", "r", 9)));
    EXPECT_EQ(f.children("r"), (std::vector<std::string>{"b", "z", "a"}));
}

TEST(Triples, SevenPostForest) {
    const std::string text = line("H1", nullptr, 1, "hate", ",\"hateful\":true") + line("R1", "H1", 2, "[removed]") + line("R2", "H1", 3) +
                             line("C1", "R2", 4) + line("C2", "C1", 5) + line("H2", nullptr, 6, "fine", ",\"hateful\":false") +
                             line("R3", "H2", 7);
    const auto triples = extract_triples(build_forest(parse_posts(text)));
    ASSERT_EQ(triples.size(), 1u);
    EXPECT_EQ(triples[0], (Triple{"H1", "R2", {"C1", "C2"}}));
}

TEST(Triples, HatefulWithoutRepliesYieldsNothing) {
    EXPECT_TRUE(extract_triples(build_forest(parse_posts(line("H", nullptr, 1, "x", ",\"hateful\":true")))).empty());
}

TEST(Triples, EmptyFollowUp) {
    auto t = extract_triples(build_forest(parse_posts(line("H", nullptr, 1, "x", ",\"hateful\":true") + line("R", "H", 2))));
    ASSERT_EQ(t.size(), 1u);
    EXPECT_TRUE(t[0].followup_ids.empty());
}

TEST(Triples, MarkerNormalization) {
    std::set<std::string> markers{"deleted", "removed"};
    PostRecord p;
    for (const char* body : {"[deleted]", "  [Removed] ", "DELETED", "removed"}) {
        p.body = body;
        EXPECT_TRUE(is_moderated(p, markers)) << body;
    }
    p.body = "deleted by me";
    EXPECT_FALSE(is_moderated(p, markers));
    p.moderated = true;
    EXPECT_TRUE(is_moderated(p, markers));
}

TEST(Triples, CustomMarkers) {
    const std::string text = line("H", nullptr, 1, "x", ",\"hateful\":true") + line("R", "H", 2, "[mod action]");
    const auto forest = build_forest(parse_posts(text));
    EXPECT_EQ(extract_triples(forest).size(), 1u);
    EXPECT_TRUE(extract_triples(forest, {"mod action"}).empty());
}

// Hand enumeration of tests/fixtures/forest20.jsonl:
//   H1 (hateful): R1 "[removed]" skipped, R2 -> {C1, C3, C2 under C1}, R3 moderated=true skipped, R4 leaf
//   H2 not hateful; H3 (hateful): R6 "  Deleted " skipped, R7 -> {C6, C7 (same second, id order), C8 under C7}
//   D1 hateful but dangling: no triples
TEST(Triples, TwentyPostFixture) {
    const auto forest = build_forest(parse_posts(fixture("forest20.jsonl")));
    ASSERT_EQ(forest.posts().size(), 20u);
    const std::vector<Triple> expected{
        {"H1", "R2", {"C1", "C3", "C2"}},
        {"H1", "R4", {}},
        {"H3", "R7", {"C6", "C7", "C8"}},
    };
    EXPECT_EQ(extract_triples(forest), expected);
}

TEST(Triples, CountMatchesBruteForce) {
    const auto forest = build_forest(parse_posts(fixture("forest20.jsonl")));
    std::size_t expected = 0;
    for (const auto& [id, post] : forest.posts()) {
        if (!post.parent_id || !forest.contains(*post.parent_id)) continue;
        const auto& parent = forest.post(*post.parent_id);
        if (parent.hateful.value_or(false) && !forest.is_dangling(parent.id) && !is_moderated(post, default_moderation_markers())) ++expected;
    }
    EXPECT_EQ(extract_triples(forest).size(), expected);
}

TEST(Triples, FollowUpClosedUnderAncestry) {
    const auto forest = build_forest(parse_posts(fixture("forest20.jsonl")));
    for (const auto& t : extract_triples(forest)) {
        std::set<std::string> members(t.followup_ids.begin(), t.followup_ids.end());
        members.insert(t.reply_id);
        for (const auto& id : t.followup_ids) {
            const PostRecord* p = &forest.post(id);
            while (p->id != t.reply_id) {
                ASSERT_TRUE(members.count(p->id));
                p = forest.parent(p->id);
                ASSERT_NE(p, nullptr);
            }
        }
    }
}

TEST(Triples, JsonlRoundTripAndDeterminism) {
    const auto text = fixture("forest20.jsonl");
    const auto a = triples_to_jsonl(extract_triples(build_forest(parse_posts(text))));
    const auto b = triples_to_jsonl(extract_triples(build_forest(parse_posts(text))));
    EXPECT_EQ(a, b);
    EXPECT_EQ(triples_to_jsonl(parse_triples(a)), a);
}
