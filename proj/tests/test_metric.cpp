#include "incivility/metric.hpp"
#include "incivility/synth.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace incivility;

namespace {

constexpr std::uint8_t bit(Dimension d) { return static_cast<std::uint8_t>(1u << index_of(d)); }

IncivilityScore score_of(const std::vector<AuthoredFlags>& posts, const MetricConfig& c) {
    return incivility_score(dimension_counts(std::span<const AuthoredFlags>(posts), c), c);
}

MetricConfig single_anti(Dimension d, double alpha, double beta, Aggregation f = Aggregation::Sqrt) {
    MetricConfig c;
    c.antisocial = DimensionSet{d};
    c.alpha = alpha;
    c.beta = beta;
    c.f = f;
    return c;
}

// X: a1 twice; Y: p3 once; Z: unflagged.
std::vector<AuthoredFlags> worked_example() {
    return {{"X", bit(Dimension::Offensive)}, {"X", bit(Dimension::Offensive)}, {"Y", bit(Dimension::Positiveness)}, {"Z", 0}};
}

std::vector<std::pair<std::string, unsigned>> as_oracle(const std::vector<AuthoredFlags>& posts) {
    std::vector<std::pair<std::string, unsigned>> out;
    for (const auto& p : posts) out.emplace_back(p.author_id, p.flags);
    return out;
}

}  // namespace

TEST(MetricConfig, Validation) {
    EXPECT_NO_THROW(reference_config().validate());
    auto c = reference_config();
    c.alpha = 0.9;
    EXPECT_THROW(c.validate(), Error);  // alpha + beta > 1
    c = reference_config();
    c.antisocial = {};
    c.prosocial = {};
    EXPECT_THROW(c.validate(), Error);
    c = reference_config();
    c.beta = -0.1;
    EXPECT_THROW(c.validate(), Error);
}

TEST(MetricConfig, JsonRoundTrip) {
    const auto text = read_file(std::string(INCIVILITY_SOURCE_DIR) + "/data/reference_metric.json");
    const auto c = metric_config_from_json(json::parse(text));
    const auto r = reference_config();
    EXPECT_EQ(c.antisocial, r.antisocial);
    EXPECT_EQ(c.prosocial, r.prosocial);
    EXPECT_DOUBLE_EQ(c.alpha, 0.75);
    EXPECT_DOUBLE_EQ(c.beta, 0.15);
    EXPECT_EQ(c.f, Aggregation::Sqrt);
    const auto again = metric_config_from_json(to_json(c));
    EXPECT_EQ(again.antisocial, c.antisocial);
    EXPECT_EQ(again.neutral, c.neutral);
}

TEST(MetricConfig, RejectsDimensionOnWrongSide) {
    EXPECT_THROW(metric_config_from_json(json::parse(R"({"antisocial_dims":["p1"],"prosocial_dims":[],"alpha":0.5,"beta":0.1,"f":"sqrt"})")),
                 Error);
}

TEST(DimensionCounts, Empty) {
    const auto counts = dimension_counts(std::span<const AuthoredFlags>(), reference_config());
    EXPECT_TRUE(counts.per_user_dim.empty());
    EXPECT_TRUE(counts.per_user_neutral.empty());
}

TEST(DimensionCounts, WorkedExample) {
    const auto posts = worked_example();
    const auto counts = dimension_counts(std::span<const AuthoredFlags>(posts), reference_config());
    const std::map<std::pair<std::string, Dimension>, std::size_t> expected{{{"X", Dimension::Offensive}, 2}, {{"Y", Dimension::Positiveness}, 1}};
    EXPECT_EQ(counts.per_user_dim, expected);
    EXPECT_EQ(counts.per_user_neutral, (std::map<std::string, std::size_t>{{"Z", 1}}));
}

TEST(DimensionCounts, PostOnBothSidesCountsTwiceAndIsNotNeutral) {
    MetricConfig c;
    c.antisocial = {Dimension::Offensive};
    c.prosocial = {Dimension::Positiveness};
    c.alpha = 0.5;
    c.beta = 0.2;
    const std::vector<AuthoredFlags> posts{{"X", static_cast<std::uint8_t>(bit(Dimension::Offensive) | bit(Dimension::Positiveness))}};
    const auto counts = dimension_counts(std::span<const AuthoredFlags>(posts), c);
    EXPECT_EQ(counts.per_user_dim.at({"X", Dimension::Offensive}), 1u);
    EXPECT_EQ(counts.per_user_dim.at({"X", Dimension::Positiveness}), 1u);
    EXPECT_TRUE(counts.per_user_neutral.empty());
}

TEST(DimensionCounts, NeutralModeAll) {
    auto c = reference_config();
    const std::vector<AuthoredFlags> posts{{"X", bit(Dimension::Empathy)}};
    EXPECT_EQ(dimension_counts(std::span<const AuthoredFlags>(posts), c).per_user_neutral.at("X"), 1u);
    c.neutral = NeutralMode::All;
    EXPECT_TRUE(dimension_counts(std::span<const AuthoredFlags>(posts), c).per_user_neutral.empty());
}

TEST(DimensionCounts, MissingProfileNamesPost) {
    auto forest = build_forest(parse_posts(
        "{\"id\":\"h\",\"parent_id\":null,\"author_id\":\"a\",\"subreddit\":\"s\",\"created_at\":1,\"body\":\"x\",\"hateful\":true}\n"
        "{\"id\":\"r\",\"parent_id\":\"h\",\"author_id\":\"b\",\"subreddit\":\"s\",\"created_at\":2,\"body\":\"x\"}\n"
        "{\"id\":\"c\",\"parent_id\":\"r\",\"author_id\":\"a\",\"subreddit\":\"s\",\"created_at\":3,\"body\":\"x\"}\n"));
    const auto triples = extract_triples(forest);
    try {
        score_triple(triples.at(0), forest, {}, reference_config());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::MissingProfile);
        EXPECT_NE(std::string(e.what()).find("'c'"), std::string::npos);
    }
}

TEST(IncivilityScore, EmptyIsZero) {
    const auto s = score_of({}, reference_config());
    EXPECT_EQ(s.A, 0.0);
    EXPECT_EQ(s.P, 0.0);
    EXPECT_EQ(s.N, 0.0);
    EXPECT_EQ(s.S, 0.0);
}

TEST(IncivilityScore, SqrtIdentityTenUsersVersusOne) {
    const auto c = single_anti(Dimension::Offensive, 1.0, 0.0);
    std::vector<AuthoredFlags> many, one;
    for (int i = 0; i < 10; ++i) many.push_back({"u" + std::to_string(i), bit(Dimension::Offensive)});
    for (int i = 0; i < 100; ++i) one.push_back({"solo", bit(Dimension::Offensive)});
    EXPECT_NEAR(score_of(many, c).A, 10.0, 1e-12);
    EXPECT_NEAR(score_of(one, c).A, 10.0, 1e-12);
}

TEST(IncivilityScore, WorkedExample) {
    const auto s = score_of(worked_example(), reference_config());
    EXPECT_NEAR(s.A, std::sqrt(2.0) / 3.0, 1e-12);
    EXPECT_NEAR(s.P, 1.0, 1e-12);
    EXPECT_NEAR(s.N, 1.0, 1e-12);
    EXPECT_NEAR(s.S, 0.75 * std::sqrt(2.0) / 3.0 - 0.15 - 0.10, 1e-12);
    EXPECT_NEAR(s.S, 0.1036, 5e-5);
    EXPECT_NEAR(s.S, oracle::metric_S(as_oracle(worked_example()), 0x07, 0x40, 0.75, 0.15, oracle::f_sqrt), 1e-12);
}

TEST(IncivilityScore, TwoDimensionsWeighHalfEach) {
    MetricConfig c;
    c.antisocial = {Dimension::Offensive, Dimension::Abusive};
    c.alpha = 1.0;
    c.beta = 0.0;
    c.f = Aggregation::Identity;
    const std::vector<AuthoredFlags> posts{{"X", bit(Dimension::Offensive)}, {"Y", bit(Dimension::Offensive)}};
    EXPECT_NEAR(score_of(posts, c).A, 0.5 * 2 + 0.5 * 0, 1e-12);
}

TEST(IncivilityScore, FormulaHoldsAndMatchesOracle) {
    SeededRng rng(21);
    double (*fs[])(double) = {[](double x) { return std::sqrt(x); }, [](double x) { return x; }, [](double x) { return std::log1p(x); }};
    const Aggregation aggs[] = {Aggregation::Sqrt, Aggregation::Identity, Aggregation::Log1p};
    for (int trial = 0; trial < 300; ++trial) {
        const auto posts = synth::random_conversation(rng, rng.below(30), 1 + rng.below(6), 0.25);
        MetricConfig c;
        do {
            c.antisocial = DimensionSet(static_cast<std::uint8_t>(rng.below(16)));
            c.prosocial = DimensionSet(static_cast<std::uint8_t>(rng.below(16) << 4));
        } while (c.antisocial.empty() && c.prosocial.empty());
        c.alpha = rng.below(11) / 20.0;
        c.beta = rng.below(11) / 20.0;
        const int k = static_cast<int>(rng.below(3));
        c.f = aggs[k];
        const auto s = score_of(posts, c);
        EXPECT_NEAR(s.S, c.alpha * s.A - c.beta * s.P - (1 - c.alpha - c.beta) * s.N, 1e-12);
        EXPECT_NEAR(s.S, oracle::metric_S(as_oracle(posts), c.antisocial.bits(), c.prosocial.bits(), c.alpha, c.beta, fs[k]), 1e-9);
    }
}

TEST(ComponentTable, AgreesWithDirectScoring) {
    SeededRng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const auto posts = synth::random_conversation(rng, rng.below(40), 1 + rng.below(8), 0.3);
        for (auto f : {Aggregation::Sqrt, Aggregation::Identity, Aggregation::Log1p}) {
            const auto table = ComponentTable::build(posts, f);
            for (auto neutral : {NeutralMode::Selected, NeutralMode::All}) {
                MetricConfig c;
                c.antisocial = DimensionSet(static_cast<std::uint8_t>(1 + rng.below(15)));
                c.prosocial = DimensionSet(static_cast<std::uint8_t>(rng.below(16) << 4));
                c.alpha = 0.35;
                c.beta = 0.4;
                c.f = f;
                c.neutral = neutral;
                const auto a = table.score(c);
                const auto b = score_of(posts, c);
                EXPECT_EQ(a.S, b.S);
                EXPECT_EQ(a.N, b.N);
            }
        }
    }
}

TEST(ComparePair, Cases) {
    auto s = [](double v) { return IncivilityScore{0, 0, 0, v}; };
    EXPECT_EQ(compare_pair(s(0.5), s(-0.2)), PairChoice::Left);
    EXPECT_EQ(compare_pair(s(0), s(0)), PairChoice::Tie);
    EXPECT_EQ(compare_pair(s(-0.10), s(-0.099)), PairChoice::Right);
    EXPECT_EQ(compare_pair(s(1.0), s(1.0 + 1e-13)), PairChoice::Tie);
}

TEST(ScoreJson, Fields) {
    const auto j = score_to_json("r1", IncivilityScore{1, 2, 3, 4});
    EXPECT_EQ(j["reply_id"], "r1");
    EXPECT_EQ(j["S"], 4.0);
    EXPECT_TRUE(j.contains("A") && j.contains("P") && j.contains("N"));
}
