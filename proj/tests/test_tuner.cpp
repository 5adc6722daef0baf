#include "incivility/synth.hpp"
#include "incivility/tuner.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

using namespace incivility;

namespace {

Triple triple_with(const std::string& reply, std::size_t followups) {
    Triple t{"h", reply, {}};
    for (std::size_t i = 0; i < followups; ++i) t.followup_ids.push_back(reply + "-" + std::to_string(i));
    return t;
}

std::vector<Triple> two_per_bucket() {
    std::vector<Triple> out;
    const std::size_t lengths[] = {0, 3, 7, 9, 12, 20};
    for (std::size_t i = 0; i < 6; ++i) out.push_back(triple_with("r" + std::to_string(i), lengths[i]));
    return out;
}

std::size_t length_of(const std::vector<Triple>& ts, const std::string& reply) {
    for (const auto& t : ts) {
        if (t.reply_id == reply) return t.followup_ids.size();
    }
    return 999;
}

}  // namespace

TEST(Buckets, Boundaries) {
    EXPECT_EQ(length_bucket(0), LengthBucket::Short);
    EXPECT_EQ(length_bucket(5), LengthBucket::Short);
    EXPECT_EQ(length_bucket(6), LengthBucket::Medium);
    EXPECT_EQ(length_bucket(10), LengthBucket::Medium);
    EXPECT_EQ(length_bucket(11), LengthBucket::Long);
    EXPECT_EQ(combo_of(12, 3), BucketCombo::SL);
    EXPECT_EQ(combo_of(7, 7), BucketCombo::MM);
}

TEST(SamplePairs, OnePerCombo) {
    const auto ts = two_per_bucket();
    const auto pairs = sample_pairs(ts, 1, 42);
    ASSERT_EQ(pairs.size(), 6u);
    std::set<BucketCombo> seen;
    for (const auto& p : pairs) {
        EXPECT_NE(p.left, p.right);
        EXPECT_EQ(combo_of(length_of(ts, p.left), length_of(ts, p.right)), p.bucket_combo);
        seen.insert(p.bucket_combo);
    }
    EXPECT_EQ(seen.size(), 6u);
}

TEST(SamplePairs, FortyPerComboIsTwoHundredForty) {
    std::vector<Triple> ts;
    for (int i = 0; i < 60; ++i) ts.push_back(triple_with("r" + std::to_string(i), static_cast<std::size_t>(i % 30)));
    const auto pairs = sample_pairs(ts, 40, 1);
    EXPECT_EQ(pairs.size(), 240u);
    std::set<std::string> ids;
    for (const auto& p : pairs) ids.insert(p.pair_id);
    EXPECT_EQ(ids.size(), 240u);
    EXPECT_EQ(pairs.front().pair_id, "SS-001");
}

TEST(SamplePairs, DeterministicForSeed) {
    std::vector<Triple> ts;
    for (int i = 0; i < 40; ++i) ts.push_back(triple_with("r" + std::to_string(i), static_cast<std::size_t>(i % 25)));
    EXPECT_EQ(pairs_to_jsonl(sample_pairs(ts, 5, 9)), pairs_to_jsonl(sample_pairs(ts, 5, 9)));
    EXPECT_NE(pairs_to_jsonl(sample_pairs(ts, 5, 9)), pairs_to_jsonl(sample_pairs(ts, 5, 10)));
}

TEST(SamplePairs, SidesAreRandomized) {
    std::vector<Triple> ts;
    for (int i = 0; i < 40; ++i) ts.push_back(triple_with("r" + std::to_string(i), i < 20 ? 1 : 15));
    std::size_t short_left = 0, total = 0;
    for (const auto& p : sample_pairs(ts, 200, 3, {BucketCombo::SL})) {
        ++total;
        short_left += length_of(ts, p.left) <= 5;
    }
    EXPECT_GT(short_left, total / 4);
    EXPECT_LT(short_left, 3 * total / 4);
}

TEST(SamplePairs, InsufficientPopulationNamesCombo) {
    std::vector<Triple> ts{triple_with("a", 1), triple_with("b", 2)};
    try {
        sample_pairs(ts, 1, 1, {BucketCombo::SL});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::InsufficientPopulation);
        EXPECT_NE(std::string(e.what()).find("SL"), std::string::npos);
    }
}

TEST(SamplePairs, JsonlRoundTrip) {
    const auto pairs = sample_pairs(two_per_bucket(), 2, 4);
    EXPECT_EQ(parse_pairs(pairs_to_jsonl(pairs)), pairs);
}

TEST(Adjudicate, Rules) {
    const std::vector<PairJudgment> js{
        {"p1", "a", PairChoice::Left, 1}, {"p1", "b", PairChoice::Left, 2}, {"p2", "a", PairChoice::Left, 3},
        {"p2", "b", PairChoice::Right, 4}, {"p3", "a", PairChoice::Right, 5}, {"p3", "b", PairChoice::Left, 6},
    };
    const auto adj = adjudicate(js, {{"p2", PairChoice::Right}});
    EXPECT_EQ(adj.gold.at("p1"), PairChoice::Left);
    EXPECT_EQ(adj.gold.at("p2"), PairChoice::Right);
    EXPECT_FALSE(adj.gold.count("p3"));
    EXPECT_EQ(adj.unresolved, std::vector<std::string>{"p3"});
}

TEST(Adjudicate, OverrideWithoutJudgmentsIsUnknownPair) {
    try {
        adjudicate({{"p1", "a", PairChoice::Left, 1}}, {{"zz", PairChoice::Left}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::UnknownPair);
    }
}

TEST(Judgments, TieIsNotAValidChoice) {
    EXPECT_THROW(parse_judgments("{\"pair_id\":\"p\",\"annotator_id\":\"a\",\"choice\":\"Tie\"}\n"), Error);
}

TEST(Grid, LatticeAndSize) {
    EXPECT_EQ(weight_lattice(0.05).size(), 231u);
    EXPECT_EQ(subset_combinations().size(), 255u);
    std::vector<std::pair<int, int>> idx;
    const auto grid = enumerate_grid(GridOptions{}, &idx);
    EXPECT_EQ(grid.size(), 58905u);
    const auto ref = reference_config();
    const bool member = std::any_of(grid.begin(), grid.end(), [&](const MetricConfig& c) {
        return c.antisocial == ref.antisocial && c.prosocial == ref.prosocial && std::fabs(c.alpha - 0.75) < 1e-12 &&
               std::fabs(c.beta - 0.15) < 1e-12;
    });
    EXPECT_TRUE(member);
    for (const auto& c : grid) EXPECT_LE(c.alpha + c.beta, 1.0 + 1e-12);
}

TEST(Grid, PlantedConfigRecovered) {
    const auto items = synth::planted_items(reference_config(), 60, 2024);
    GridOptions opts;
    opts.jobs = 4;
    const auto results = grid_search(items, opts);
    ASSERT_EQ(results.size(), 58905u);
    EXPECT_DOUBLE_EQ(results.front().kappa, 1.0);
    EXPECT_EQ(results.front().tie_count, 0u);
    EXPECT_EQ(decide(items, results.front().config), decide(items, reference_config()));
    for (std::size_t i = 1; i < results.size(); ++i) ASSERT_FALSE(tune_result_before(results[i], results[i - 1]));
}

TEST(Grid, ParallelMatchesSerial) {
    const auto items = synth::planted_items(reference_config(), 20, 77);
    GridOptions serial, parallel;
    parallel.jobs = 3;
    EXPECT_EQ(tune_results_to_csv(grid_search(items, serial)), tune_results_to_csv(grid_search(items, parallel)));
}

TEST(Grid, AllTiesRankLastAmongEqualKappa) {
    // Both sides identical: every config ties every pair.
    SeededRng rng(3);
    std::vector<TuningItem> items;
    for (int i = 0; i < 6; ++i) {
        auto conv = synth::random_conversation(rng, 4, 2, 0.3);
        items.push_back(TuningItem{"p" + std::to_string(i), conv, conv, i % 2 ? PairChoice::Left : PairChoice::Right});
    }
    const auto results = grid_search(items);
    for (const auto& r : results) EXPECT_EQ(r.tie_count, 6u);
    EXPECT_DOUBLE_EQ(results.front().kappa, 0.0);
}

TEST(Grid, ReportShapes) {
    const auto items = synth::planted_items(reference_config(), 12, 5);
    const auto results = grid_search(items);
    const auto csv = tune_results_to_csv(results, 3);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "antisocial_dims,prosocial_dims,alpha,beta,f,kappa,accuracy,tie_count");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
    const auto matrix = kappa_matrix_csv(results);
    EXPECT_EQ(std::count(matrix.begin(), matrix.end(), '\n'), 17);
    EXPECT_NE(matrix.find("NA"), std::string::npos);
}
