#pragma once
// Metric tuning against pairwise human judgments.
//
// Pairs of triples are sampled per follow-up length bucket combination,
// human choices are adjudicated into gold labels, and every metric
// configuration on the (dimension subsets x alpha/beta lattice) grid is ranked
// by Cohen's kappa between its pairwise decisions and the gold labels.

#include "incivility/behavior.hpp"
#include "incivility/corpus.hpp"
#include "incivility/error.hpp"
#include "incivility/metric.hpp"
#include "incivility/stats.hpp"
#include "incivility/util.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace incivility {

enum class LengthBucket { Short, Medium, Long };

// short: <= 5 posts, medium: 6-10, long: > 10.
inline LengthBucket length_bucket(std::size_t followup_length) {
    if (followup_length <= 5) return LengthBucket::Short;
    if (followup_length <= 10) return LengthBucket::Medium;
    return LengthBucket::Long;
}

enum class BucketCombo { SS, SM, SL, MM, ML, LL };

inline constexpr std::array<BucketCombo, 6> kAllCombos{BucketCombo::SS, BucketCombo::SM, BucketCombo::SL,
                                                       BucketCombo::MM, BucketCombo::ML, BucketCombo::LL};

inline std::string_view to_string(BucketCombo c) {
    static constexpr std::array<std::string_view, 6> names{"SS", "SM", "SL", "MM", "ML", "LL"};
    return names[static_cast<std::size_t>(c)];
}

inline BucketCombo parse_bucket_combo(std::string_view name) {
    for (auto c : kAllCombos) {
        if (to_string(c) == name) return c;
    }
    throw Error(Errc::Schema, "unknown bucket combination '" + std::string(name) + "'");
}

inline std::pair<LengthBucket, LengthBucket> buckets_of(BucketCombo c) {
    switch (c) {
    case BucketCombo::SS: return {LengthBucket::Short, LengthBucket::Short};
    case BucketCombo::SM: return {LengthBucket::Short, LengthBucket::Medium};
    case BucketCombo::SL: return {LengthBucket::Short, LengthBucket::Long};
    case BucketCombo::MM: return {LengthBucket::Medium, LengthBucket::Medium};
    case BucketCombo::ML: return {LengthBucket::Medium, LengthBucket::Long};
    case BucketCombo::LL: return {LengthBucket::Long, LengthBucket::Long};
    }
    return {LengthBucket::Short, LengthBucket::Short};
}

inline BucketCombo combo_of(std::size_t left_length, std::size_t right_length) {
    auto a = static_cast<int>(length_bucket(left_length));
    auto b = static_cast<int>(length_bucket(right_length));
    if (a > b) std::swap(a, b);
    static constexpr int table[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
    return static_cast<BucketCombo>(table[a][b]);
}

// Triples are referenced by reply id, which is unique per triple.
struct AnnotationPair {
    std::string pair_id;
    std::string left;
    std::string right;
    BucketCombo bucket_combo = BucketCombo::SS;

    bool operator==(const AnnotationPair&) const = default;
};

inline json to_json(const AnnotationPair& p) {
    return json{{"pair_id", p.pair_id}, {"left", p.left}, {"right", p.right}, {"bucket_combo", std::string(to_string(p.bucket_combo))}};
}

inline std::vector<AnnotationPair> parse_pairs(std::string_view jsonl) {
    std::vector<AnnotationPair> pairs;
    std::set<std::string> seen;
    for_each_jsonl(jsonl, [&](const json& obj, std::size_t line) {
        AnnotationPair p;
        p.pair_id = require_string(obj, "pair_id", line);
        p.left = require_string(obj, "left", line);
        p.right = require_string(obj, "right", line);
        p.bucket_combo = parse_bucket_combo(require_string(obj, "bucket_combo", line));
        if (p.left == p.right) throw Error(Errc::Schema, "pair compares a triple with itself", line);
        if (!seen.insert(p.pair_id).second) throw Error(Errc::DuplicateId, "pair id '" + p.pair_id + "'", line);
        pairs.push_back(std::move(p));
    });
    return pairs;
}

inline std::string pairs_to_jsonl(const std::vector<AnnotationPair>& pairs) {
    std::string out;
    for (const auto& p : pairs) out += to_json(p).dump() + "\n";
    return out;
}

// `per_combo` pairs for each requested bucket combination. The two triples
// of a pair are distinct; distinct pairs are preferred while the bucket
// population allows it. Side order is randomized by the seeded generator.
inline std::vector<AnnotationPair> sample_pairs(const std::vector<Triple>& triples, std::size_t per_combo, std::uint64_t seed,
                                                const std::vector<BucketCombo>& combos = {kAllCombos.begin(), kAllCombos.end()}) {
    if (per_combo == 0) throw Error(Errc::Config, "per_combo must be positive");
    std::array<std::vector<std::string>, 3> population;
    for (const auto& t : triples) population[static_cast<std::size_t>(length_bucket(t.followup_ids.size()))].push_back(t.reply_id);

    SeededRng rng(seed);
    std::vector<AnnotationPair> pairs;
    for (auto combo : combos) {
        const auto [first, second] = buckets_of(combo);
        const auto& pop_a = population[static_cast<std::size_t>(first)];
        const auto& pop_b = population[static_cast<std::size_t>(second)];
        const bool same = first == second;
        if ((same && pop_a.size() < 2) || pop_a.empty() || pop_b.empty()) {
            throw Error(Errc::InsufficientPopulation, "not enough triples for combination " + std::string(to_string(combo)));
        }
        const double distinct = same ? static_cast<double>(pop_a.size()) * static_cast<double>(pop_a.size() - 1) / 2.0
                                     : static_cast<double>(pop_a.size()) * static_cast<double>(pop_b.size());
        const bool require_distinct = distinct >= static_cast<double>(per_combo);
        std::set<std::pair<std::string, std::string>> used;
        for (std::size_t k = 0; k < per_combo; ++k) {
            std::string a, b;
            do {
                std::size_t ia = static_cast<std::size_t>(rng.below(pop_a.size()));
                std::size_t ib;
                if (same) {
                    ib = static_cast<std::size_t>(rng.below(pop_a.size() - 1));
                    if (ib >= ia) ++ib;
                } else {
                    ib = static_cast<std::size_t>(rng.below(pop_b.size()));
                }
                a = pop_a[ia];
                b = pop_b[ib];
            } while (require_distinct && used.count(std::minmax(a, b)));
            used.insert(std::minmax(a, b));
            if (rng.chance(0.5)) std::swap(a, b);
            char id[32];
            std::snprintf(id, sizeof id, "%s-%03zu", std::string(to_string(combo)).c_str(), k + 1);
            pairs.push_back(AnnotationPair{id, a, b, combo});
        }
    }
    return pairs;
}

struct PairJudgment {
    std::string pair_id;
    std::string annotator_id;
    PairChoice choice = PairChoice::Left;
    std::int64_t timestamp = 0;
};

inline PairChoice parse_binary_choice(std::string_view text, std::size_t line = 0) {
    if (text == "Left" || text == "left") return PairChoice::Left;
    if (text == "Right" || text == "right") return PairChoice::Right;
    throw Error(Errc::Schema, "choice must be Left or Right", line ? std::optional<std::size_t>(line) : std::nullopt);
}

inline std::vector<PairJudgment> parse_judgments(std::string_view jsonl) {
    std::vector<PairJudgment> out;
    for_each_jsonl(jsonl, [&](const json& obj, std::size_t line) {
        PairJudgment j;
        j.pair_id = require_string(obj, "pair_id", line);
        j.annotator_id = require_string(obj, "annotator_id", line);
        j.choice = parse_binary_choice(require_string(obj, "choice", line), line);
        if (obj.contains("timestamp") && obj["timestamp"].is_number_integer()) j.timestamp = obj["timestamp"].get<std::int64_t>();
        out.push_back(std::move(j));
    });
    return out;
}

inline json to_json(const PairJudgment& j) {
    return json{{"pair_id", j.pair_id}, {"annotator_id", j.annotator_id}, {"choice", std::string(to_string(j.choice))}, {"timestamp", j.timestamp}};
}

inline std::string judgments_to_jsonl(const std::vector<PairJudgment>& judgments) {
    std::string out;
    for (const auto& j : judgments) out += to_json(j).dump() + "\n";
    return out;
}

struct Adjudication {
    std::map<std::string, PairChoice> gold;
    std::vector<std::string> unresolved;
};

// Unanimous pairs keep their choice; split pairs take the override or are
// reported unresolved. When an annotator judged a pair more than once, the
// latest judgment in sequence is the active one.
inline Adjudication adjudicate(const std::vector<PairJudgment>& judgments, const std::map<std::string, PairChoice>& overrides = {}) {
    std::map<std::string, std::map<std::string, PairChoice>> active;
    for (const auto& j : judgments) active[j.pair_id][j.annotator_id] = j.choice;
    for (const auto& [pair_id, choice] : overrides) {
        if (!active.count(pair_id)) throw Error(Errc::UnknownPair, "override for pair '" + pair_id + "' without judgments");
        if (choice == PairChoice::Tie) throw Error(Errc::Schema, "override must be Left or Right");
    }
    Adjudication result;
    for (const auto& [pair_id, by_annotator] : active) {
        std::set<PairChoice> choices;
        for (const auto& [annotator, choice] : by_annotator) choices.insert(choice);
        if (choices.size() == 1) {
            result.gold[pair_id] = *choices.begin();
        } else if (auto it = overrides.find(pair_id); it != overrides.end()) {
            result.gold[pair_id] = it->second;
        } else {
            result.unresolved.push_back(pair_id);
        }
    }
    return result;
}

// Gold lines: {"pair_id", "choice"} with optional inline "left"/"right".
struct GoldRecord {
    std::string pair_id;
    PairChoice choice = PairChoice::Left;
    std::optional<std::string> left;
    std::optional<std::string> right;
};

inline std::vector<GoldRecord> parse_gold(std::string_view jsonl) {
    std::vector<GoldRecord> out;
    for_each_jsonl(jsonl, [&](const json& obj, std::size_t line) {
        GoldRecord g;
        g.pair_id = require_string(obj, "pair_id", line);
        g.choice = parse_binary_choice(require_string(obj, "choice", line), line);
        if (obj.contains("left")) g.left = require_string(obj, "left", line);
        if (obj.contains("right")) g.right = require_string(obj, "right", line);
        out.push_back(std::move(g));
    });
    return out;
}

inline std::string gold_to_jsonl(const std::map<std::string, PairChoice>& gold, const std::vector<AnnotationPair>& pairs = {}) {
    std::map<std::string, const AnnotationPair*> by_id;
    for (const auto& p : pairs) by_id[p.pair_id] = &p;
    std::string out;
    for (const auto& [pair_id, choice] : gold) {
        json j{{"pair_id", pair_id}, {"choice", std::string(to_string(choice))}};
        if (auto it = by_id.find(pair_id); it != by_id.end()) {
            j["left"] = it->second->left;
            j["right"] = it->second->right;
        }
        out += j.dump() + "\n";
    }
    return out;
}

// One gold pair with both conversations reduced to authored flags.
struct TuningItem {
    std::string pair_id;
    std::vector<AuthoredFlags> left;
    std::vector<AuthoredFlags> right;
    PairChoice gold = PairChoice::Left;
};

inline std::vector<TuningItem> build_tuning_items(const std::vector<GoldRecord>& gold, const std::vector<AnnotationPair>& pairs,
                                                  const std::vector<Triple>& triples, const ConversationForest& forest,
                                                  const ProfileIndex& profiles) {
    std::map<std::string, const Triple*> by_reply;
    for (const auto& t : triples) by_reply[t.reply_id] = &t;
    std::map<std::string, const AnnotationPair*> by_pair;
    for (const auto& p : pairs) by_pair[p.pair_id] = &p;
    auto lookup = [&](const std::string& reply_id) -> const Triple& {
        auto it = by_reply.find(reply_id);
        if (it == by_reply.end()) throw Error(Errc::UnknownPair, "no triple with reply '" + reply_id + "'");
        return *it->second;
    };
    std::vector<TuningItem> items;
    for (const auto& g : gold) {
        std::string left, right;
        if (g.left && g.right) {
            left = *g.left;
            right = *g.right;
        } else if (auto it = by_pair.find(g.pair_id); it != by_pair.end()) {
            left = it->second->left;
            right = it->second->right;
        } else {
            throw Error(Errc::UnknownPair, "gold pair '" + g.pair_id + "' has no pair definition");
        }
        items.push_back(TuningItem{g.pair_id, followup_flags(lookup(left), forest, profiles),
                                   followup_flags(lookup(right), forest, profiles), g.choice});
    }
    return items;
}

struct GridOptions {
    double alpha_step = 0.05;
    std::vector<Aggregation> f_choices{Aggregation::Sqrt};
    NeutralMode neutral = NeutralMode::Selected;
    unsigned jobs = 1;
};

struct TuneResult {
    MetricConfig config;
    int alpha_index = 0;  // alpha = alpha_index * step
    int beta_index = 0;
    double kappa = 0.0;
    double accuracy = 0.0;
    std::size_t tie_count = 0;
};

// Ordering key: kappa descending, fewer ties, then (antisocial bits,
// prosocial bits, alpha, beta, f) ascending.
inline bool tune_result_before(const TuneResult& a, const TuneResult& b) {
    if (a.kappa != b.kappa) return a.kappa > b.kappa;
    if (a.tie_count != b.tie_count) return a.tie_count < b.tie_count;
    return std::make_tuple(a.config.antisocial.bits(), a.config.prosocial.bits(), a.alpha_index, a.beta_index, static_cast<int>(a.config.f)) <
           std::make_tuple(b.config.antisocial.bits(), b.config.prosocial.bits(), b.alpha_index, b.beta_index, static_cast<int>(b.config.f));
}

inline int lattice_steps(double alpha_step) {
    if (!(alpha_step > 0.0 && alpha_step <= 1.0)) throw Error(Errc::Config, "alpha step must lie in (0,1]");
    const double steps = 1.0 / alpha_step;
    const double rounded = std::round(steps);
    if (std::fabs(steps - rounded) > 1e-9) throw Error(Errc::Config, "alpha step must divide 1");
    return static_cast<int>(rounded);
}

// All (alpha, beta) index pairs with alpha + beta <= 1.
inline std::vector<std::pair<int, int>> weight_lattice(double alpha_step) {
    const int steps = lattice_steps(alpha_step);
    std::vector<std::pair<int, int>> points;
    for (int a = 0; a <= steps; ++a) {
        for (int b = 0; a + b <= steps; ++b) points.emplace_back(a, b);
    }
    return points;
}

// The 255 (antisocial subset, prosocial subset) combinations with at least
// one dimension selected.
inline std::vector<std::pair<DimensionSet, DimensionSet>> subset_combinations() {
    std::vector<std::pair<DimensionSet, DimensionSet>> out;
    for (unsigned anti = 0; anti < 16; ++anti) {
        for (unsigned pro = 0; pro < 16; ++pro) {
            if (anti == 0 && pro == 0) continue;
            out.emplace_back(DimensionSet(static_cast<std::uint8_t>(anti)), DimensionSet(static_cast<std::uint8_t>(pro << 4)));
        }
    }
    return out;
}

inline std::vector<MetricConfig> enumerate_grid(const GridOptions& options, std::vector<std::pair<int, int>>* indices = nullptr) {
    const int steps = lattice_steps(options.alpha_step);
    std::vector<MetricConfig> configs;
    for (auto f : options.f_choices) {
        for (const auto& [anti, pro] : subset_combinations()) {
            for (const auto& [a, b] : weight_lattice(options.alpha_step)) {
                MetricConfig c;
                c.antisocial = anti;
                c.prosocial = pro;
                c.alpha = static_cast<double>(a) / steps;
                c.beta = static_cast<double>(b) / steps;
                c.f = f;
                c.neutral = options.neutral;
                configs.push_back(c);
                if (indices) indices->emplace_back(a, b);
            }
        }
    }
    return configs;
}

// Pairwise decisions of one configuration over precomputed component tables.
inline std::vector<PairChoice> decide(const std::vector<std::pair<ComponentTable, ComponentTable>>& tables, const MetricConfig& config) {
    std::vector<PairChoice> out;
    out.reserve(tables.size());
    for (const auto& [left, right] : tables) out.push_back(compare_pair(left.score(config), right.score(config)));
    return out;
}

inline std::vector<PairChoice> decide(const std::vector<TuningItem>& items, const MetricConfig& config) {
    std::vector<PairChoice> out;
    out.reserve(items.size());
    for (const auto& item : items) {
        auto l = incivility_score(dimension_counts(std::span<const AuthoredFlags>(item.left), config), config);
        auto r = incivility_score(dimension_counts(std::span<const AuthoredFlags>(item.right), config), config);
        out.push_back(compare_pair(l, r));
    }
    return out;
}

// Kappa of metric decisions against gold; ties never match a gold label.
inline TuneResult evaluate_decisions(const std::vector<PairChoice>& decisions, const std::vector<PairChoice>& gold) {
    TuneResult r;
    r.kappa = stats::cohen_kappa(decisions, gold).statistic;
    r.accuracy = stats::raw_agreement(decisions, gold);
    r.tie_count = static_cast<std::size_t>(std::count(decisions.begin(), decisions.end(), PairChoice::Tie));
    return r;
}

inline std::vector<TuneResult> grid_search(const std::vector<TuningItem>& items, const GridOptions& options = {}) {
    if (items.empty()) throw Error(Errc::InsufficientData, "grid search needs at least one gold pair");
    std::vector<PairChoice> gold;
    for (const auto& item : items) gold.push_back(item.gold);

    // Component sums depend only on (conversation, f), never on the config.
    std::map<Aggregation, std::vector<std::pair<ComponentTable, ComponentTable>>> tables;
    for (auto f : options.f_choices) {
        auto& row = tables[f];
        for (const auto& item : items) {
            row.emplace_back(ComponentTable::build(item.left, f), ComponentTable::build(item.right, f));
        }
    }

    std::vector<std::pair<int, int>> indices;
    const auto configs = enumerate_grid(options, &indices);
    std::vector<TuneResult> results(configs.size());
    auto work = [&](std::size_t begin, std::size_t stride) {
        for (std::size_t i = begin; i < configs.size(); i += stride) {
            TuneResult r = evaluate_decisions(decide(tables.at(configs[i].f), configs[i]), gold);
            r.config = configs[i];
            r.alpha_index = indices[i].first;
            r.beta_index = indices[i].second;
            results[i] = r;
        }
    };
    const unsigned jobs = std::max(1u, options.jobs);
    if (jobs == 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(work, t, jobs);
        for (auto& th : pool) th.join();
    }
    std::sort(results.begin(), results.end(), tune_result_before);
    return results;
}

inline std::string tune_results_to_csv(const std::vector<TuneResult>& results, std::size_t limit = 0) {
    std::string out = csv_row({"antisocial_dims", "prosocial_dims", "alpha", "beta", "f", "kappa", "accuracy", "tie_count"});
    const std::size_t n = limit ? std::min(limit, results.size()) : results.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = results[i];
        out += csv_row({r.config.antisocial.label(), r.config.prosocial.label(), format_fixed(r.config.alpha, 2),
                        format_fixed(r.config.beta, 2), std::string(to_string(r.config.f)), format_fixed(r.kappa, 6),
                        format_fixed(r.accuracy, 6), std::to_string(r.tie_count)});
    }
    return out;
}

// Best kappa over (alpha, beta, f) for each (antisocial subset, prosocial
// subset) cell; rows are antisocial subsets, columns prosocial subsets.
inline std::string kappa_matrix_csv(const std::vector<TuneResult>& results) {
    std::map<std::pair<std::uint8_t, std::uint8_t>, double> best;
    for (const auto& r : results) {
        auto key = std::make_pair(r.config.antisocial.bits(), r.config.prosocial.bits());
        auto it = best.find(key);
        if (it == best.end() || r.kappa > it->second) best[key] = r.kappa;
    }
    std::vector<std::string> header{"antisocial\\prosocial"};
    for (unsigned pro = 0; pro < 16; ++pro) header.push_back(DimensionSet(static_cast<std::uint8_t>(pro << 4)).label());
    std::string out = csv_row(header);
    for (unsigned anti = 0; anti < 16; ++anti) {
        std::vector<std::string> row{DimensionSet(static_cast<std::uint8_t>(anti)).label()};
        for (unsigned pro = 0; pro < 16; ++pro) {
            auto it = best.find({static_cast<std::uint8_t>(anti), static_cast<std::uint8_t>(pro << 4)});
            row.push_back(it == best.end() ? "NA" : format_fixed(it->second, 4));
        }
        out += csv_row(row);
    }
    return out;
}

}  // namespace incivility
