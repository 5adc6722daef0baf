#pragma once
// Stage functions behind the command-line tool. Each stage takes parsed
// inputs and returns artifact text, so a stage run from the CLI and the same
// stage run in-process produce the same bytes.

#include "incivility/analytics.hpp"
#include "incivility/behavior.hpp"
#include "incivility/corpus.hpp"
#include "incivility/error.hpp"
#include "incivility/labeler.hpp"
#include "incivility/metric.hpp"
#include "incivility/service.hpp"
#include "incivility/stats.hpp"
#include "incivility/synth.hpp"
#include "incivility/tuner.hpp"
#include "incivility/util.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace incivility {

// Artifact name -> content; names are relative paths under the output dir.
using Artifacts = std::map<std::string, std::string>;

inline void write_artifacts(const Artifacts& artifacts, const std::filesystem::path& out_dir) {
    for (const auto& [name, content] : artifacts) write_file(out_dir / name, content);
}

inline unsigned default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

inline json to_json(const stats::TestResult& r) {
    json j{{"statistic", r.statistic}, {"p_value", r.p_value}};
    j["df"] = r.degrees_of_freedom ? json(*r.degrees_of_freedom) : json(nullptr);
    return j;
}

// ---------------------------------------------------------------------------
// ingest / profile

inline ConversationForest load_forest(std::string_view posts_jsonl) { return build_forest(parse_posts(posts_jsonl)); }

inline std::string ingest_stage(const ConversationForest& forest, const std::set<std::string>& markers = default_moderation_markers()) {
    return triples_to_jsonl(extract_triples(forest, markers));
}

struct ProfileOptions {
    Thresholds8 thresholds = default_thresholds();
    bool norm_violation_from_body = true;  // a4 from the moderation markers when the post is known
};

inline std::vector<BehaviorProfile> profile_from_scores(std::string_view scores_jsonl, const ConversationForest* forest,
                                                       const ProfileOptions& options = {}) {
    IngestOptions ingest;
    ingest.thresholds = options.thresholds;
    ingest.norm_violation_source = options.norm_violation_from_body ? forest : nullptr;
    return ingest_scores(parse_score_records(scores_jsonl), ingest);
}

inline std::vector<BehaviorProfile> profile_from_lexicon(const ConversationForest& forest, const Lexicon& lexicon,
                                                        const ProfileOptions& options = {}) {
    std::vector<BehaviorProfile> out;
    for (const auto& [id, post] : forest.posts()) {
        auto p = lexicon_annotate(post, lexicon);
        if (options.norm_violation_from_body) p[Dimension::NormViolation] = annotate_norm_violation(post);
        out.push_back(std::move(p));
    }
    return out;
}

// ---------------------------------------------------------------------------
// score

struct ScoredTriple {
    const Triple* triple = nullptr;
    IncivilityScore score;
};

inline std::vector<ScoredTriple> score_stage(const std::vector<Triple>& triples, const ConversationForest& forest,
                                             const ProfileIndex& profiles, const MetricConfig& config, unsigned jobs = 1) {
    config.validate();
    std::vector<ScoredTriple> out(triples.size());
    std::vector<std::optional<Error>> failures(std::max(1u, jobs));
    auto work = [&](unsigned begin, unsigned stride) {
        try {
            for (std::size_t i = begin; i < triples.size(); i += stride) {
                out[i] = ScoredTriple{&triples[i], score_triple(triples[i], forest, profiles, config)};
            }
        } catch (const Error& e) {
            failures[begin] = e;
        }
    };
    if (jobs <= 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(work, t, jobs);
        for (auto& th : pool) th.join();
    }
    for (const auto& f : failures) {
        if (f) throw *f;
    }
    return out;
}

inline std::string scores_to_jsonl(const std::vector<ScoredTriple>& scored) {
    std::string out;
    for (const auto& s : scored) out += score_to_json(s.triple->reply_id, s.score).dump() + "\n";
    return out;
}

// Scores file back into (reply_id -> S).
inline std::map<std::string, IncivilityScore> parse_scores(std::string_view jsonl) {
    std::map<std::string, IncivilityScore> out;
    for_each_jsonl(jsonl, [&](const json& obj, std::size_t line) {
        IncivilityScore s;
        for (auto [key, field] : {std::pair{"A", &s.A}, {"P", &s.P}, {"N", &s.N}, {"S", &s.S}}) {
            if (!obj.contains(key) || !obj[key].is_number()) throw Error(Errc::Schema, std::string("missing numeric field '") + key + "'", line);
            *field = obj[key].get<double>();
        }
        if (!out.emplace(require_string(obj, "reply_id", line), s).second) throw Error(Errc::DuplicateId, "duplicate reply_id", line);
    });
    return out;
}

// ---------------------------------------------------------------------------
// label / export

struct LabelOptions {
    std::optional<Thresholds> thresholds;  // fixed thresholds win over quantiles
    double q_low = 0.25;
    double q_high = 0.75;
};

struct LabelOutcome {
    Thresholds thresholds;
    std::vector<LabeledTriple> labeled;
};

inline LabelOutcome label_stage(const std::vector<Triple>& triples, const std::map<std::string, IncivilityScore>& scores,
                                const LabelOptions& options = {}) {
    LabelOutcome out;
    std::vector<double> values;
    for (const auto& t : triples) {
        auto it = scores.find(t.reply_id);
        if (it == scores.end()) throw Error(Errc::MissingProfile, "no score for reply '" + t.reply_id + "'");
        values.push_back(it->second.S);
    }
    out.thresholds = options.thresholds ? *options.thresholds : quantile_thresholds(values, options.q_low, options.q_high);
    for (const auto& t : triples) {
        const auto& s = scores.at(t.reply_id);
        out.labeled.push_back(LabeledTriple{t.reply_id, t.hateful_post_id, s, assign_label(s.S, out.thresholds)});
    }
    return out;
}

inline std::string labeled_to_jsonl(const std::vector<LabeledTriple>& labeled) {
    std::string out;
    for (const auto& l : labeled) out += to_json(l).dump() + "\n";
    return out;
}

inline Artifacts export_stage(const std::vector<LabeledTriple>& labeled, const ConversationForest& forest, const SplitRatios& ratios,
                              std::uint64_t seed) {
    const auto split = split_dataset(labeled, ratios, seed);
    Artifacts out;
    out["train.jsonl"] = export_records(split.train, forest);
    out["validation.jsonl"] = export_records(split.validation, forest);
    out["test.jsonl"] = export_records(split.test, forest);
    std::vector<IncivilityLabel> gold;
    for (const auto& r : split.test) gold.push_back(r.label);
    out["baseline_report.csv"] = report_to_csv(baseline_report(gold));
    return out;
}

// ---------------------------------------------------------------------------
// analyze

inline TextResources load_resources(const std::filesystem::path& dir) {
    TextResources res;
    if (auto p = dir / "pronouns.json"; std::filesystem::exists(p)) load_pronouns(res, read_file(p));
    if (auto p = dir / "negation_cues.txt"; std::filesystem::exists(p)) load_negation_cues(res, read_file(p));
    if (auto p = dir / "sentiment_lexicon.json"; std::filesystem::exists(p)) load_sentiment_lexicon(res, read_file(p));
    return res;
}

struct AnalyzeOptions {
    double family_alpha = 0.05;
    bool equal_variance = false;
    DiffMode diff_mode = DiffMode::Signed;
};

namespace detail {

inline std::string test_row(std::string_view name, std::size_t n, const stats::TestResult& r) {
    return csv_row({std::string(name), std::to_string(n), format_fixed(r.statistic, 6),
                    r.degrees_of_freedom ? format_fixed(*r.degrees_of_freedom, 3) : "NA", format_fixed(r.p_value, 8)});
}

}  // namespace detail

// Every analysis that lacks data is listed under "skipped" in
// analysis_summary.json instead of aborting the stage.
inline Artifacts analyze_stage(const ConversationForest& forest, const std::vector<Triple>& triples, const ProfileIndex& profiles,
                               const std::vector<LabeledTriple>* labeled, const TextResources& res, const AnalyzeOptions& options = {}) {
    Artifacts out;
    json summary{{"family_alpha", options.family_alpha}, {"skipped", json::object()}};
    auto attempt = [&](const std::string& name, auto&& body) {
        try {
            body();
        } catch (const Error& e) {
            if (e.code() != Errc::InsufficientData && e.code() != Errc::DegenerateVariance) throw;
            summary["skipped"][name] = e.what();
        }
    };

    // Antisocial vs prosocial follow-up posts.
    attempt("linguistic_anti_pro", [&] {
        std::vector<FeatureVector> anti, pro;
        std::size_t both = 0;  // counted in both groups
        std::set<std::string> seen;
        for (const auto& t : triples) {
            for (const auto& id : t.followup_ids) {
                if (!seen.insert(id).second) continue;
                auto it = profiles.find(id);
                if (it == profiles.end()) throw Error(Errc::MissingProfile, "no behavior profile for follow-up post '" + id + "'");
                const auto cls = coarse_class(it->second);
                both += cls == CoarseClass::Both;
                if (counts_as_antisocial(cls)) anti.push_back(extract_features(forest.post(id).body, res));
                if (counts_as_prosocial(cls)) pro.push_back(extract_features(forest.post(id).body, res));
            }
        }
        const auto rows = group_compare(anti, pro, options.family_alpha, behavior_contrast_features(), options.equal_variance);
        out["linguistic_anti_pro.csv"] = group_comparison_csv(rows, "antisocial-vs-prosocial");
        summary["linguistic_anti_pro"] = {{"antisocial_posts", anti.size()}, {"prosocial_posts", pro.size()}, {"both_posts", both}};
    });

    // Replies (and hateful posts) by the label of the conversation that follows.
    if (labeled) {
        std::map<IncivilityLabel, std::vector<FeatureVector>> replies, hates;
        for (const auto& l : *labeled) {
            replies[l.label].push_back(extract_features(forest.post(l.reply_id).body, res));
            if (!l.hateful_post_id.empty()) hates[l.label].push_back(extract_features(forest.post(l.hateful_post_id).body, res));
        }
        std::string csv;
        const std::pair<IncivilityLabel, IncivilityLabel> contrasts[] = {{IncivilityLabel::High, IncivilityLabel::Medium},
                                                                          {IncivilityLabel::Low, IncivilityLabel::Medium},
                                                                          {IncivilityLabel::High, IncivilityLabel::Low}};
        for (const auto& [source, groups] : {std::pair{"reply", &replies}, {"hate", &hates}}) {
            for (const auto& [a, b] : contrasts) {
                const std::string name = std::string(source) + ":" + std::string(to_string(a)) + "-vs-" + std::string(to_string(b));
                attempt(name, [&] {
                    auto rows = group_compare((*groups)[a], (*groups)[b], options.family_alpha, all_features(), options.equal_variance);
                    std::string part = group_comparison_csv(rows, name);
                    csv += csv.empty() ? part : part.substr(part.find('\n') + 1);
                });
            }
        }
        if (!csv.empty()) out["conversational_outcomes.csv"] = csv;
    }

    attempt("reengagement", [&] {
        const auto users = reengagement_rates(forest, triples, profiles);
        std::string csv = csv_row({"user_id", "antisocial_received", "prosocial_received", "anti_anywhere", "anti_immediate",
                                   "pro_anywhere", "pro_immediate"});
        for (const auto& u : users) {
            csv += csv_row({u.user_id, std::to_string(u.antisocial_received), std::to_string(u.prosocial_received),
                            format_fixed(u.rate_after_antisocial_anywhere, 6), format_fixed(u.rate_after_antisocial_immediate, 6),
                            format_fixed(u.rate_after_prosocial_anywhere, 6), format_fixed(u.rate_after_prosocial_immediate, 6)});
        }
        out["reengagement_users.csv"] = csv;
        const auto result = reengagement(forest, triples, profiles);
        out["reengagement_tests.csv"] = csv_row({"test", "n", "t", "df", "p"}) +
                                        detail::test_row("anywhere", result.users.size(), result.anywhere) +
                                        detail::test_row("immediate", result.users.size(), result.immediate);
    });

    attempt("multiturn_symmetry", [&] {
        const auto pairs = collect_pair_stats(forest, triples, profiles, options.diff_mode);
        std::string csv = csv_row({"u", "v", "posts_u_to_v", "posts_v_to_u", "pct_anti_u", "pct_pro_u", "pct_anti_v", "pct_pro_v",
                                   "anti_diff", "pro_diff", "final_diff"});
        for (const auto& p : pairs) {
            csv += csv_row({p.u, p.v, std::to_string(p.posts_u_to_v), std::to_string(p.posts_v_to_u), format_fixed(p.pct_anti_u, 6),
                            format_fixed(p.pct_pro_u, 6), format_fixed(p.pct_anti_v, 6), format_fixed(p.pct_pro_v, 6),
                            format_fixed(p.anti_diff, 6), format_fixed(p.pro_diff, 6), format_fixed(p.final_diff, 6)});
        }
        out["multiturn_pairs.csv"] = csv;
        out["multiturn_symmetry.csv"] = csv_row({"test", "n", "t", "df", "p"}) + detail::test_row("final_diff", pairs.size(), symmetry_test(pairs));
    });

    attempt("multiturn_frequency", [&] {
        const auto freq = multiturn_frequency(forest, triples, profiles);
        json j{{"conversations", freq.conversations},
               {"antisocial_share_all", freq.antisocial_share_all},
               {"prosocial_share_all", freq.prosocial_share_all}};
        j["test"] = freq.test ? to_json(*freq.test) : json(nullptr);
        summary["multiturn_frequency"] = j;
    });

    out["analysis_summary.json"] = summary.dump(2) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// correlate / tune / report

inline std::string correlate_stage(const std::vector<BehaviorProfile>& profiles) { return correlation_to_csv(correlation_matrix(profiles)); }

inline Artifacts tune_stage(const std::vector<TuningItem>& items, const GridOptions& options, std::size_t top = 0) {
    const auto results = grid_search(items, options);
    Artifacts out;
    out["tune.csv"] = tune_results_to_csv(results, top);
    out["kappa_matrix.csv"] = kappa_matrix_csv(results);
    out["best_metric.json"] = to_json(results.front().config).dump(2) + "\n";
    return out;
}

// Agreement, active judgments and gold from a session log alone.
inline Artifacts report_stage(const std::vector<AnnotationPair>& pairs, const std::filesystem::path& log_path) {
    if (!std::filesystem::exists(log_path)) throw Error(Errc::Io, "no session log at " + log_path.string());
    std::vector<AnnotationTask> tasks;
    for (const auto& p : pairs) tasks.push_back(AnnotationTask{p.pair_id, 0, 0, p.bucket_combo, {}, {}});
    AnnotationSession session("report", std::move(tasks), log_path, [] { return std::int64_t{0}; });
    Artifacts out;
    out["judgments.jsonl"] = judgments_to_jsonl(session.active_judgments());
    const auto adj = session.gold();
    out["gold.jsonl"] = gold_to_jsonl(adj.gold, pairs);
    json unresolved = adj.unresolved;
    out["unresolved.json"] = unresolved.dump() + "\n";
    try {
        out["agreement.json"] = to_json(session.agreement_report()).dump(2) + "\n";
    } catch (const Error& e) {
        if (e.code() != Errc::InsufficientData) throw;
        out["agreement.json"] = json{{"error", e.what()}}.dump(2) + "\n";
    }
    out["progress.json"] = to_json(session.progress()).dump(2) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Whole pipeline over one corpus, used for the determinism check and the
// bundled demo.

struct PipelineConfig {
    std::string posts_jsonl;
    std::string scores_jsonl;
    TextResources resources;
    MetricConfig metric = reference_config();
    LabelOptions labels{reference_thresholds()};
    SplitRatios ratios;
    std::uint64_t seed = 13;
    std::size_t pairs_per_combo = 10;
    double annotator_flip = 0.1;
    double family_alpha = 0.05;
    unsigned jobs = 1;
};

inline Artifacts run_pipeline(const PipelineConfig& config) {
    Artifacts out;
    const auto forest = load_forest(config.posts_jsonl);
    out["triples.jsonl"] = ingest_stage(forest);
    const auto triples = parse_triples(out["triples.jsonl"]);

    const auto profile_list = profile_from_scores(config.scores_jsonl, &forest);
    out["profiles.jsonl"] = profiles_to_jsonl(profile_list);
    const auto profiles = index_profiles(profile_list);
    out["correlation.csv"] = correlate_stage(profile_list);

    out["scores.jsonl"] = scores_to_jsonl(score_stage(triples, forest, profiles, config.metric, config.jobs));
    const auto labels = label_stage(triples, parse_scores(out["scores.jsonl"]), config.labels);
    out["labeled.jsonl"] = labeled_to_jsonl(labels.labeled);
    out["thresholds.json"] = to_json(labels.thresholds).dump(2) + "\n";
    for (auto& [name, content] : export_stage(labels.labeled, forest, config.ratios, config.seed)) out["export/" + name] = content;

    AnalyzeOptions analyze;
    analyze.family_alpha = config.family_alpha;
    for (auto& [name, content] : analyze_stage(forest, triples, profiles, &labels.labeled, config.resources, analyze)) {
        out["analysis/" + name] = content;
    }

    // Annotation round with simulated annotators, then the grid search.
    const auto pairs = sample_pairs(triples, config.pairs_per_combo, config.seed);
    out["pairs.jsonl"] = pairs_to_jsonl(pairs);
    std::vector<GoldRecord> all_pairs;
    for (const auto& p : pairs) all_pairs.push_back(GoldRecord{p.pair_id, PairChoice::Left, p.left, p.right});
    const auto raw_items = build_tuning_items(all_pairs, pairs, triples, forest, profiles);
    const auto judgments = synth::simulate_judgments(raw_items, reference_config(), {"ann1", "ann2"}, config.annotator_flip, config.seed);
    out["judgments.jsonl"] = judgments_to_jsonl(judgments);

    // Disagreements are settled in favour of the first annotator.
    std::map<std::string, PairChoice> overrides;
    for (const auto& j : judgments) {
        if (j.annotator_id == "ann1") overrides[j.pair_id] = j.choice;
    }
    auto adj = adjudicate(judgments);
    for (const auto& id : adj.unresolved) adj.gold[id] = overrides.at(id);
    out["gold.jsonl"] = gold_to_jsonl(adj.gold, pairs);

    GridOptions grid;
    grid.jobs = config.jobs;
    const auto items = build_tuning_items(parse_gold(out["gold.jsonl"]), pairs, triples, forest, profiles);
    for (auto& [name, content] : tune_stage(items, grid, 50)) out["tune/" + name] = content;
    return out;
}

}  // namespace incivility
