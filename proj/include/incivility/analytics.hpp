#pragma once
// Linguistic features and user-interaction analyses of follow-up
// conversations, each reduced to a t-test from incivility::stats.

#include "incivility/behavior.hpp"
#include "incivility/corpus.hpp"
#include "incivility/error.hpp"
#include "incivility/stats.hpp"
#include "incivility/util.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace incivility {

enum class Sentiment : std::uint8_t { Disgust, Sadness, Negative, Positive, Happiness, Gratitude, Hostile, Anger };

inline constexpr std::size_t kSentimentCount = 8;

inline std::string_view to_string(Sentiment s) {
    static constexpr std::array<std::string_view, kSentimentCount> names{"disgust", "sadness",   "negative", "positive",
                                                                         "happiness", "gratitude", "hostile",  "anger"};
    return names[static_cast<std::size_t>(s)];
}

inline std::optional<Sentiment> parse_sentiment(std::string_view name) {
    for (std::size_t i = 0; i < kSentimentCount; ++i) {
        auto s = static_cast<Sentiment>(i);
        if (to_string(s) == name) return s;
    }
    return std::nullopt;
}

struct TextResources {
    std::set<std::string> first_pronouns{"i", "me", "my", "mine", "myself", "we", "us", "our", "ours", "ourselves"};
    std::set<std::string> second_pronouns{"you", "your", "yours", "yourself", "yourselves"};
    std::set<std::string> negation_cues;
    std::map<std::string, std::set<Sentiment>> sentiment;
};

// {"first": [...], "second": [...]}
inline void load_pronouns(TextResources& res, std::string_view text) {
    json j = json::parse(text.begin(), text.end(), nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(Errc::Parse, "pronoun file must be a JSON object");
    auto read = [&](const char* key, std::set<std::string>& into) {
        if (!j.contains(key)) return;
        if (!j[key].is_array()) throw Error(Errc::Schema, std::string("pronoun list '") + key + "' must be an array");
        into.clear();
        for (const auto& w : j[key]) into.insert(to_lower_ascii(w.get<std::string>()));
    };
    read("first", res.first_pronouns);
    read("second", res.second_pronouns);
}

// One cue per line; blank lines and lines starting with '#' are skipped.
inline void load_negation_cues(TextResources& res, std::string_view text) {
    res.negation_cues.clear();
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = trim(text.substr(pos, end - pos));
        if (!line.empty() && line.front() != '#') res.negation_cues.insert(to_lower_ascii(line));
        if (end == text.size()) break;
        pos = end + 1;
    }
}

// {"term": ["category", ...], ...}
inline void load_sentiment_lexicon(TextResources& res, std::string_view text) {
    json j = json::parse(text.begin(), text.end(), nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(Errc::Parse, "sentiment lexicon must be a JSON object");
    res.sentiment.clear();
    for (const auto& [term, cats] : j.items()) {
        if (!cats.is_array()) throw Error(Errc::Schema, "sentiment entry '" + term + "' must list categories");
        for (const auto& c : cats) {
            auto s = c.is_string() ? parse_sentiment(c.get<std::string>()) : std::nullopt;
            if (!s) throw Error(Errc::Schema, "unknown sentiment category in entry '" + term + "'");
            res.sentiment[to_lower_ascii(term)].insert(*s);
        }
    }
}

struct FeatureVector {
    std::size_t first_pronouns = 0;
    std::size_t second_pronouns = 0;
    std::size_t tokens = 0;
    std::size_t negation_cues = 0;
    std::size_t question_marks = 0;
    std::size_t quotations = 0;
    std::array<std::size_t, kSentimentCount> sentiment{};

    std::size_t sentiment_count(Sentiment s) const { return sentiment[static_cast<std::size_t>(s)]; }
};

enum class Feature : std::uint8_t {
    FirstPronouns, SecondPronouns, Tokens, NegationCues, QuestionMarks, Quotations,
    Disgust, Sadness, Negative, Positive, Happiness, Gratitude, Hostile, Anger,
};

inline constexpr std::size_t kFeatureCount = 14;

inline std::vector<Feature> all_features() {
    std::vector<Feature> out;
    for (std::size_t i = 0; i < kFeatureCount; ++i) out.push_back(static_cast<Feature>(i));
    return out;
}

// The 13-feature family used when contrasting antisocial and prosocial posts
// (quotations are not part of it).
inline std::vector<Feature> behavior_contrast_features() {
    auto out = all_features();
    out.erase(std::remove(out.begin(), out.end(), Feature::Quotations), out.end());
    return out;
}

inline std::string_view to_string(Feature f) {
    static constexpr std::array<std::string_view, kFeatureCount> names{
        "first_pronouns", "second_pronouns", "tokens",   "negation_cues", "question_marks", "quotations", "disgust",
        "sadness",        "negative",        "positive", "happiness",     "gratitude",      "hostile",    "anger"};
    return names[static_cast<std::size_t>(f)];
}

inline double feature_value(const FeatureVector& v, Feature f) {
    switch (f) {
    case Feature::FirstPronouns: return static_cast<double>(v.first_pronouns);
    case Feature::SecondPronouns: return static_cast<double>(v.second_pronouns);
    case Feature::Tokens: return static_cast<double>(v.tokens);
    case Feature::NegationCues: return static_cast<double>(v.negation_cues);
    case Feature::QuestionMarks: return static_cast<double>(v.question_marks);
    case Feature::Quotations: return static_cast<double>(v.quotations);
    default: return static_cast<double>(v.sentiment[static_cast<std::size_t>(f) - static_cast<std::size_t>(Feature::Disgust)]);
    }
}

// Word counts come from the shared tokenizer; question marks and quotations
// (straight double quotes plus lines opening with '>') from the raw text.
inline FeatureVector extract_features(std::string_view text, const TextResources& res) {
    FeatureVector v;
    for (const auto& tok : tokenize(text)) {
        ++v.tokens;
        if (res.first_pronouns.count(tok)) ++v.first_pronouns;
        if (res.second_pronouns.count(tok)) ++v.second_pronouns;
        if (res.negation_cues.count(tok)) ++v.negation_cues;
        if (auto it = res.sentiment.find(tok); it != res.sentiment.end()) {
            for (auto s : it->second) ++v.sentiment[static_cast<std::size_t>(s)];
        }
    }
    bool line_start = true;
    for (char c : text) {
        if (c == '?') ++v.question_marks;
        if (c == '"') ++v.quotations;
        if (line_start && c == '>') ++v.quotations;
        line_start = c == '\n';
    }
    return v;
}

struct GroupComparison {
    Feature feature = Feature::Tokens;
    double mean_a = 0.0;
    double mean_b = 0.0;
    std::optional<stats::TestResult> test;  // empty when the feature is untestable
    bool significant_after_bonferroni = false;
    std::optional<stats::Direction> direction;  // set only when significant
};

// Unpaired (Welch) t-test per feature with Bonferroni over the testable features.
inline std::vector<GroupComparison> group_compare(std::span<const FeatureVector> group_a, std::span<const FeatureVector> group_b,
                                                  double family_alpha = 0.05, const std::vector<Feature>& features = all_features(),
                                                  bool equal_variance = false) {
    if (group_a.size() < 2 || group_b.size() < 2) throw Error(Errc::InsufficientData, "each group needs at least two vectors");
    std::vector<GroupComparison> out;
    std::vector<double> p_values;
    std::vector<std::size_t> testable;
    for (auto f : features) {
        std::vector<double> a, b;
        for (const auto& v : group_a) a.push_back(feature_value(v, f));
        for (const auto& v : group_b) b.push_back(feature_value(v, f));
        GroupComparison c;
        c.feature = f;
        c.mean_a = stats::mean(a);
        c.mean_b = stats::mean(b);
        try {
            c.test = stats::t_test(stats::TTestKind::Unpaired, a, b, {equal_variance, 0.0});
            testable.push_back(out.size());
            p_values.push_back(c.test->p_value);
        } catch (const Error& e) {
            if (e.code() != Errc::DegenerateVariance) throw;
        }
        out.push_back(c);
    }
    const auto flags = stats::bonferroni(p_values, family_alpha);
    for (std::size_t k = 0; k < testable.size(); ++k) {
        auto& c = out[testable[k]];
        c.significant_after_bonferroni = flags[k];
        if (flags[k]) c.direction = c.test->direction;
    }
    return out;
}

inline std::string_view direction_label(const std::optional<stats::Direction>& d) {
    if (!d) return "";
    return *d == stats::Direction::FirstHigher ? "first_higher" : "second_higher";
}

inline std::string group_comparison_csv(const std::vector<GroupComparison>& rows, std::string_view comparison = "") {
    std::string out = csv_row({"comparison", "feature", "mean_a", "mean_b", "t", "df", "p", "significant", "direction"});
    for (const auto& r : rows) {
        out += csv_row({std::string(comparison), std::string(to_string(r.feature)), format_fixed(r.mean_a, 6), format_fixed(r.mean_b, 6),
                        r.test ? format_fixed(r.test->statistic, 6) : "NA",
                        r.test && r.test->degrees_of_freedom ? format_fixed(*r.test->degrees_of_freedom, 3) : "NA",
                        r.test ? format_fixed(r.test->p_value, 8) : "NA", r.significant_after_bonferroni ? "true" : "false",
                        std::string(direction_label(r.direction))});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Re-engagement

struct ReengagementStats {
    std::string user_id;
    std::size_t antisocial_received = 0;
    std::size_t prosocial_received = 0;
    double rate_after_antisocial_anywhere = 0.0;
    double rate_after_antisocial_immediate = 0.0;
    double rate_after_prosocial_anywhere = 0.0;
    double rate_after_prosocial_immediate = 0.0;
};

struct ReengagementResult {
    std::vector<ReengagementStats> users;
    stats::TestResult anywhere;   // paired: antisocial rate vs prosocial rate
    stats::TestResult immediate;
};

// A user receives a follow-up post when it directly replies to one of their
// posts (self-replies excluded). After a received post the user re-engages
// "anywhere" if they author any post in the subthread below it, and
// "immediately" if they author a direct reply to it. Only users who received
// both antisocial and prosocial posts are kept.
inline std::vector<ReengagementStats> reengagement_rates(const ConversationForest& forest, const std::vector<Triple>& triples,
                                                         const ProfileIndex& profiles) {
    struct Tally {
        std::size_t anti = 0, pro = 0, anti_any = 0, anti_now = 0, pro_any = 0, pro_now = 0;
    };
    std::map<std::string, Tally> tally;
    for (const auto& t : triples) {
        for (const auto& id : t.followup_ids) {
            auto prof = profiles.find(id);
            if (prof == profiles.end()) throw Error(Errc::MissingProfile, "no behavior profile for follow-up post '" + id + "'");
            const PostRecord& post = forest.post(id);
            const PostRecord* parent = forest.parent(id);
            if (!parent || parent->author_id == post.author_id) continue;
            const auto cls = coarse_class(prof->second);
            const bool anti = counts_as_antisocial(cls);
            const bool pro = counts_as_prosocial(cls);
            if (!anti && !pro) continue;
            const std::string& receiver = parent->author_id;
            bool now = false;
            for (const auto& c : forest.children(id)) now = now || forest.post(c).author_id == receiver;
            bool any = now;
            if (!any) {
                for (const auto& d : forest.descendants(id)) {
                    if (forest.post(d).author_id == receiver) {
                        any = true;
                        break;
                    }
                }
            }
            auto& row = tally[receiver];
            if (anti) {
                ++row.anti;
                row.anti_any += any;
                row.anti_now += now;
            }
            if (pro) {
                ++row.pro;
                row.pro_any += any;
                row.pro_now += now;
            }
        }
    }
    std::vector<ReengagementStats> out;
    for (const auto& [user, row] : tally) {
        if (row.anti == 0 || row.pro == 0) continue;
        ReengagementStats s;
        s.user_id = user;
        s.antisocial_received = row.anti;
        s.prosocial_received = row.pro;
        s.rate_after_antisocial_anywhere = static_cast<double>(row.anti_any) / static_cast<double>(row.anti);
        s.rate_after_antisocial_immediate = static_cast<double>(row.anti_now) / static_cast<double>(row.anti);
        s.rate_after_prosocial_anywhere = static_cast<double>(row.pro_any) / static_cast<double>(row.pro);
        s.rate_after_prosocial_immediate = static_cast<double>(row.pro_now) / static_cast<double>(row.pro);
        out.push_back(s);
    }
    return out;
}

inline ReengagementResult reengagement(const ConversationForest& forest, const std::vector<Triple>& triples, const ProfileIndex& profiles) {
    ReengagementResult result;
    result.users = reengagement_rates(forest, triples, profiles);
    if (result.users.empty()) throw Error(Errc::InsufficientData, "no user received both antisocial and prosocial posts");
    std::vector<double> anti_any, pro_any, anti_now, pro_now;
    for (const auto& u : result.users) {
        anti_any.push_back(u.rate_after_antisocial_anywhere);
        pro_any.push_back(u.rate_after_prosocial_anywhere);
        anti_now.push_back(u.rate_after_antisocial_immediate);
        pro_now.push_back(u.rate_after_prosocial_immediate);
    }
    result.anywhere = stats::paired_t_test(anti_any, pro_any);
    result.immediate = stats::paired_t_test(anti_now, pro_now);
    return result;
}

// ---------------------------------------------------------------------------
// Multi-turn conversations

using UserPair = std::pair<std::string, std::string>;  // first < second

namespace detail {

// (replying author, replied-to author) -> number of direct replies, within
// the given posts only.
inline std::map<UserPair, std::size_t> directed_reply_counts(std::span<const PostRecord* const> posts) {
    std::map<std::string, const PostRecord*> by_id;
    for (const auto* p : posts) by_id[p->id] = p;
    std::map<UserPair, std::size_t> counts;
    for (const auto* p : posts) {
        if (!p->parent_id) continue;
        auto it = by_id.find(*p->parent_id);
        if (it == by_id.end() || it->second->author_id == p->author_id) continue;
        ++counts[{p->author_id, it->second->author_id}];
    }
    return counts;
}

}  // namespace detail

// Pairs (u, v) where each user directly replied to the other at least twice.
inline std::set<UserPair> multiturn_pairs(std::span<const PostRecord* const> posts) {
    const auto counts = detail::directed_reply_counts(posts);
    std::set<UserPair> out;
    for (const auto& [key, n] : counts) {
        if (n < 2) continue;
        auto back = counts.find({key.second, key.first});
        if (back != counts.end() && back->second >= 2) out.insert(std::minmax(key.first, key.second));
    }
    return out;
}

inline std::set<UserPair> multiturn_pairs(const std::vector<const PostRecord*>& posts) {
    return multiturn_pairs(std::span<const PostRecord* const>(posts));
}

struct UserPairStats {
    std::string u;
    std::string v;
    std::size_t posts_u_to_v = 0;
    std::size_t posts_v_to_u = 0;
    double pct_anti_u = 0.0;
    double pct_pro_u = 0.0;
    double pct_anti_v = 0.0;
    double pct_pro_v = 0.0;
    double anti_diff = 0.0;
    double pro_diff = 0.0;
    double final_diff = 0.0;
};

enum class DiffMode {
    Signed,    // final = (anti_u - anti_v) - (pro_u - pro_v)
    Absolute,  // final = |(anti_u - anti_v) - (pro_u - pro_v)|
};

inline UserPairStats user_pair_stats(std::span<const PostRecord* const> posts, const ProfileIndex& profiles, const UserPair& pair,
                                     DiffMode mode = DiffMode::Signed) {
    std::map<std::string, const PostRecord*> by_id;
    for (const auto* p : posts) by_id[p->id] = p;
    UserPairStats s;
    s.u = pair.first;
    s.v = pair.second;
    std::size_t anti_u = 0, pro_u = 0, anti_v = 0, pro_v = 0;
    for (const auto* p : posts) {
        if (!p->parent_id) continue;
        auto parent = by_id.find(*p->parent_id);
        if (parent == by_id.end()) continue;
        const std::string& to = parent->second->author_id;
        const bool from_u = p->author_id == s.u && to == s.v;
        const bool from_v = p->author_id == s.v && to == s.u;
        if (!from_u && !from_v) continue;
        auto prof = profiles.find(p->id);
        if (prof == profiles.end()) throw Error(Errc::MissingProfile, "no behavior profile for post '" + p->id + "'");
        const auto cls = coarse_class(prof->second);
        if (from_u) {
            ++s.posts_u_to_v;
            anti_u += counts_as_antisocial(cls);
            pro_u += counts_as_prosocial(cls);
        } else {
            ++s.posts_v_to_u;
            anti_v += counts_as_antisocial(cls);
            pro_v += counts_as_prosocial(cls);
        }
    }
    auto share = [](std::size_t k, std::size_t n) { return n ? static_cast<double>(k) / static_cast<double>(n) : 0.0; };
    s.pct_anti_u = share(anti_u, s.posts_u_to_v);
    s.pct_pro_u = share(pro_u, s.posts_u_to_v);
    s.pct_anti_v = share(anti_v, s.posts_v_to_u);
    s.pct_pro_v = share(pro_v, s.posts_v_to_u);
    s.anti_diff = s.pct_anti_u - s.pct_anti_v;
    s.pro_diff = s.pct_pro_u - s.pct_pro_v;
    s.final_diff = s.anti_diff - s.pro_diff;
    if (mode == DiffMode::Absolute) s.final_diff = std::fabs(s.final_diff);
    return s;
}

// Stats for every multi-turn pair of every conversation (reply + follow-up).
inline std::vector<UserPairStats> collect_pair_stats(const ConversationForest& forest, const std::vector<Triple>& triples,
                                                     const ProfileIndex& profiles, DiffMode mode = DiffMode::Signed) {
    std::vector<UserPairStats> out;
    for (const auto& t : triples) {
        const auto posts = conversation_posts(forest, t);
        for (const auto& pair : multiturn_pairs(posts)) out.push_back(user_pair_stats(posts, profiles, pair, mode));
    }
    return out;
}

// One-sample t-test of final_diff against zero.
inline stats::TestResult symmetry_test(const std::vector<UserPairStats>& pairs) {
    if (pairs.size() < 2) throw Error(Errc::InsufficientData, "symmetry test needs at least two user pairs");
    std::vector<double> diffs;
    for (const auto& p : pairs) diffs.push_back(p.final_diff);
    return stats::one_sample_t_test(diffs, 0.0);
}

struct MultiturnFrequency {
    std::size_t conversations = 0;    // conversations with a multi-turn pair
    double antisocial_share_all = 0;  // over every follow-up post
    double prosocial_share_all = 0;
    std::vector<double> antisocial_share;  // per multi-turn conversation
    std::vector<double> prosocial_share;
    std::optional<stats::TestResult> test;  // paired: antisocial vs prosocial share
};

// Per-conversation shares of antisocial and prosocial follow-up posts in
// multi-turn conversations, compared with a paired t-test.
inline MultiturnFrequency multiturn_frequency(const ConversationForest& forest, const std::vector<Triple>& triples,
                                              const ProfileIndex& profiles) {
    MultiturnFrequency out;
    std::size_t total = 0, anti_total = 0, pro_total = 0;
    for (const auto& t : triples) {
        std::size_t anti = 0, pro = 0;
        for (const auto& id : t.followup_ids) {
            auto prof = profiles.find(id);
            if (prof == profiles.end()) throw Error(Errc::MissingProfile, "no behavior profile for follow-up post '" + id + "'");
            const auto cls = coarse_class(prof->second);
            anti += counts_as_antisocial(cls);
            pro += counts_as_prosocial(cls);
        }
        total += t.followup_ids.size();
        anti_total += anti;
        pro_total += pro;
        if (t.followup_ids.empty() || multiturn_pairs(conversation_posts(forest, t)).empty()) continue;
        ++out.conversations;
        const double n = static_cast<double>(t.followup_ids.size());
        out.antisocial_share.push_back(static_cast<double>(anti) / n);
        out.prosocial_share.push_back(static_cast<double>(pro) / n);
    }
    if (total) {
        out.antisocial_share_all = static_cast<double>(anti_total) / static_cast<double>(total);
        out.prosocial_share_all = static_cast<double>(pro_total) / static_cast<double>(total);
    }
    if (out.conversations >= 2) {
        try {
            out.test = stats::paired_t_test(out.antisocial_share, out.prosocial_share);
        } catch (const Error& e) {
            if (e.code() != Errc::DegenerateVariance) throw;
        }
    }
    return out;
}

}  // namespace incivility
