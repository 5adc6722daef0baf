#pragma once
// Seeded synthetic data: a Reddit-like corpus with classifier scores, random
// follow-up conversations for property checks, and tuning pairs whose gold
// comes from a known metric configuration.

#include "incivility/behavior.hpp"
#include "incivility/corpus.hpp"
#include "incivility/error.hpp"
#include "incivility/metric.hpp"
#include "incivility/tuner.hpp"
#include "incivility/util.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

namespace incivility::synth {

struct CorpusOptions {
    std::size_t posts = 5000;
    std::uint64_t seed = 7;
    double hateful_root_share = 0.7;
    double moderated_reply_share = 0.08;
    double dangling_share = 0.01;
};

struct Corpus {
    std::vector<PostRecord> posts;
    std::vector<ScoreRecord> scores;
};

namespace detail {

enum class Tone { Neutral, Antisocial, Prosocial, Mixed };

inline constexpr std::array<const char*, 24> kFiller{
    "the", "thread", "post", "people", "think", "just", "about", "this", "that", "really", "point", "sub",
    "maybe", "still", "thing", "read", "comment", "time", "way", "mod", "here", "some", "guess", "news"};
inline constexpr std::array<const char*, 14> kHostile{"idiot", "stupid", "hate", "disgusting", "trash", "pathetic", "moron",
                                                      "shut", "loser", "ugly", "angry", "furious", "awful", "gross"};
inline constexpr std::array<const char*, 14> kKind{"thanks", "thank", "agree", "appreciate", "kind", "happy", "sorry", "understand",
                                                   "hope", "great", "respect", "please", "glad", "welcome"};
inline constexpr std::array<const char*, 6> kPronouns{"i", "you", "me", "your", "my", "we"};
inline constexpr std::array<const char*, 5> kNegations{"not", "don't", "never", "no", "can't"};

template <std::size_t N>
const char* pick(SeededRng& rng, const std::array<const char*, N>& bank) {
    return bank[rng.below(N)];
}

inline std::string make_body(SeededRng& rng, Tone tone) {
    const std::size_t words = 4 + rng.below(14);
    std::string body;
    for (std::size_t w = 0; w < words; ++w) {
        const double r = rng.unit();
        const char* word;
        if ((tone == Tone::Antisocial || tone == Tone::Mixed) && r < 0.25) {
            word = pick(rng, kHostile);
        } else if ((tone == Tone::Prosocial || tone == Tone::Mixed) && r > 0.75) {
            word = pick(rng, kKind);
        } else if (r < 0.40) {
            word = pick(rng, kPronouns);
        } else if (r < 0.48) {
            word = pick(rng, kNegations);
        } else {
            word = pick(rng, kFiller);
        }
        if (!body.empty()) body += ' ';
        body += word;
    }
    if (rng.chance(0.2)) body += '?';
    else if (rng.chance(0.3)) body += '.';
    if (rng.chance(0.06)) body = "> quoted text\n" + body;
    if (rng.chance(0.05)) body += " \"really\"";
    return body;
}

inline double high_score(SeededRng& rng) { return std::round((0.5 + 0.5 * rng.unit()) * 1000.0) / 1000.0; }
inline double low_score(SeededRng& rng) { return std::round(0.49 * rng.unit() * 1000.0) / 1000.0; }

inline ScoreRecord make_scores(SeededRng& rng, const std::string& post_id, Tone tone, bool moderated) {
    ScoreRecord rec{post_id, {}};
    const bool anti = tone == Tone::Antisocial || tone == Tone::Mixed;
    const bool pro = tone == Tone::Prosocial || tone == Tone::Mixed;
    // At least one dimension of the active side fires; the others fire at random.
    const std::size_t anti_lead = rng.below(3);
    const std::size_t pro_lead = rng.below(4);
    for (std::size_t i = 0; i < 3; ++i) {
        rec.scores[kAntisocialDimensions[i]] = anti && (i == anti_lead || rng.chance(0.35)) ? high_score(rng) : low_score(rng);
    }
    rec.scores[Dimension::NormViolation] = moderated ? high_score(rng) : low_score(rng);
    for (std::size_t i = 0; i < 4; ++i) {
        rec.scores[kProsocialDimensions[i]] = pro && (i == pro_lead || rng.chance(0.3)) ? high_score(rng) : low_score(rng);
    }
    return rec;
}

inline Tone draw_tone(SeededRng& rng, double heat) {
    const double r = rng.unit();
    const double p_anti = 0.10 + 0.45 * heat;
    const double p_pro = 0.10 + 0.40 * (1.0 - heat);
    if (r < 0.04) return Tone::Mixed;
    if (r < 0.04 + p_anti) return Tone::Antisocial;
    if (r < 0.04 + p_anti + p_pro) return Tone::Prosocial;
    return Tone::Neutral;
}

inline std::string post_id(std::size_t n) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "p%06zu", n);
    return buf;
}

}  // namespace detail

// Threads of hateful (mostly) roots, their direct replies, and follow-up
// conversations of varying length among a small user pool.
inline Corpus generate_corpus(const CorpusOptions& options = {}) {
    using namespace detail;
    if (options.posts == 0) throw Error(Errc::Config, "posts must be positive");
    SeededRng rng(options.seed);
    Corpus corpus;
    std::size_t next_id = 0;
    std::int64_t clock = 1'500'000'000;
    const std::array<const char*, 5> subs{"news", "politics", "gaming", "worldnews", "askreddit"};
    const std::size_t user_pool = std::max<std::size_t>(40, options.posts / 12);
    auto user = [&](std::uint64_t k) { return "u" + std::to_string(k); };

    auto emit = [&](std::optional<std::string> parent, const std::string& author, const std::string& sub, Tone tone,
                    std::optional<bool> hateful, bool moderated, bool marker_body) {
        PostRecord p;
        p.id = post_id(next_id++);
        p.parent_id = std::move(parent);
        p.author_id = author;
        p.subreddit = sub;
        clock += 1 + static_cast<std::int64_t>(rng.below(600));
        p.created_at = clock;
        p.body = marker_body ? (rng.chance(0.5) ? "[removed]" : "[deleted]") : make_body(rng, tone);
        p.hateful = hateful;
        if (moderated && !marker_body) p.moderated = true;
        corpus.scores.push_back(make_scores(rng, p.id, tone, moderated));
        corpus.posts.push_back(std::move(p));
        return corpus.posts.back().id;
    };

    while (corpus.posts.size() < options.posts) {
        const std::string sub = subs[rng.below(subs.size())];
        if (rng.chance(options.dangling_share)) {
            emit(std::string("gone") + std::to_string(next_id), user(rng.below(user_pool)), sub, draw_tone(rng, 0.5), false, false, false);
            continue;
        }
        const bool hateful = rng.chance(options.hateful_root_share);
        const std::string hater = user(rng.below(user_pool));
        const std::string root = emit(std::nullopt, hater, sub, hateful ? Tone::Antisocial : Tone::Neutral, hateful, false, false);
        const std::size_t replies = 1 + rng.below(4);
        for (std::size_t r = 0; r < replies && corpus.posts.size() < options.posts; ++r) {
            const double heat = rng.unit();
            const bool moderated = rng.chance(options.moderated_reply_share);
            const std::string replier = user(rng.below(user_pool));
            const std::string reply = emit(root, replier, sub, draw_tone(rng, heat), std::nullopt, moderated, moderated && rng.chance(0.5));

            // Follow-up length: many empty, the rest short, medium or long.
            const double r_len = rng.unit();
            std::size_t length = 0;
            if (r_len < 0.40) length = 0;
            else if (r_len < 0.65) length = 1 + rng.below(5);
            else if (r_len < 0.85) length = 6 + rng.below(5);
            else length = 11 + rng.below(15);

            std::vector<std::string> participants{replier, hater};
            const std::size_t extra = 1 + rng.below(4);
            for (std::size_t k = 0; k < extra; ++k) participants.push_back(user(rng.below(user_pool)));
            std::vector<std::pair<std::string, std::string>> thread{{reply, replier}};  // (post id, author)
            for (std::size_t k = 0; k < length && corpus.posts.size() < options.posts; ++k) {
                // Replies favour the newest posts, which builds back-and-forth chains.
                std::size_t target = thread.size() - 1 - std::min<std::size_t>(thread.size() - 1, rng.below(3));
                std::string author;
                do {
                    author = participants[rng.below(participants.size())];
                } while (author == thread[target].second && participants.size() > 1);
                const std::string id = emit(thread[target].first, author, sub, draw_tone(rng, heat), std::nullopt, false, false);
                thread.emplace_back(id, author);
            }
        }
    }
    return corpus;
}

// Random follow-up conversation: `posts` posts spread over `users` authors,
// each dimension flagged independently with probability `p_flag`.
inline std::vector<AuthoredFlags> random_conversation(SeededRng& rng, std::size_t posts, std::size_t users, double p_flag) {
    std::vector<AuthoredFlags> out;
    out.reserve(posts);
    for (std::size_t i = 0; i < posts; ++i) {
        std::uint8_t flags = 0;
        for (std::size_t d = 0; d < kDimensionCount; ++d) {
            if (rng.chance(p_flag)) flags = static_cast<std::uint8_t>(flags | (1u << d));
        }
        out.push_back(AuthoredFlags{"u" + std::to_string(rng.below(std::max<std::size_t>(users, 1))), flags});
    }
    return out;
}

// `count` tuning pairs whose gold is the decision of `planted`. Pairs on
// which `planted` ties are redrawn, and both gold labels are guaranteed.
inline std::vector<TuningItem> planted_items(const MetricConfig& planted, std::size_t count, std::uint64_t seed) {
    if (count < 2) throw Error(Errc::Config, "need at least two planted pairs");
    SeededRng rng(seed);
    std::vector<TuningItem> items;
    std::size_t lefts = 0;
    while (items.size() < count) {
        auto draw = [&] {
            const std::size_t len = rng.below(4) == 0 ? 0 : 1 + rng.below(24);
            return random_conversation(rng, len, 1 + rng.below(6), 0.1 + 0.3 * rng.unit());
        };
        TuningItem item;
        item.left = draw();
        item.right = draw();
        const auto choice =
            compare_pair(incivility_score(dimension_counts(std::span<const AuthoredFlags>(item.left), planted), planted),
                         incivility_score(dimension_counts(std::span<const AuthoredFlags>(item.right), planted), planted));
        if (choice == PairChoice::Tie) continue;
        // Keep the last slot for the missing label if one side never appeared.
        const bool last = items.size() + 1 == count;
        if (last && (lefts == 0 || lefts == items.size()) && (choice == PairChoice::Left) == (lefts != 0)) continue;
        item.gold = choice;
        if (choice == PairChoice::Left) ++lefts;
        char id[16];
        std::snprintf(id, sizeof id, "P%03zu", items.size() + 1);
        item.pair_id = id;
        items.push_back(std::move(item));
    }
    return items;
}

struct PlantedCorpus {
    std::vector<PostRecord> posts;
    std::vector<BehaviorProfile> profiles;
    std::vector<AnnotationPair> pairs;
    std::vector<GoldRecord> gold;
};

// Materializes tuning items as posts: per side a hateful root, a reply and a
// reply chain of follow-ups carrying the item's flags.
inline PlantedCorpus planted_corpus(const std::vector<TuningItem>& items) {
    PlantedCorpus out;
    std::int64_t clock = 1'600'000'000;
    auto side = [&](const std::string& tag, const std::vector<AuthoredFlags>& posts) {
        auto add = [&](const std::string& id, std::optional<std::string> parent, const std::string& author, std::uint8_t flags,
                       std::optional<bool> hateful) {
            PostRecord p;
            p.id = id;
            p.parent_id = std::move(parent);
            p.author_id = author;
            p.subreddit = "planted";
            p.created_at = ++clock;
            p.body = "post " + id;
            p.hateful = hateful;
            out.posts.push_back(std::move(p));
            BehaviorProfile prof{id, {}};
            for (std::size_t d = 0; d < kDimensionCount; ++d) prof.flags[d] = (flags >> d) & 1u;
            out.profiles.push_back(std::move(prof));
        };
        add(tag + "h", std::nullopt, tag + "-hater", 0x01, true);
        add(tag + "r", tag + "h", tag + "-replier", 0x10, std::nullopt);
        std::string parent = tag + "r";
        for (std::size_t k = 0; k < posts.size(); ++k) {
            const std::string id = tag + "f" + std::to_string(k);
            add(id, parent, tag + "-" + posts[k].author_id, posts[k].flags, std::nullopt);
            parent = id;
        }
        return tag + "r";
    };
    for (const auto& item : items) {
        const auto left = side(item.pair_id + "L", item.left);
        const auto right = side(item.pair_id + "R", item.right);
        const auto combo = combo_of(item.left.size(), item.right.size());
        out.pairs.push_back(AnnotationPair{item.pair_id, left, right, combo});
        out.gold.push_back(GoldRecord{item.pair_id, item.gold, left, right});
    }
    return out;
}

// Simulated annotators: each judges every pair with the reference decision,
// flipping it with probability `flip`. Pairs the reference scores as ties get
// a coin toss.
inline std::vector<PairJudgment> simulate_judgments(const std::vector<TuningItem>& items, const MetricConfig& reference,
                                                    const std::vector<std::string>& annotators, double flip, std::uint64_t seed) {
    SeededRng rng(seed);
    std::vector<PairJudgment> out;
    std::int64_t ts = 1'700'000'000'000;
    for (const auto& item : items) {
        auto choice = compare_pair(incivility_score(dimension_counts(std::span<const AuthoredFlags>(item.left), reference), reference),
                                   incivility_score(dimension_counts(std::span<const AuthoredFlags>(item.right), reference), reference));
        for (const auto& a : annotators) {
            PairChoice c = choice;
            if (c == PairChoice::Tie) c = rng.chance(0.5) ? PairChoice::Left : PairChoice::Right;
            if (rng.chance(flip)) c = c == PairChoice::Left ? PairChoice::Right : PairChoice::Left;
            out.push_back(PairJudgment{item.pair_id, a, c, ts += 1000});
        }
    }
    return out;
}

}  // namespace incivility::synth
