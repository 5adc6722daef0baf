#pragma once
// Antisocial / prosocial behavior profiles.
//
// Each post carries eight boolean flags. Flags arrive either from external
// classifier scores (thresholded) or from a small lexicon annotator; the
// norm-violation flag can also be derived from the post body directly.

#include "incivility/corpus.hpp"
#include "incivility/error.hpp"
#include "incivility/stats.hpp"
#include "incivility/util.hpp"

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace incivility {

enum class Dimension : std::uint8_t {
    Offensive = 0,      // a1
    ExplicitHate = 1,   // a2
    Abusive = 2,        // a3
    NormViolation = 3,  // a4
    Empathy = 4,        // p1
    Norms = 5,          // p2
    Positiveness = 6,   // p3
    Politeness = 7,     // p4
};

inline constexpr std::size_t kDimensionCount = 8;

inline constexpr std::array<Dimension, kDimensionCount> kAllDimensions{
    Dimension::Offensive, Dimension::ExplicitHate, Dimension::Abusive,      Dimension::NormViolation,
    Dimension::Empathy,   Dimension::Norms,        Dimension::Positiveness, Dimension::Politeness};

inline constexpr std::array<Dimension, 4> kAntisocialDimensions{Dimension::Offensive, Dimension::ExplicitHate,
                                                                Dimension::Abusive, Dimension::NormViolation};
inline constexpr std::array<Dimension, 4> kProsocialDimensions{Dimension::Empathy, Dimension::Norms,
                                                               Dimension::Positiveness, Dimension::Politeness};

constexpr std::size_t index_of(Dimension d) { return static_cast<std::size_t>(d); }
constexpr bool is_antisocial(Dimension d) { return index_of(d) < 4; }
constexpr bool is_prosocial(Dimension d) { return index_of(d) >= 4; }

inline std::string_view key_of(Dimension d) {
    static constexpr std::array<std::string_view, kDimensionCount> keys{"a1", "a2", "a3", "a4", "p1", "p2", "p3", "p4"};
    return keys[index_of(d)];
}

inline std::optional<Dimension> parse_dimension(std::string_view key) {
    for (auto d : kAllDimensions) {
        if (key_of(d) == key) return d;
    }
    return std::nullopt;
}

struct BehaviorProfile {
    std::string post_id;
    std::array<bool, kDimensionCount> flags{};

    bool operator[](Dimension d) const { return flags[index_of(d)]; }
    bool& operator[](Dimension d) { return flags[index_of(d)]; }

    // Bit i set iff dimension i is flagged.
    std::uint8_t mask() const {
        std::uint8_t m = 0;
        for (std::size_t i = 0; i < kDimensionCount; ++i) {
            if (flags[i]) m = static_cast<std::uint8_t>(m | (1u << i));
        }
        return m;
    }

    bool operator==(const BehaviorProfile&) const = default;
};

using ProfileIndex = std::map<std::string, BehaviorProfile>;

inline ProfileIndex index_profiles(const std::vector<BehaviorProfile>& profiles) {
    ProfileIndex index;
    for (const auto& p : profiles) index[p.post_id] = p;
    return index;
}

struct ScoreRecord {
    std::string post_id;
    std::map<Dimension, double> scores;
};

using Thresholds8 = std::array<double, kDimensionCount>;

inline Thresholds8 default_thresholds() {
    Thresholds8 t;
    t.fill(0.5);
    return t;
}

inline bool annotate_norm_violation(const PostRecord& post,
                                    const std::set<std::string>& markers = default_moderation_markers()) {
    return markers.count(normalize_marker(post.body)) != 0;
}

struct IngestOptions {
    Thresholds8 thresholds = default_thresholds();
    // When set, a4 is taken from the post body (looked up by post id)
    // instead of the score record.
    const ConversationForest* norm_violation_source = nullptr;
    std::set<std::string> markers = default_moderation_markers();
};

// flag(d) = score(d) >= threshold(d); dimensions absent from a record stay false.
inline std::vector<BehaviorProfile> ingest_scores(const std::vector<ScoreRecord>& records, const IngestOptions& options = {}) {
    for (double t : options.thresholds) {
        if (!(t >= 0.0 && t <= 1.0)) throw Error(Errc::Range, "threshold outside [0,1]");
    }
    std::vector<BehaviorProfile> profiles;
    profiles.reserve(records.size());
    for (const auto& rec : records) {
        BehaviorProfile profile{rec.post_id, {}};
        for (const auto& [dim, score] : rec.scores) {
            if (!(score >= 0.0 && score <= 1.0)) {
                throw Error(Errc::Range, "score " + std::to_string(score) + " for " + std::string(key_of(dim)) + " on '" + rec.post_id + "'");
            }
            profile[dim] = score >= options.thresholds[index_of(dim)];
        }
        if (options.norm_violation_source && options.norm_violation_source->contains(rec.post_id)) {
            profile[Dimension::NormViolation] =
                annotate_norm_violation(options.norm_violation_source->post(rec.post_id), options.markers);
        }
        profiles.push_back(std::move(profile));
    }
    return profiles;
}

inline std::vector<ScoreRecord> parse_score_records(std::string_view jsonl) {
    std::vector<ScoreRecord> records;
    for_each_jsonl(jsonl, [&](const json& obj, std::size_t line) {
        ScoreRecord rec;
        rec.post_id = require_string(obj, "post_id", line);
        const json& scores = require_field(obj, "scores", line);
        if (!scores.is_object()) throw Error(Errc::Schema, "'scores' must be an object", line);
        for (const auto& [key, value] : scores.items()) {
            auto dim = parse_dimension(key);
            if (!dim) throw Error(Errc::Schema, "unknown dimension '" + key + "'", line);
            if (!value.is_number()) throw Error(Errc::Schema, "score for '" + key + "' must be numeric", line);
            double v = value.get<double>();
            if (!(v >= 0.0 && v <= 1.0)) throw Error(Errc::Range, "score for '" + key + "' outside [0,1]", line);
            rec.scores[*dim] = v;
        }
        records.push_back(std::move(rec));
    });
    return records;
}

inline json to_json(const ScoreRecord& rec) {
    json scores = json::object();
    for (const auto& [dim, value] : rec.scores) scores[std::string(key_of(dim))] = value;
    return json{{"post_id", rec.post_id}, {"scores", scores}};
}

inline std::string score_records_to_jsonl(const std::vector<ScoreRecord>& records) {
    std::string out;
    for (const auto& r : records) out += to_json(r).dump() + "\n";
    return out;
}

inline json to_json(const BehaviorProfile& profile) {
    json flags = json::object();
    for (auto d : kAllDimensions) flags[std::string(key_of(d))] = profile[d];
    return json{{"post_id", profile.post_id}, {"flags", flags}};
}

inline std::string profiles_to_jsonl(const std::vector<BehaviorProfile>& profiles) {
    std::string out;
    for (const auto& p : profiles) {
        out += to_json(p).dump();
        out += '\n';
    }
    return out;
}

// Accepts both profile lines ({"post_id", "flags"}) and score lines
// ({"post_id", "scores"}); score lines are thresholded with `thresholds`.
inline std::vector<BehaviorProfile> parse_profiles(std::string_view jsonl, const Thresholds8& thresholds = default_thresholds()) {
    std::vector<BehaviorProfile> profiles;
    for_each_jsonl(jsonl, [&](const json& obj, std::size_t line) {
        BehaviorProfile profile;
        profile.post_id = require_string(obj, "post_id", line);
        if (obj.contains("flags")) {
            const json& flags = obj["flags"];
            if (!flags.is_object()) throw Error(Errc::Schema, "'flags' must be an object", line);
            for (const auto& [key, value] : flags.items()) {
                auto dim = parse_dimension(key);
                if (!dim) throw Error(Errc::Schema, "unknown dimension '" + key + "'", line);
                if (!value.is_boolean()) throw Error(Errc::Schema, "flag '" + key + "' must be boolean", line);
                profile[*dim] = value.get<bool>();
            }
        } else if (obj.contains("scores")) {
            ScoreRecord rec;
            rec.post_id = profile.post_id;
            const json& scores = obj["scores"];
            if (!scores.is_object()) throw Error(Errc::Schema, "'scores' must be an object", line);
            for (const auto& [key, value] : scores.items()) {
                auto dim = parse_dimension(key);
                if (!dim) throw Error(Errc::Schema, "unknown dimension '" + key + "'", line);
                if (!value.is_number()) throw Error(Errc::Schema, "score for '" + key + "' must be numeric", line);
                rec.scores[*dim] = value.get<double>();
            }
            for (const auto& [dim, v] : rec.scores) {
                if (!(v >= 0.0 && v <= 1.0)) throw Error(Errc::Range, "score for '" + std::string(key_of(dim)) + "' outside [0,1]", line);
            }
            IngestOptions options;
            options.thresholds = thresholds;
            profile = ingest_scores({rec}, options).front();
        } else {
            throw Error(Errc::Schema, "expected 'flags' or 'scores'", line);
        }
        profiles.push_back(std::move(profile));
    });
    return profiles;
}

struct Lexicon {
    std::map<std::string, std::set<Dimension>> entries;
};

inline Lexicon parse_lexicon(std::string_view text) {
    json obj = json::parse(text.begin(), text.end(), nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) throw Error(Errc::Parse, "lexicon must be a JSON object");
    Lexicon lex;
    for (const auto& [term, dims] : obj.items()) {
        std::string key = to_lower_ascii(trim(term));
        if (key.empty()) throw Error(Errc::Schema, "empty lexicon term");
        if (!dims.is_array()) throw Error(Errc::Schema, "lexicon entry '" + term + "' must list dimensions");
        for (const auto& d : dims) {
            auto dim = d.is_string() ? parse_dimension(d.get<std::string>()) : std::nullopt;
            if (!dim) throw Error(Errc::Schema, "unknown dimension in lexicon entry '" + term + "'");
            lex.entries[key].insert(*dim);
        }
    }
    return lex;
}

inline BehaviorProfile lexicon_annotate(const PostRecord& post, const Lexicon& lexicon) {
    BehaviorProfile profile{post.id, {}};
    for (const auto& tok : tokenize(post.body)) {
        auto it = lexicon.entries.find(tok);
        if (it == lexicon.entries.end()) continue;
        for (auto d : it->second) profile[d] = true;
    }
    return profile;
}

enum class CoarseClass { Antisocial, Prosocial, Both, Neutral };

inline std::string_view to_string(CoarseClass c) {
    switch (c) {
    case CoarseClass::Antisocial: return "antisocial";
    case CoarseClass::Prosocial: return "prosocial";
    case CoarseClass::Both: return "both";
    case CoarseClass::Neutral: return "neutral";
    }
    return "neutral";
}

// Norm violations (a4) are ignored: their content is always a moderation marker.
inline CoarseClass coarse_class(const BehaviorProfile& profile) {
    bool anti = profile[Dimension::Offensive] || profile[Dimension::ExplicitHate] || profile[Dimension::Abusive];
    bool pro = false;
    for (auto d : kProsocialDimensions) pro = pro || profile[d];
    if (anti && pro) return CoarseClass::Both;
    if (anti) return CoarseClass::Antisocial;
    if (pro) return CoarseClass::Prosocial;
    return CoarseClass::Neutral;
}

inline bool counts_as_antisocial(CoarseClass c) { return c == CoarseClass::Antisocial || c == CoarseClass::Both; }
inline bool counts_as_prosocial(CoarseClass c) { return c == CoarseClass::Prosocial || c == CoarseClass::Both; }

using CorrelationMatrix = std::array<std::array<std::optional<double>, kDimensionCount>, kDimensionCount>;

// Spearman coefficients between the eight flag vectors. Cells involving a
// constant dimension are left empty.
inline CorrelationMatrix correlation_matrix(const std::vector<BehaviorProfile>& profiles) {
    if (profiles.size() < 2) throw Error(Errc::InsufficientData, "correlation needs at least two profiles");
    std::array<std::vector<double>, kDimensionCount> columns;
    std::array<bool, kDimensionCount> varies{};
    for (std::size_t d = 0; d < kDimensionCount; ++d) {
        columns[d].reserve(profiles.size());
        for (const auto& p : profiles) columns[d].push_back(p.flags[d] ? 1.0 : 0.0);
        varies[d] = std::any_of(columns[d].begin(), columns[d].end(), [&](double v) { return v != columns[d].front(); });
    }
    if (std::none_of(varies.begin(), varies.end(), [](bool v) { return v; })) {
        throw Error(Errc::InsufficientData, "every dimension is constant");
    }
    CorrelationMatrix m{};
    for (std::size_t i = 0; i < kDimensionCount; ++i) {
        if (!varies[i]) continue;
        m[i][i] = 1.0;
        for (std::size_t j = i + 1; j < kDimensionCount; ++j) {
            if (!varies[j]) continue;
            const double rho = stats::spearman_rho(columns[i], columns[j]).statistic;
            m[i][j] = rho;
            m[j][i] = rho;
        }
    }
    return m;
}

// Header a1..p4; row i holds the coefficients of dimension i. Empty cells are "NA".
inline std::string correlation_to_csv(const CorrelationMatrix& m) {
    std::vector<std::string> header;
    for (auto d : kAllDimensions) header.emplace_back(key_of(d));
    std::string out = csv_row(header);
    for (std::size_t i = 0; i < kDimensionCount; ++i) {
        std::vector<std::string> row;
        for (std::size_t j = 0; j < kDimensionCount; ++j) row.push_back(m[i][j] ? format_fixed(*m[i][j], 6) : "NA");
        out += csv_row(row);
    }
    return out;
}

}  // namespace incivility
