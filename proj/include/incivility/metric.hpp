#pragma once
// Conversation incivility score.
//
//   S = alpha * A - beta * P - (1 - alpha - beta) * N
//
// A averages, over the selected antisocial dimensions, the per-dimension sum
// over users of f(posts by that user flagged for the dimension). P does the
// same for the selected prosocial dimensions. N sums f over users of their
// neutral post counts (posts flagged by no selected dimension). f is concave
// with f(0) = 0, so many users posting once weigh more than one user posting
// many times.

#include "incivility/behavior.hpp"
#include "incivility/corpus.hpp"
#include "incivility/error.hpp"
#include "incivility/util.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace incivility {

// Subset of the eight dimensions as a bit mask (bit i = dimension i).
class DimensionSet {
public:
    constexpr DimensionSet() = default;
    constexpr explicit DimensionSet(std::uint8_t bits) : bits_(bits) {}
    DimensionSet(std::initializer_list<Dimension> dims) {
        for (auto d : dims) insert(d);
    }

    constexpr std::uint8_t bits() const { return bits_; }
    constexpr bool empty() const { return bits_ == 0; }
    constexpr std::size_t size() const { return static_cast<std::size_t>(std::popcount(bits_)); }
    constexpr bool contains(Dimension d) const { return (bits_ >> index_of(d)) & 1u; }
    void insert(Dimension d) { bits_ = static_cast<std::uint8_t>(bits_ | (1u << index_of(d))); }

    std::vector<Dimension> members() const {
        std::vector<Dimension> out;
        for (auto d : kAllDimensions) {
            if (contains(d)) out.push_back(d);
        }
        return out;
    }

    // "a1+a2+a3"; the empty set renders as "-".
    std::string label() const {
        std::string out;
        for (auto d : members()) {
            if (!out.empty()) out += '+';
            out += key_of(d);
        }
        return out.empty() ? "-" : out;
    }

    constexpr DimensionSet operator|(DimensionSet other) const { return DimensionSet(static_cast<std::uint8_t>(bits_ | other.bits_)); }
    constexpr bool operator==(const DimensionSet&) const = default;
    constexpr auto operator<=>(const DimensionSet&) const = default;

private:
    std::uint8_t bits_ = 0;
};

inline constexpr DimensionSet kAntisocialMask{0x0F};
inline constexpr DimensionSet kProsocialMask{0xF0};

enum class Aggregation { Sqrt, Identity, Log1p };

inline double apply(Aggregation f, double count) {
    switch (f) {
    case Aggregation::Sqrt: return std::sqrt(count);
    case Aggregation::Identity: return count;
    case Aggregation::Log1p: return std::log1p(count);
    }
    return count;
}

inline std::string_view to_string(Aggregation f) {
    switch (f) {
    case Aggregation::Sqrt: return "sqrt";
    case Aggregation::Identity: return "identity";
    case Aggregation::Log1p: return "log1p";
    }
    return "sqrt";
}

inline Aggregation parse_aggregation(std::string_view name) {
    if (name == "sqrt") return Aggregation::Sqrt;
    if (name == "identity") return Aggregation::Identity;
    if (name == "log1p") return Aggregation::Log1p;
    throw Error(Errc::Config, "unknown aggregation function '" + std::string(name) + "'");
}

// Which dimensions decide whether a post is neutral.
enum class NeutralMode {
    Selected,  // no selected antisocial and no selected prosocial dimension
    All,       // none of the eight dimensions
};

struct MetricConfig {
    DimensionSet antisocial;
    DimensionSet prosocial;
    double alpha = 0.0;
    double beta = 0.0;
    Aggregation f = Aggregation::Sqrt;
    NeutralMode neutral = NeutralMode::Selected;

    void validate() const {
        if ((antisocial.bits() & ~kAntisocialMask.bits()) != 0) throw Error(Errc::Config, "antisocial subset holds a prosocial dimension");
        if ((prosocial.bits() & ~kProsocialMask.bits()) != 0) throw Error(Errc::Config, "prosocial subset holds an antisocial dimension");
        if (antisocial.empty() && prosocial.empty()) throw Error(Errc::Config, "both dimension subsets are empty");
        if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(Errc::Config, "alpha outside [0,1]");
        if (!(beta >= 0.0 && beta <= 1.0)) throw Error(Errc::Config, "beta outside [0,1]");
        if (alpha + beta > 1.0 + 1e-12) throw Error(Errc::Config, "alpha + beta exceeds 1");
    }

    DimensionSet neutral_mask() const {
        return neutral == NeutralMode::All ? DimensionSet(0xFF) : (antisocial | prosocial);
    }
};

// ({a1,a2,a3}, {p3}, 0.75, 0.15, sqrt): the best-agreeing configuration
// reported for the Reddit annotations.
inline MetricConfig reference_config() {
    MetricConfig c;
    c.antisocial = {Dimension::Offensive, Dimension::ExplicitHate, Dimension::Abusive};
    c.prosocial = {Dimension::Positiveness};
    c.alpha = 0.75;
    c.beta = 0.15;
    return c;
}

inline json to_json(const MetricConfig& c) {
    json anti = json::array();
    json pro = json::array();
    for (auto d : c.antisocial.members()) anti.push_back(std::string(key_of(d)));
    for (auto d : c.prosocial.members()) pro.push_back(std::string(key_of(d)));
    json j{{"antisocial_dims", anti}, {"prosocial_dims", pro}, {"alpha", c.alpha}, {"beta", c.beta}, {"f", std::string(to_string(c.f))}};
    if (c.neutral == NeutralMode::All) j["neutral"] = "all";
    return j;
}

inline MetricConfig metric_config_from_json(const json& j) {
    if (!j.is_object()) throw Error(Errc::Config, "metric config must be a JSON object");
    MetricConfig c;
    auto read_dims = [&](const char* key, bool antisocial) {
        DimensionSet set;
        if (!j.contains(key)) return set;
        if (!j[key].is_array()) throw Error(Errc::Config, std::string(key) + " must be an array");
        for (const auto& v : j[key]) {
            auto d = v.is_string() ? parse_dimension(v.get<std::string>()) : std::nullopt;
            if (!d || is_antisocial(*d) != antisocial) throw Error(Errc::Config, std::string("invalid entry in ") + key);
            set.insert(*d);
        }
        return set;
    };
    c.antisocial = read_dims("antisocial_dims", true);
    c.prosocial = read_dims("prosocial_dims", false);
    if (!j.contains("alpha") || !j["alpha"].is_number()) throw Error(Errc::Config, "missing numeric alpha");
    if (!j.contains("beta") || !j["beta"].is_number()) throw Error(Errc::Config, "missing numeric beta");
    c.alpha = j["alpha"].get<double>();
    c.beta = j["beta"].get<double>();
    if (j.contains("f")) c.f = parse_aggregation(j["f"].get<std::string>());
    if (j.contains("neutral")) {
        auto mode = j["neutral"].get<std::string>();
        if (mode == "all") {
            c.neutral = NeutralMode::All;
        } else if (mode == "selected") {
            c.neutral = NeutralMode::Selected;
        } else {
            throw Error(Errc::Config, "neutral must be 'selected' or 'all'");
        }
    }
    c.validate();
    return c;
}

struct UserBehaviorCounts {
    std::map<std::pair<std::string, Dimension>, std::size_t> per_user_dim;
    std::map<std::string, std::size_t> per_user_neutral;
};

// A follow-up post reduced to what the metric sees.
struct AuthoredFlags {
    std::string author_id;
    std::uint8_t flags = 0;  // BehaviorProfile::mask()
};

inline UserBehaviorCounts dimension_counts(std::span<const AuthoredFlags> posts, const MetricConfig& config) {
    UserBehaviorCounts counts;
    const std::uint8_t neutral_mask = config.neutral_mask().bits();
    const DimensionSet selected = config.antisocial | config.prosocial;
    for (const auto& post : posts) {
        for (auto d : selected.members()) {
            if ((post.flags >> index_of(d)) & 1u) ++counts.per_user_dim[{post.author_id, d}];
        }
        if ((post.flags & neutral_mask) == 0) ++counts.per_user_neutral[post.author_id];
    }
    return counts;
}

// Follow-up posts of a triple with their authors and flags. The hateful post
// and the reply are not part of the scored conversation.
inline std::vector<AuthoredFlags> followup_flags(const Triple& triple, const ConversationForest& forest, const ProfileIndex& profiles) {
    std::vector<AuthoredFlags> out;
    out.reserve(triple.followup_ids.size());
    for (const auto& id : triple.followup_ids) {
        auto it = profiles.find(id);
        if (it == profiles.end()) throw Error(Errc::MissingProfile, "no behavior profile for follow-up post '" + id + "'");
        out.push_back(AuthoredFlags{forest.post(id).author_id, it->second.mask()});
    }
    return out;
}

inline UserBehaviorCounts dimension_counts(const Triple& triple, const ConversationForest& forest, const ProfileIndex& profiles,
                                           const MetricConfig& config) {
    const auto posts = followup_flags(triple, forest, profiles);
    return dimension_counts(std::span<const AuthoredFlags>(posts), config);
}

struct IncivilityScore {
    double A = 0.0;
    double P = 0.0;
    double N = 0.0;
    double S = 0.0;
};

namespace detail {

// Sum of f over a multiset of counts, summed in ascending count order so the
// result does not depend on how users are named or ordered.
inline double aggregate_counts(std::vector<std::size_t> counts, Aggregation f) {
    std::sort(counts.begin(), counts.end());
    double sum = 0.0;
    for (auto c : counts) sum += apply(f, static_cast<double>(c));
    return sum;
}

inline IncivilityScore combine(const std::array<double, kDimensionCount>& dim_sums, double neutral_sum, const MetricConfig& config) {
    IncivilityScore s;
    if (!config.antisocial.empty()) {
        double total = 0.0;
        for (auto d : config.antisocial.members()) total += dim_sums[index_of(d)];
        s.A = total / static_cast<double>(config.antisocial.size());
    }
    if (!config.prosocial.empty()) {
        double total = 0.0;
        for (auto d : config.prosocial.members()) total += dim_sums[index_of(d)];
        s.P = total / static_cast<double>(config.prosocial.size());
    }
    s.N = neutral_sum;
    s.S = config.alpha * s.A - config.beta * s.P - (1.0 - config.alpha - config.beta) * s.N;
    return s;
}

}  // namespace detail

inline IncivilityScore incivility_score(const UserBehaviorCounts& counts, const MetricConfig& config) {
    config.validate();
    std::array<std::vector<std::size_t>, kDimensionCount> by_dim;
    for (const auto& [key, count] : counts.per_user_dim) by_dim[index_of(key.second)].push_back(count);
    std::array<double, kDimensionCount> dim_sums{};
    for (std::size_t d = 0; d < kDimensionCount; ++d) dim_sums[d] = detail::aggregate_counts(by_dim[d], config.f);
    std::vector<std::size_t> neutral;
    for (const auto& [user, count] : counts.per_user_neutral) neutral.push_back(count);
    return detail::combine(dim_sums, detail::aggregate_counts(neutral, config.f), config);
}

inline IncivilityScore score_triple(const Triple& triple, const ConversationForest& forest, const ProfileIndex& profiles,
                                    const MetricConfig& config) {
    return incivility_score(dimension_counts(triple, forest, profiles, config), config);
}

// Config-independent per-conversation sums for one aggregation function:
// every dimension's user sum and the neutral sum for every neutral mask.
// Scores assembled from it match incivility_score bit for bit.
struct ComponentTable {
    std::array<double, kDimensionCount> dim_sums{};
    std::array<double, 256> neutral_sums{};

    static ComponentTable build(std::span<const AuthoredFlags> posts, Aggregation f) {
        ComponentTable table;
        std::map<std::string, std::array<std::size_t, kDimensionCount>> per_user;
        std::map<std::string, std::array<std::size_t, 256>> neutral_per_user;
        for (const auto& p : posts) {
            auto& row = per_user[p.author_id];
            for (std::size_t d = 0; d < kDimensionCount; ++d) row[d] += (p.flags >> d) & 1u;
        }
        for (std::size_t d = 0; d < kDimensionCount; ++d) {
            std::vector<std::size_t> counts;
            for (const auto& [user, row] : per_user) {
                if (row[d]) counts.push_back(row[d]);
            }
            table.dim_sums[d] = detail::aggregate_counts(counts, f);
        }
        for (const auto& p : posts) {
            auto& row = neutral_per_user[p.author_id];
            for (std::size_t mask = 0; mask < 256; ++mask) row[mask] += (p.flags & mask) == 0 ? 1 : 0;
        }
        for (std::size_t mask = 0; mask < 256; ++mask) {
            std::vector<std::size_t> counts;
            for (const auto& [user, row] : neutral_per_user) {
                if (row[mask]) counts.push_back(row[mask]);
            }
            table.neutral_sums[mask] = detail::aggregate_counts(counts, f);
        }
        return table;
    }

    IncivilityScore score(const MetricConfig& config) const {
        return detail::combine(dim_sums, neutral_sums[config.neutral_mask().bits()], config);
    }
};

enum class PairChoice { Left, Right, Tie };

inline std::string_view to_string(PairChoice c) {
    switch (c) {
    case PairChoice::Left: return "Left";
    case PairChoice::Right: return "Right";
    case PairChoice::Tie: return "Tie";
    }
    return "Tie";
}

inline constexpr double kTieTolerance = 1e-12;

// The side with the larger S is the more uncivil conversation.
inline PairChoice compare_pair(const IncivilityScore& left, const IncivilityScore& right) {
    if (std::fabs(left.S - right.S) <= kTieTolerance) return PairChoice::Tie;
    return left.S > right.S ? PairChoice::Left : PairChoice::Right;
}

inline json score_to_json(const std::string& reply_id, const IncivilityScore& s) {
    return json{{"reply_id", reply_id}, {"A", s.A}, {"P", s.P}, {"N", s.N}, {"S", s.S}};
}

}  // namespace incivility
