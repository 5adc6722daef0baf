#pragma once
// Low / Medium / High incivility labels from score quantiles, dataset
// splits for forecasting, and the majority-class baseline.

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
#include <string>
#include <vector>

namespace incivility {

enum class IncivilityLabel { Low, Medium, High };

inline constexpr std::array<IncivilityLabel, 3> kAllLabels{IncivilityLabel::Low, IncivilityLabel::Medium, IncivilityLabel::High};

inline std::string_view to_string(IncivilityLabel l) {
    switch (l) {
    case IncivilityLabel::Low: return "Low";
    case IncivilityLabel::Medium: return "Medium";
    case IncivilityLabel::High: return "High";
    }
    return "Medium";
}

inline IncivilityLabel parse_label(std::string_view text) {
    for (auto l : kAllLabels) {
        if (to_string(l) == text) return l;
    }
    throw Error(Errc::Schema, "unknown label '" + std::string(text) + "'");
}

// Low: S <= low_upper; Medium: low_upper < S <= medium_upper; High otherwise.
struct Thresholds {
    double low_upper = 0.0;
    double medium_upper = 0.0;
};

// Boundaries of the published Reddit quartile labels: Low (-16.38, -0.10],
// Medium (-0.10, 0], High (0, 7.81].
inline Thresholds reference_thresholds() { return Thresholds{-0.10, 0.0}; }

inline json to_json(const Thresholds& t) { return json{{"low_upper", t.low_upper}, {"medium_upper", t.medium_upper}}; }

inline Thresholds thresholds_from_json(const json& j) {
    if (!j.is_object() || !j.contains("low_upper") || !j.contains("medium_upper")) {
        throw Error(Errc::Schema, "thresholds need low_upper and medium_upper");
    }
    Thresholds t{j["low_upper"].get<double>(), j["medium_upper"].get<double>()};
    if (t.low_upper > t.medium_upper) throw Error(Errc::Config, "low_upper exceeds medium_upper");
    return t;
}

namespace detail {

// 1-based nearest rank ceil(q * n), guarded against q * n landing a hair
// above an integer through rounding.
inline std::size_t nearest_rank(double q, std::size_t n) {
    const double raw = q * static_cast<double>(n);
    auto rank = static_cast<std::size_t>(std::ceil(raw - 1e-9));
    return std::clamp<std::size_t>(rank, 1, n);
}

}  // namespace detail

inline Thresholds quantile_thresholds(std::vector<double> scores, double q_low = 0.25, double q_high = 0.75) {
    if (scores.empty()) throw Error(Errc::InsufficientData, "no scores to take quantiles of");
    if (!(q_low > 0.0 && q_low < q_high && q_high < 1.0)) throw Error(Errc::Config, "quantiles must satisfy 0 < q_low < q_high < 1");
    std::sort(scores.begin(), scores.end());
    return Thresholds{scores[detail::nearest_rank(q_low, scores.size()) - 1], scores[detail::nearest_rank(q_high, scores.size()) - 1]};
}

inline IncivilityLabel assign_label(double score, const Thresholds& t) {
    if (score <= t.low_upper) return IncivilityLabel::Low;
    if (score <= t.medium_upper) return IncivilityLabel::Medium;
    return IncivilityLabel::High;
}

struct LabeledTriple {
    std::string reply_id;
    std::string hateful_post_id;
    IncivilityScore score;
    IncivilityLabel label = IncivilityLabel::Medium;
};

inline json to_json(const LabeledTriple& l) {
    return json{{"reply_id", l.reply_id}, {"hateful_post_id", l.hateful_post_id}, {"S", l.score.S}, {"label", std::string(to_string(l.label))}};
}

inline std::vector<LabeledTriple> parse_labeled(std::string_view jsonl) {
    std::vector<LabeledTriple> out;
    for_each_jsonl(jsonl, [&](const json& obj, std::size_t line) {
        LabeledTriple l;
        l.reply_id = require_string(obj, "reply_id", line);
        if (obj.contains("hateful_post_id")) l.hateful_post_id = require_string(obj, "hateful_post_id", line);
        if (obj.contains("S") && obj["S"].is_number()) l.score.S = obj["S"].get<double>();
        l.label = parse_label(require_string(obj, "label", line));
        out.push_back(std::move(l));
    });
    return out;
}

struct SplitRatios {
    double train = 0.70;
    double validation = 0.15;
    double test = 0.15;
};

struct DatasetSplit {
    std::vector<LabeledTriple> train;
    std::vector<LabeledTriple> validation;
    std::vector<LabeledTriple> test;
};

// Seeded shuffle, validation and test sizes floor(ratio * n), the remainder
// to training.
inline DatasetSplit split_dataset(std::vector<LabeledTriple> labeled, SplitRatios ratios, std::uint64_t seed) {
    if (labeled.size() < 3) throw Error(Errc::InsufficientData, "need at least three records to split");
    for (double r : {ratios.train, ratios.validation, ratios.test}) {
        if (!(r >= 0.0 && r <= 1.0)) throw Error(Errc::Config, "split ratios must lie in [0,1]");
    }
    if (std::fabs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-9) throw Error(Errc::Config, "split ratios must sum to 1");
    SeededRng rng(seed);
    rng.shuffle(labeled);
    const double n = static_cast<double>(labeled.size());
    const auto n_valid = static_cast<std::size_t>(std::floor(ratios.validation * n + 1e-9));
    const auto n_test = static_cast<std::size_t>(std::floor(ratios.test * n + 1e-9));
    const std::size_t n_train = labeled.size() - n_valid - n_test;
    DatasetSplit split;
    split.train.assign(labeled.begin(), labeled.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.validation.assign(labeled.begin() + static_cast<std::ptrdiff_t>(n_train),
                            labeled.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid));
    split.test.assign(labeled.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid), labeled.end());
    return split;
}

// One forecasting record: {"reply_id", "reply_text", "hate_text", "label"}.
inline std::string export_records(const std::vector<LabeledTriple>& records, const ConversationForest& forest) {
    std::string out;
    for (const auto& r : records) {
        json j{{"reply_id", r.reply_id},
               {"reply_text", forest.post(r.reply_id).body},
               {"hate_text", r.hateful_post_id.empty() ? std::string() : forest.post(r.hateful_post_id).body},
               {"label", std::string(to_string(r.label))}};
        out += j.dump() + "\n";
    }
    return out;
}

using LabelReport = stats::ClassificationReport<IncivilityLabel>;

// Majority-class predictor; ties go to the earliest label in Low/Medium/High order.
inline LabelReport baseline_report(const std::vector<IncivilityLabel>& gold) {
    if (gold.empty()) throw Error(Errc::InsufficientData, "empty test set");
    std::array<std::size_t, 3> counts{};
    for (auto l : gold) ++counts[static_cast<std::size_t>(l)];
    std::size_t best = 0;
    for (std::size_t i = 1; i < counts.size(); ++i) {
        if (counts[i] > counts[best]) best = i;
    }
    std::vector<IncivilityLabel> preds(gold.size(), kAllLabels[best]);
    return stats::classification_report(preds, gold, {IncivilityLabel::High, IncivilityLabel::Medium, IncivilityLabel::Low});
}

inline std::string report_to_csv(const LabelReport& report) {
    std::string out = csv_row({"class", "precision", "recall", "f1", "support"});
    for (const auto& [label, m] : report.per_class) {
        out += csv_row({std::string(to_string(label)), format_fixed(m.precision, 4), format_fixed(m.recall, 4), format_fixed(m.f1, 4),
                        std::to_string(m.support)});
    }
    out += csv_row({"weighted", format_fixed(report.weighted.precision, 4), format_fixed(report.weighted.recall, 4),
                    format_fixed(report.weighted.f1, 4), std::to_string(report.weighted.support)});
    return out;
}

}  // namespace incivility
