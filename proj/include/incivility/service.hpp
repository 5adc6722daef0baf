#pragma once
// Annotation session state: serves sampled pairs to annotators, records
// their judgments in an append-only JSON Lines log, and reports agreement.
//
// The log is the source of truth. On construction it is replayed, so a
// restarted session holds exactly the state it had before.

#include "incivility/corpus.hpp"
#include "incivility/error.hpp"
#include "incivility/metric.hpp"
#include "incivility/stats.hpp"
#include "incivility/tuner.hpp"
#include "incivility/util.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace incivility {

struct RenderedPost {
    std::string author;  // pseudonym
    std::string body;
    std::size_t depth = 0;  // 0 for the reply, 1 for its direct children, ...
};

struct RenderedTriple {
    RenderedPost hateful_post;
    RenderedPost reply;
    std::vector<RenderedPost> followup;
};

struct AnnotationTask {
    std::string pair_id;
    std::size_t index = 0;
    std::size_t total = 0;
    BucketCombo bucket_combo = BucketCombo::SS;
    RenderedTriple left;
    RenderedTriple right;
};

inline json to_json(const RenderedPost& p) { return json{{"author", p.author}, {"body", p.body}, {"depth", p.depth}}; }

inline json to_json(const RenderedTriple& t) {
    json follow = json::array();
    for (const auto& p : t.followup) follow.push_back(to_json(p));
    return json{{"hateful_post", to_json(t.hateful_post)}, {"reply", to_json(t.reply)}, {"followup", follow}};
}

inline json to_json(const AnnotationTask& t) {
    return json{{"pair_id", t.pair_id},
                {"index", t.index},
                {"total", t.total},
                {"bucket_combo", std::string(to_string(t.bucket_combo))},
                {"left", to_json(t.left)},
                {"right", to_json(t.right)}};
}

// Authors become "user1", "user2", ... in order of first appearance within
// the conversation (hateful post, reply, follow-up).
inline RenderedTriple render_triple(const Triple& triple, const ConversationForest& forest) {
    std::map<std::string, std::string> alias;
    auto pseudonym = [&](const std::string& author) {
        auto it = alias.find(author);
        if (it != alias.end()) return it->second;
        std::string name = "user" + std::to_string(alias.size() + 1);
        alias.emplace(author, name);
        return name;
    };
    RenderedTriple out;
    const auto& hate = forest.post(triple.hateful_post_id);
    const auto& reply = forest.post(triple.reply_id);
    out.hateful_post = RenderedPost{pseudonym(hate.author_id), hate.body, 0};
    out.reply = RenderedPost{pseudonym(reply.author_id), reply.body, 0};
    for (const auto& id : triple.followup_ids) {
        const auto& p = forest.post(id);
        out.followup.push_back(RenderedPost{pseudonym(p.author_id), p.body, forest.depth_below(id, triple.reply_id).value_or(0)});
    }
    return out;
}

struct JudgmentRecord {
    std::uint64_t seq = 0;
    std::string pair_id;
    std::string annotator_id;
    PairChoice choice = PairChoice::Left;
    bool revise = false;
    std::int64_t received_at = 0;  // epoch milliseconds
};

struct Acknowledgment {
    std::uint64_t seq = 0;
    bool superseded_previous = false;
};

struct BucketAgreement {
    std::size_t pairs = 0;
    double kappa = 0.0;
    double accuracy = 0.0;
};

struct AgreementReport {
    std::size_t doubly_judged = 0;
    double kappa = 0.0;
    double accuracy = 0.0;
    std::map<BucketCombo, BucketAgreement> per_bucket;
    std::vector<std::string> unresolved;
};

inline json to_json(const AgreementReport& r) {
    json buckets = json::object();
    for (const auto& [combo, b] : r.per_bucket) {
        buckets[std::string(to_string(combo))] = json{{"pairs", b.pairs}, {"kappa", b.kappa}, {"accuracy", b.accuracy}};
    }
    return json{{"doubly_judged", r.doubly_judged}, {"kappa", r.kappa}, {"accuracy", r.accuracy}, {"per_bucket", buckets}, {"unresolved", r.unresolved}};
}

struct Progress {
    std::size_t total = 0;
    std::map<std::string, std::size_t> judged_by_annotator;
    std::size_t log_length = 0;
};

inline json to_json(const Progress& p) {
    return json{{"total", p.total}, {"judged", p.judged_by_annotator}, {"log_length", p.log_length}};
}

class AnnotationSession {
public:
    using Clock = std::function<std::int64_t()>;

    static std::int64_t system_clock_ms() {
        using namespace std::chrono;
        return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
    }

    // `tasks` in serving order. With a log path, existing records are
    // replayed and new ones appended.
    AnnotationSession(std::string id, std::vector<AnnotationTask> tasks, std::optional<std::filesystem::path> log_path = std::nullopt,
                      Clock clock = system_clock_ms)
        : id_(std::move(id)), tasks_(std::move(tasks)), log_path_(std::move(log_path)), clock_(std::move(clock)) {
        for (std::size_t i = 0; i < tasks_.size(); ++i) {
            tasks_[i].index = i;
            tasks_[i].total = tasks_.size();
            if (!index_.emplace(tasks_[i].pair_id, i).second) throw Error(Errc::DuplicateId, "pair id '" + tasks_[i].pair_id + "'");
        }
        if (log_path_ && std::filesystem::exists(*log_path_)) replay(read_file(*log_path_));
    }

    static std::vector<AnnotationTask> build_tasks(const std::vector<AnnotationPair>& pairs, const std::vector<Triple>& triples,
                                                   const ConversationForest& forest) {
        std::map<std::string, const Triple*> by_reply;
        for (const auto& t : triples) by_reply[t.reply_id] = &t;
        std::vector<AnnotationTask> tasks;
        for (const auto& p : pairs) {
            auto l = by_reply.find(p.left);
            auto r = by_reply.find(p.right);
            if (l == by_reply.end() || r == by_reply.end()) throw Error(Errc::UnknownPair, "pair '" + p.pair_id + "' references an unknown triple");
            AnnotationTask task;
            task.pair_id = p.pair_id;
            task.bucket_combo = p.bucket_combo;
            task.left = render_triple(*l->second, forest);
            task.right = render_triple(*r->second, forest);
            tasks.push_back(std::move(task));
        }
        return tasks;
    }

    const std::string& id() const { return id_; }

    // Lowest-indexed pair the annotator has no active judgment for.
    std::optional<AnnotationTask> next_pair(const std::string& annotator_id) const {
        std::shared_lock lock(mutex_);
        for (const auto& task : tasks_) {
            if (!active_.count({task.pair_id, annotator_id})) return task;
        }
        return std::nullopt;
    }

    Acknowledgment submit_judgment(const std::string& pair_id, const std::string& annotator_id, PairChoice choice, bool revise) {
        if (choice == PairChoice::Tie) throw Error(Errc::Schema, "choice must be Left or Right");
        if (annotator_id.empty()) throw Error(Errc::Schema, "empty annotator id");
        std::unique_lock lock(mutex_);
        if (!index_.count(pair_id)) throw Error(Errc::UnknownPair, "pair '" + pair_id + "' is not in session '" + id_ + "'");
        const bool exists = active_.count({pair_id, annotator_id}) != 0;
        if (exists && !revise) throw Error(Errc::Duplicate, "annotator '" + annotator_id + "' already judged pair '" + pair_id + "'");
        JudgmentRecord rec{judgments_.size() + adjudication_count_ + 1, pair_id, annotator_id, choice, revise, clock_()};
        json line{{"type", "judgment"},   {"seq", rec.seq},       {"pair_id", pair_id},       {"annotator_id", annotator_id},
                  {"choice", std::string(to_string(choice))}, {"revise", revise}, {"received_at", rec.received_at}};
        append(line);
        apply_judgment(rec);
        return Acknowledgment{rec.seq, exists};
    }

    void adjudicate(const std::string& pair_id, PairChoice choice) {
        if (choice == PairChoice::Tie) throw Error(Errc::Schema, "adjudication must be Left or Right");
        std::unique_lock lock(mutex_);
        if (!index_.count(pair_id)) throw Error(Errc::UnknownPair, "pair '" + pair_id + "' is not in session '" + id_ + "'");
        const std::uint64_t seq = judgments_.size() + adjudication_count_ + 1;
        append(json{{"type", "adjudication"}, {"seq", seq}, {"pair_id", pair_id}, {"choice", std::string(to_string(choice))}, {"received_at", clock_()}});
        overrides_[pair_id] = choice;
        ++adjudication_count_;
    }

    // Active (latest) judgments in submission order.
    std::vector<PairJudgment> active_judgments() const {
        std::shared_lock lock(mutex_);
        std::vector<std::size_t> positions;
        for (const auto& [key, pos] : active_) positions.push_back(pos);
        std::sort(positions.begin(), positions.end());
        std::vector<PairJudgment> out;
        for (auto pos : positions) {
            const auto& r = judgments_[pos];
            out.push_back(PairJudgment{r.pair_id, r.annotator_id, r.choice, r.received_at});
        }
        return out;
    }

    std::vector<JudgmentRecord> judgment_log() const {
        std::shared_lock lock(mutex_);
        return judgments_;
    }

    std::map<std::string, PairChoice> overrides() const {
        std::shared_lock lock(mutex_);
        return overrides_;
    }

    // Gold labels from unanimity or adjudication.
    Adjudication gold() const {
        auto judgments = active_judgments();
        std::map<std::string, PairChoice> usable;
        std::set<std::string> judged;
        for (const auto& j : judgments) judged.insert(j.pair_id);
        for (const auto& [pair, choice] : overrides()) {
            if (judged.count(pair)) usable[pair] = choice;
        }
        return incivility::adjudicate(judgments, usable);
    }

    // For each pair judged by at least two annotators, the first two
    // annotators to judge it (by first submission) supply the two labelings.
    AgreementReport agreement_report() const {
        std::shared_lock lock(mutex_);
        std::vector<PairChoice> first_all, second_all;
        std::map<BucketCombo, std::pair<std::vector<PairChoice>, std::vector<PairChoice>>> by_bucket;
        AgreementReport report;
        for (const auto& task : tasks_) {
            auto order = annotator_order_.find(task.pair_id);
            if (order == annotator_order_.end() || order->second.size() < 2) continue;
            const PairChoice a = judgments_[active_.at({task.pair_id, order->second[0]})].choice;
            const PairChoice b = judgments_[active_.at({task.pair_id, order->second[1]})].choice;
            first_all.push_back(a);
            second_all.push_back(b);
            by_bucket[task.bucket_combo].first.push_back(a);
            by_bucket[task.bucket_combo].second.push_back(b);
            if (a != b && !overrides_.count(task.pair_id)) report.unresolved.push_back(task.pair_id);
        }
        if (first_all.empty()) throw Error(Errc::InsufficientData, "no pair has two judgments");
        report.doubly_judged = first_all.size();
        report.kappa = stats::cohen_kappa(first_all, second_all).statistic;
        report.accuracy = stats::raw_agreement(first_all, second_all);
        for (const auto& [combo, labels] : by_bucket) {
            report.per_bucket[combo] = BucketAgreement{labels.first.size(), stats::cohen_kappa(labels.first, labels.second).statistic,
                                                       stats::raw_agreement(labels.first, labels.second)};
        }
        return report;
    }

    Progress progress() const {
        std::shared_lock lock(mutex_);
        Progress p;
        p.total = tasks_.size();
        for (const auto& [key, pos] : active_) ++p.judged_by_annotator[key.second];
        p.log_length = judgments_.size() + adjudication_count_;
        return p;
    }

    const std::vector<AnnotationTask>& tasks() const { return tasks_; }

private:
    void append(const json& line) {
        if (!log_path_) return;
        if (!log_.is_open()) {
            if (log_path_->has_parent_path()) std::filesystem::create_directories(log_path_->parent_path());
            log_.open(*log_path_, std::ios::binary | std::ios::app);
            if (!log_) throw Error(Errc::Io, "cannot open judgment log " + log_path_->string());
        }
        log_ << line.dump() << '\n';
        log_.flush();
        if (!log_) throw Error(Errc::Io, "write to judgment log failed");
    }

    void apply_judgment(const JudgmentRecord& rec) {
        judgments_.push_back(rec);
        auto key = std::make_pair(rec.pair_id, rec.annotator_id);
        if (!active_.count(key)) annotator_order_[rec.pair_id].push_back(rec.annotator_id);
        active_[key] = judgments_.size() - 1;
    }

    void replay(std::string_view text) {
        for_each_jsonl(text, [&](const json& obj, std::size_t line) {
            const std::string type = obj.value("type", "judgment");
            const std::string pair_id = require_string(obj, "pair_id", line);
            if (!index_.count(pair_id)) throw Error(Errc::UnknownPair, "log references pair '" + pair_id + "'", line);
            const PairChoice choice = parse_binary_choice(require_string(obj, "choice", line), line);
            if (type == "adjudication") {
                overrides_[pair_id] = choice;
                ++adjudication_count_;
                return;
            }
            JudgmentRecord rec;
            rec.seq = obj.value("seq", static_cast<std::uint64_t>(judgments_.size() + adjudication_count_ + 1));
            rec.pair_id = pair_id;
            rec.annotator_id = require_string(obj, "annotator_id", line);
            rec.choice = choice;
            rec.revise = obj.value("revise", false);
            rec.received_at = obj.value("received_at", static_cast<std::int64_t>(0));
            apply_judgment(rec);
        });
    }

    std::string id_;
    std::vector<AnnotationTask> tasks_;
    std::map<std::string, std::size_t> index_;
    std::optional<std::filesystem::path> log_path_;
    Clock clock_;

    mutable std::shared_mutex mutex_;
    std::ofstream log_;
    std::vector<JudgmentRecord> judgments_;
    std::map<std::pair<std::string, std::string>, std::size_t> active_;  // (pair, annotator) -> judgments_ index
    std::map<std::string, std::vector<std::string>> annotator_order_;     // pair -> annotators by first judgment
    std::map<std::string, PairChoice> overrides_;
    std::size_t adjudication_count_ = 0;
};

}  // namespace incivility
