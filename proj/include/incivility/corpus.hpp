#pragma once
// Post records, reply-tree reconstruction, and triple extraction.
//
// A triple pairs a hateful post with one of its direct, non-moderated replies
// and the follow-up conversation: every strict descendant of that reply.

#include "incivility/error.hpp"
#include "incivility/util.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace incivility {

struct PostRecord {
    std::string id;
    std::optional<std::string> parent_id;
    std::string author_id;
    std::string subreddit;
    std::int64_t created_at = 0;
    std::string body;
    std::optional<bool> hateful;
    std::optional<bool> moderated;
    std::size_t line = 0;  // source line, 0 when constructed in memory
};

inline const std::set<std::string>& default_moderation_markers() {
    static const std::set<std::string> markers{"deleted", "removed"};
    return markers;
}

// Chronological order with lexicographic id as the tie breaker.
inline bool chronological_less(const PostRecord& a, const PostRecord& b) {
    if (a.created_at != b.created_at) return a.created_at < b.created_at;
    return a.id < b.id;
}

inline json to_json(const PostRecord& post) {
    json j{{"id", post.id},
           {"author_id", post.author_id},
           {"subreddit", post.subreddit},
           {"created_at", post.created_at},
           {"body", post.body}};
    j["parent_id"] = post.parent_id ? json(*post.parent_id) : json(nullptr);
    if (post.hateful) j["hateful"] = *post.hateful;
    if (post.moderated) j["moderated"] = *post.moderated;
    return j;
}

inline PostRecord post_from_json(const json& obj, std::size_t line) {
    PostRecord post;
    post.line = line;
    post.id = require_string(obj, "id", line);
    if (post.id.empty()) throw Error(Errc::Schema, "empty id", line);
    if (auto it = obj.find("parent_id"); it != obj.end() && !it->is_null()) {
        if (it->is_string()) {
            post.parent_id = it->get<std::string>();
        } else if (it->is_number_integer()) {
            post.parent_id = std::to_string(it->get<long long>());
        } else {
            throw Error(Errc::Schema, "field 'parent_id' must be a string", line);
        }
        if (post.parent_id->empty()) post.parent_id.reset();
    }
    if (post.parent_id && *post.parent_id == post.id) throw Error(Errc::Schema, "post '" + post.id + "' is its own parent", line);
    post.author_id = require_string(obj, "author_id", line);
    post.subreddit = require_string(obj, "subreddit", line);
    const json& created = require_field(obj, "created_at", line);
    if (!created.is_number_integer()) throw Error(Errc::Schema, "field 'created_at' must be an integer", line);
    post.created_at = created.get<std::int64_t>();
    if (post.created_at < 0) throw Error(Errc::Range, "negative created_at", line);
    const json& body = require_field(obj, "body", line);
    if (!body.is_string()) throw Error(Errc::Schema, "field 'body' must be a string", line);
    post.body = body.get<std::string>();
    for (const char* key : {"hateful", "moderated"}) {
        auto it = obj.find(key);
        if (it == obj.end() || it->is_null()) continue;
        if (!it->is_boolean()) throw Error(Errc::Schema, std::string("field '") + key + "' must be boolean", line);
        if (std::string_view(key) == "hateful") post.hateful = it->get<bool>();
        else post.moderated = it->get<bool>();
    }
    return post;
}

// One record per non-blank line of a JSON Lines dump.
inline std::string posts_to_jsonl(const std::vector<PostRecord>& posts) {
    std::string out;
    for (const auto& p : posts) out += to_json(p).dump() + "\n";
    return out;
}

inline std::vector<PostRecord> parse_posts(std::string_view jsonl) {
    std::vector<PostRecord> posts;
    std::unordered_map<std::string, std::size_t> seen;
    for_each_jsonl(jsonl, [&](const json& obj, std::size_t line) {
        PostRecord post = post_from_json(obj, line);
        auto [it, inserted] = seen.emplace(post.id, line);
        if (!inserted) {
            throw Error(Errc::DuplicateId, "id '" + post.id + "' first seen at line " + std::to_string(it->second), line);
        }
        posts.push_back(std::move(post));
    });
    return posts;
}

class ConversationForest {
public:
    const std::map<std::string, PostRecord>& posts() const { return posts_; }
    const std::vector<std::string>& roots() const { return roots_; }

    bool contains(const std::string& id) const { return posts_.count(id) != 0; }

    const PostRecord& post(const std::string& id) const {
        auto it = posts_.find(id);
        if (it == posts_.end()) throw Error(Errc::Schema, "unknown post '" + id + "'");
        return it->second;
    }

    const std::vector<std::string>& children(const std::string& id) const {
        static const std::vector<std::string> none;
        auto it = children_.find(id);
        return it == children_.end() ? none : it->second;
    }

    // A post whose parent_id names a post missing from the dump.
    bool is_dangling(const std::string& id) const { return dangling_.count(id) != 0; }
    const std::set<std::string>& dangling() const { return dangling_; }

    // Parent inside the forest, if any.
    const PostRecord* parent(const std::string& id) const {
        const PostRecord& p = post(id);
        if (!p.parent_id) return nullptr;
        auto it = posts_.find(*p.parent_id);
        return it == posts_.end() ? nullptr : &it->second;
    }

    // Strict descendants in (created_at, id) order.
    std::vector<std::string> descendants(const std::string& id) const {
        std::vector<const PostRecord*> found;
        std::vector<std::string> stack(children(id).rbegin(), children(id).rend());
        while (!stack.empty()) {
            std::string cur = std::move(stack.back());
            stack.pop_back();
            found.push_back(&post(cur));
            const auto& kids = children(cur);
            stack.insert(stack.end(), kids.rbegin(), kids.rend());
        }
        std::sort(found.begin(), found.end(), [](const PostRecord* a, const PostRecord* b) { return chronological_less(*a, *b); });
        std::vector<std::string> ids;
        ids.reserve(found.size());
        for (const auto* p : found) ids.push_back(p->id);
        return ids;
    }

    // Number of edges from the post up to `ancestor`; nullopt if not an ancestor.
    std::optional<std::size_t> depth_below(const std::string& id, const std::string& ancestor) const {
        std::size_t depth = 0;
        const PostRecord* cur = &post(id);
        while (cur->id != ancestor) {
            cur = parent(cur->id);
            if (!cur) return std::nullopt;
            ++depth;
        }
        return depth;
    }

private:
    friend ConversationForest build_forest(std::vector<PostRecord> posts);

    std::map<std::string, PostRecord> posts_;
    std::map<std::string, std::vector<std::string>> children_;
    std::vector<std::string> roots_;
    std::set<std::string> dangling_;
};

inline ConversationForest build_forest(std::vector<PostRecord> posts) {
    ConversationForest forest;
    for (auto& p : posts) {
        std::string id = p.id;
        if (!forest.posts_.emplace(id, std::move(p)).second) throw Error(Errc::DuplicateId, "id '" + id + "'");
    }

    // Every post's parent chain must terminate; a chain that revisits an
    // in-progress post is a cycle.
    enum class Mark { Fresh, Active, Done };
    std::unordered_map<std::string, Mark> mark;
    for (const auto& [id, post] : forest.posts_) mark[id] = Mark::Fresh;
    for (const auto& [start, unused] : forest.posts_) {
        std::vector<std::string> chain;
        std::string cur = start;
        while (true) {
            auto it = mark.find(cur);
            if (it == mark.end() || it->second == Mark::Done) break;
            if (it->second == Mark::Active) {
                auto from = std::find(chain.begin(), chain.end(), cur);
                std::string listing;
                for (auto c = from; c != chain.end(); ++c) listing += *c + " -> ";
                listing += cur;
                throw Error(Errc::Structure, "reply cycle " + listing);
            }
            it->second = Mark::Active;
            chain.push_back(cur);
            const auto& parent = forest.posts_.at(cur).parent_id;
            if (!parent) break;
            cur = *parent;
        }
        for (const auto& c : chain) mark[c] = Mark::Done;
    }

    std::vector<const PostRecord*> roots;
    for (const auto& [id, post] : forest.posts_) {
        if (!post.parent_id) {
            roots.push_back(&post);
        } else if (!forest.posts_.count(*post.parent_id)) {
            roots.push_back(&post);
            forest.dangling_.insert(id);
        } else {
            forest.children_[*post.parent_id].push_back(id);
        }
    }
    std::sort(roots.begin(), roots.end(), [](const PostRecord* a, const PostRecord* b) { return chronological_less(*a, *b); });
    for (const auto* r : roots) forest.roots_.push_back(r->id);
    for (auto& [parent, kids] : forest.children_) {
        std::sort(kids.begin(), kids.end(), [&](const std::string& a, const std::string& b) {
            return chronological_less(forest.posts_.at(a), forest.posts_.at(b));
        });
    }
    return forest;
}

struct Triple {
    std::string hateful_post_id;
    std::string reply_id;
    std::vector<std::string> followup_ids;

    bool operator==(const Triple&) const = default;
};

inline bool is_moderated(const PostRecord& post, const std::set<std::string>& markers) {
    if (post.moderated && *post.moderated) return true;
    return markers.count(normalize_marker(post.body)) != 0;
}

inline std::vector<Triple> extract_triples(const ConversationForest& forest,
                                           const std::set<std::string>& moderation_markers = default_moderation_markers()) {
    std::vector<const PostRecord*> hateful;
    for (const auto& [id, post] : forest.posts()) {
        if (post.hateful.value_or(false) && !forest.is_dangling(id)) hateful.push_back(&post);
    }
    std::sort(hateful.begin(), hateful.end(), [](const PostRecord* a, const PostRecord* b) { return chronological_less(*a, *b); });

    std::vector<Triple> triples;
    for (const auto* h : hateful) {
        for (const auto& reply_id : forest.children(h->id)) {
            if (is_moderated(forest.post(reply_id), moderation_markers)) continue;
            triples.push_back(Triple{h->id, reply_id, forest.descendants(reply_id)});
        }
    }
    return triples;
}

// The reply followed by its follow-up posts: the posts one conversation spans.
inline std::vector<const PostRecord*> conversation_posts(const ConversationForest& forest, const Triple& triple) {
    std::vector<const PostRecord*> out;
    out.reserve(triple.followup_ids.size() + 1);
    out.push_back(&forest.post(triple.reply_id));
    for (const auto& id : triple.followup_ids) out.push_back(&forest.post(id));
    return out;
}

inline json to_json(const Triple& t) {
    return json{{"hateful_post_id", t.hateful_post_id}, {"reply_id", t.reply_id}, {"followup_ids", t.followup_ids}};
}

inline std::string triples_to_jsonl(const std::vector<Triple>& triples) {
    std::string out;
    for (const auto& t : triples) {
        out += to_json(t).dump();
        out += '\n';
    }
    return out;
}

inline std::vector<Triple> parse_triples(std::string_view jsonl) {
    std::vector<Triple> triples;
    for_each_jsonl(jsonl, [&](const json& obj, std::size_t line) {
        Triple t;
        t.hateful_post_id = require_string(obj, "hateful_post_id", line);
        t.reply_id = require_string(obj, "reply_id", line);
        const json& follow = require_field(obj, "followup_ids", line);
        if (!follow.is_array()) throw Error(Errc::Schema, "followup_ids must be an array", line);
        for (const auto& id : follow) {
            if (!id.is_string()) throw Error(Errc::Schema, "followup_ids entries must be strings", line);
            t.followup_ids.push_back(id.get<std::string>());
        }
        triples.push_back(std::move(t));
    });
    return triples;
}

}  // namespace incivility
