#pragma once
// Small shared helpers: text normalization, JSON Lines I/O, CSV output,
// and a platform-independent seeded shuffle.

#include "incivility/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace incivility {

using json = nlohmann::json;

inline std::string to_lower_ascii(std::string_view text) {
    std::string out(text);
    for (auto& ch : out) {
        if (static_cast<unsigned char>(ch) < 128) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
    return out;
}

inline std::string_view trim(std::string_view text) {
    auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    while (!text.empty() && is_space(text.front())) text.remove_prefix(1);
    while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
    return text;
}

// Trimmed, lowercased, with surrounding brackets removed: "  [Removed] " -> "removed".
inline std::string normalize_marker(std::string_view body) {
    std::string_view t = trim(body);
    while (!t.empty() && (t.front() == '[' || t.front() == '(' || t.front() == '{')) t.remove_prefix(1);
    while (!t.empty() && (t.back() == ']' || t.back() == ')' || t.back() == '}')) t.remove_suffix(1);
    return to_lower_ascii(trim(t));
}

// Lowercase whitespace-split tokens with leading/trailing ASCII punctuation stripped.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::string_view tok = text.substr(start, i - start);
        auto is_punct = [](char c) {
            auto u = static_cast<unsigned char>(c);
            return u < 128 && std::ispunct(u) != 0;
        };
        while (!tok.empty() && is_punct(tok.front())) tok.remove_prefix(1);
        while (!tok.empty() && is_punct(tok.back())) tok.remove_suffix(1);
        if (!tok.empty()) tokens.push_back(to_lower_ascii(tok));
    }
    return tokens;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::Io, "cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

// Calls visit(object, line_number) for every non-blank line. Malformed JSON or
// a non-object line raises a parse error carrying the line number.
inline void for_each_jsonl(std::string_view text, const std::function<void(const json&, std::size_t)>& visit) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        ++line_no;
        std::string_view line = trim(text.substr(pos, end - pos));
        if (!line.empty()) {
            json obj = json::parse(line.begin(), line.end(), nullptr, false);
            if (obj.is_discarded()) throw Error(Errc::Parse, "malformed JSON", line_no);
            if (!obj.is_object()) throw Error(Errc::Parse, "expected a JSON object", line_no);
            visit(obj, line_no);
        }
        if (end == text.size()) break;
        pos = end + 1;
    }
}

inline std::string to_jsonl(const std::vector<json>& rows) {
    std::string out;
    for (const auto& row : rows) {
        out += row.dump();
        out += '\n';
    }
    return out;
}

// Field accessors raising schema errors with the record's line number.
inline const json& require_field(const json& obj, const char* key, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) throw Error(Errc::Schema, std::string("missing field '") + key + "'", line);
    return *it;
}

inline std::string require_string(const json& obj, const char* key, std::size_t line) {
    const json& v = require_field(obj, key, line);
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    throw Error(Errc::Schema, std::string("field '") + key + "' must be a string", line);
}

inline std::string format_fixed(double value, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, value);
    std::string out(buf);
    if (out == "-0" || out.find_first_not_of("-0.") == std::string::npos) {
        if (!out.empty() && out.front() == '-') out.erase(0, 1);
    }
    return out;
}

inline std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::string csv_row(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += csv_escape(fields[i]);
    }
    out += '\n';
    return out;
}

// Seeded generator with draws that do not depend on the standard library's
// distribution implementations, so seeded outputs match across toolchains.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

    // Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound) {
        if (bound <= 1) return 0;
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t draw;
        do {
            draw = engine_();
        } while (draw >= limit);
        return draw % bound;
    }

    // Uniform real in [0, 1).
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool chance(double p) { return unit() < p; }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace incivility
