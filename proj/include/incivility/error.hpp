#pragma once
// Error type shared by every module.
//
// All domain failures are reported as incivility::Error carrying a category
// code and, for file parsing, the 1-based line number of the offending record.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace incivility {

enum class Errc {
    Parse,                   // malformed JSON / CSV record
    Schema,                  // missing or unknown field
    DuplicateId,             // repeated post id
    Structure,               // cycle in the reply graph
    Range,                   // value outside its admissible interval
    Config,                  // invalid configuration
    MissingProfile,          // follow-up post without behavior profile
    InsufficientData,        // too few observations for the requested statistic
    InsufficientPopulation,  // length bucket too small for pair sampling
    UndefinedCorrelation,    // constant input to a correlation
    DegenerateVariance,      // zero variance in a test statistic denominator
    Shape,                   // sequences of mismatched length
    NoDiscordance,           // McNemar with b + c = 0
    UnknownPair,             // pair id not in the session / judgments
    Session,                 // unknown annotation session
    Duplicate,               // repeated judgment without revise flag
    Io,                      // file system failure
};

inline const char* to_string(Errc code) {
    switch (code) {
    case Errc::Parse: return "parse error";
    case Errc::Schema: return "schema error";
    case Errc::DuplicateId: return "duplicate id";
    case Errc::Structure: return "structural error";
    case Errc::Range: return "range error";
    case Errc::Config: return "invalid configuration";
    case Errc::MissingProfile: return "missing profile";
    case Errc::InsufficientData: return "insufficient data";
    case Errc::InsufficientPopulation: return "insufficient population";
    case Errc::UndefinedCorrelation: return "undefined correlation";
    case Errc::DegenerateVariance: return "degenerate variance";
    case Errc::Shape: return "shape mismatch";
    case Errc::NoDiscordance: return "no discordant pairs";
    case Errc::UnknownPair: return "unknown pair";
    case Errc::Session: return "session error";
    case Errc::Duplicate: return "duplicate judgment";
    case Errc::Io: return "i/o error";
    }
    return "error";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message, std::optional<std::size_t> line = std::nullopt)
        : std::runtime_error(compose(code, message, line)), code_(code), line_(line) {}

    Errc code() const noexcept { return code_; }
    std::optional<std::size_t> line() const noexcept { return line_; }

private:
    static std::string compose(Errc code, const std::string& message, std::optional<std::size_t> line) {
        std::string out = to_string(code);
        if (line) out += " at line " + std::to_string(*line);
        out += ": " + message;
        return out;
    }

    Errc code_;
    std::optional<std::size_t> line_;
};

}  // namespace incivility
