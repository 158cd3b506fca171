#pragma once

#include <cctype>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pesa/errors.hpp"

namespace pesa {

using ordered_json = nlohmann::ordered_json;

inline std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline bool is_blank(std::string_view s) {
    for (char c : s) {
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

/// Splits text into paragraphs: maximal runs of non-blank lines separated by
/// one or more blank lines. Each paragraph is trimmed; lines inside a
/// paragraph keep their single newlines. CRLF input is tolerated.
inline std::vector<std::string> split_paragraphs(const std::string& text) {
    std::vector<std::string> paragraphs;
    std::string current;
    std::size_t pos = 0;
    auto flush = [&] {
        std::string p = trim(current);
        if (!p.empty()) paragraphs.push_back(std::move(p));
        current.clear();
    };
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view line(text.data() + pos,
                              (nl == std::string::npos ? text.size() : nl) - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (is_blank(line)) {
            flush();
        } else {
            if (!current.empty()) current += '\n';
            current.append(line);
        }
        if (nl == std::string::npos) break;
        pos = nl + 1;
    }
    flush();
    if (paragraphs.empty()) throw EmptyTextError();
    return paragraphs;
}

inline std::string join_paragraphs(const std::vector<std::string>& paragraphs) {
    std::string out;
    for (std::size_t i = 0; i < paragraphs.size(); ++i) {
        if (i > 0) out += "\n\n";
        out += paragraphs[i];
    }
    return out;
}

/// The writing prompt X: a debate topic the essay must argue.
struct WritingPrompt {
    std::string id;
    std::string text;

    WritingPrompt() = default;
    WritingPrompt(std::string id, std::string text_in)
        : id(std::move(id)), text(trim(text_in)) {
        if (text.empty()) throw InvariantViolation("writing prompt text is empty");
    }

    bool operator==(const WritingPrompt&) const = default;
};

/// The argumentative essay Y, normalized so that text is always the blank-line
/// join of its paragraphs. Construction from whitespace-only input fails.
struct Essay {
    std::string text;
    std::vector<std::string> paragraphs;

    Essay() = default;
    explicit Essay(const std::string& raw_text)
        : paragraphs(split_paragraphs(raw_text)) {
        text = join_paragraphs(paragraphs);
    }

    bool operator==(const Essay&) const = default;
};

inline constexpr std::size_t kDefaultMaxClaims = 6;

/// No-cap sentinel for contexts (the codec) where the claim cap is a run-time
/// configuration concern rather than a structural invariant.
inline constexpr std::size_t kNoClaimCap = static_cast<std::size_t>(-1);

/// First planning tier: the essay's ordered major claims.
struct ClaimPlan {
    std::vector<std::string> claims;

    ClaimPlan() = default;
    explicit ClaimPlan(std::vector<std::string> claims_in,
                       std::size_t max_claims = kDefaultMaxClaims)
        : claims(std::move(claims_in)) {
        if (claims.empty()) throw InvariantViolation("claim plan has no claims");
        if (claims.size() > max_claims)
            throw InvariantViolation("claim plan exceeds max_claims (" +
                                     std::to_string(max_claims) + ")");
        for (std::size_t i = 0; i < claims.size(); ++i) {
            if (is_blank(claims[i]))
                throw InvariantViolation("claim " + std::to_string(i) + " is empty");
        }
    }

    bool operator==(const ClaimPlan&) const = default;
};

/// Second planning tier: per-claim grounds, index-aligned with a ClaimPlan.
struct GroundPlan {
    std::vector<std::string> grounds;

    GroundPlan() = default;
    explicit GroundPlan(std::vector<std::string> grounds_in)
        : grounds(std::move(grounds_in)) {
        if (grounds.empty()) throw InvariantViolation("ground plan has no grounds");
        for (std::size_t i = 0; i < grounds.size(); ++i) {
            if (is_blank(grounds[i]))
                throw InvariantViolation("ground " + std::to_string(i) + " is empty");
        }
    }

    bool operator==(const GroundPlan&) const = default;
};

/// Result of validate_alignment. ok() is true iff the two plans form a valid
/// 1:1 claim/ground pairing.
struct AlignmentResult {
    enum class Kind { Ok, LengthMismatch, EmptyEntry };
    enum class Tier { Claim, Ground };

    Kind kind = Kind::Ok;
    std::size_t expected = 0;  // LengthMismatch
    std::size_t actual = 0;    // LengthMismatch
    Tier tier = Tier::Claim;   // EmptyEntry
    std::size_t index = 0;     // EmptyEntry

    bool ok() const { return kind == Kind::Ok; }

    std::string describe() const {
        switch (kind) {
            case Kind::Ok:
                return "ok";
            case Kind::LengthMismatch:
                return "length mismatch: " + std::to_string(expected) + " claims vs " +
                       std::to_string(actual) + " grounds";
            case Kind::EmptyEntry:
                return std::string("empty ") +
                       (tier == Tier::Claim ? "claim" : "ground") + " at index " +
                       std::to_string(index);
        }
        return "ok";
    }
};

/// Checks the 1:1 claim/ground pairing: equal lengths, no empty entries.
/// Reports the first violation found, claims tier first.
inline AlignmentResult validate_alignment(const ClaimPlan& claim_plan,
                                          const GroundPlan& ground_plan) {
    AlignmentResult r;
    if (claim_plan.claims.size() != ground_plan.grounds.size()) {
        r.kind = AlignmentResult::Kind::LengthMismatch;
        r.expected = claim_plan.claims.size();
        r.actual = ground_plan.grounds.size();
        return r;
    }
    for (std::size_t i = 0; i < claim_plan.claims.size(); ++i) {
        if (is_blank(claim_plan.claims[i])) {
            r.kind = AlignmentResult::Kind::EmptyEntry;
            r.tier = AlignmentResult::Tier::Claim;
            r.index = i;
            return r;
        }
    }
    for (std::size_t i = 0; i < ground_plan.grounds.size(); ++i) {
        if (is_blank(ground_plan.grounds[i])) {
            r.kind = AlignmentResult::Kind::EmptyEntry;
            r.tier = AlignmentResult::Tier::Ground;
            r.index = i;
            return r;
        }
    }
    return r;
}

/// One entry of the pseudo-labeled dataset: a gold (prompt, essay) pair plus
/// the extracted claim/ground plans and annotation provenance.
struct PseudoLabeledRecord {
    WritingPrompt prompt;
    Essay essay;
    ClaimPlan claim_plan;
    GroundPlan ground_plan;
    std::string annotator_model;
    std::string created_at;          // ISO-8601 UTC
    ordered_json stage_meta;         // optional provenance, null when absent

    bool operator==(const PseudoLabeledRecord& o) const {
        return prompt == o.prompt && essay == o.essay && claim_plan == o.claim_plan &&
               ground_plan == o.ground_plan && annotator_model == o.annotator_model &&
               created_at == o.created_at && stage_meta == o.stage_meta;
    }
};

inline void check_record_invariants(const PseudoLabeledRecord& r) {
    auto a = validate_alignment(r.claim_plan, r.ground_plan);
    if (!a.ok()) throw InvariantViolation(a.describe());
    if (r.essay.paragraphs.empty()) throw InvariantViolation("essay has no paragraphs");
}

/// Per-stage generation provenance. elapsed_s is in-memory only; it is never
/// serialized so that identical runs encode byte-identically.
struct StageRecord {
    std::string stage;  // claims | grounds | essay
    std::string model;
    std::string template_hash;
    ordered_json raw;   // raw model text: string, or array of strings for per-claim calls
    std::vector<std::string> warnings;
    double elapsed_s = 0.0;
};

/// Result of one pipeline run. Plans are absent in end-to-end mode, in which
/// case the essay was generated from the prompt alone.
struct PipelineOutput {
    WritingPrompt prompt;
    std::optional<ClaimPlan> claim_plan;
    std::optional<GroundPlan> ground_plan;
    Essay essay;
    std::vector<StageRecord> stages;
    std::string created_at;  // empty unless the caller supplies a clock

    bool end_to_end() const { return !claim_plan.has_value(); }
};

inline void check_output_invariants(const PipelineOutput& out) {
    if (out.claim_plan.has_value() != out.ground_plan.has_value())
        throw InvariantViolation("pipeline output has only one of the two plans");
    if (out.claim_plan) {
        auto a = validate_alignment(*out.claim_plan, *out.ground_plan);
        if (!a.ok()) throw InvariantViolation(a.describe());
    }
}

}  // namespace pesa
