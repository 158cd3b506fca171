#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pesa/domain.hpp"
#include "pesa/errors.hpp"

namespace pesa {

// Canonical line format. One record per line, UTF-8 JSON with fixed key
// order: id, prompt, essay, claims, grounds, annotator_model, created_at,
// and an optional trailing stage_meta object. Plans are arrays of strings;
// both arrays are empty only for end-to-end generation outputs.

/// A decoded line in the canonical record format. This is the on-disk shape
/// shared by pseudo-labeled records and pipeline outputs.
struct DecodedRecord {
    std::string id;
    std::string prompt_text;
    std::string essay_text;
    std::vector<std::string> claims;
    std::vector<std::string> grounds;
    std::string annotator_model;
    std::string created_at;
    ordered_json stage_meta;  // null when absent

    bool operator==(const DecodedRecord&) const = default;

    bool has_plans() const { return !claims.empty() || !grounds.empty(); }

    PseudoLabeledRecord as_pseudo() const {
        PseudoLabeledRecord r;
        r.prompt = WritingPrompt(id, prompt_text);
        r.essay = Essay(essay_text);
        r.claim_plan = ClaimPlan(claims, kNoClaimCap);
        r.ground_plan = GroundPlan(grounds);
        r.annotator_model = annotator_model;
        r.created_at = created_at;
        r.stage_meta = stage_meta;
        check_record_invariants(r);
        return r;
    }
};

namespace detail {

inline void validate_plan_arrays(const std::vector<std::string>& claims,
                                 const std::vector<std::string>& grounds) {
    // Empty plans are legal only as a pair (end-to-end outputs carry none).
    if (claims.empty() && grounds.empty()) return;
    if (claims.size() != grounds.size())
        throw InvariantViolation("length mismatch: " + std::to_string(claims.size()) +
                                 " claims vs " + std::to_string(grounds.size()) +
                                 " grounds");
    for (std::size_t i = 0; i < claims.size(); ++i)
        if (is_blank(claims[i]))
            throw InvariantViolation("empty claim at index " + std::to_string(i));
    for (std::size_t i = 0; i < grounds.size(); ++i)
        if (is_blank(grounds[i]))
            throw InvariantViolation("empty ground at index " + std::to_string(i));
}

inline std::string encode_fields(const std::string& id, const std::string& prompt_text,
                                 const std::string& essay_text,
                                 const std::vector<std::string>& claims,
                                 const std::vector<std::string>& grounds,
                                 const std::string& annotator_model,
                                 const std::string& created_at,
                                 const ordered_json& stage_meta) {
    if (trim(prompt_text).empty()) throw InvariantViolation("prompt text is empty");
    if (is_blank(essay_text)) throw InvariantViolation("essay text is empty");
    validate_plan_arrays(claims, grounds);
    ordered_json j;
    j["id"] = id;
    j["prompt"] = prompt_text;
    j["essay"] = essay_text;
    j["claims"] = claims;
    j["grounds"] = grounds;
    j["annotator_model"] = annotator_model;
    j["created_at"] = created_at;
    if (!stage_meta.is_null()) j["stage_meta"] = stage_meta;
    return j.dump();
}

}  // namespace detail

inline std::string encode_record(const PseudoLabeledRecord& r) {
    check_record_invariants(r);
    return detail::encode_fields(r.prompt.id, r.prompt.text, r.essay.text,
                                 r.claim_plan.claims, r.ground_plan.grounds,
                                 r.annotator_model, r.created_at, r.stage_meta);
}

inline ordered_json stage_meta_of(const PipelineOutput& out) {
    ordered_json meta;
    meta["mode"] = out.end_to_end() ? "end_to_end" : "planned";
    for (const auto& s : out.stages) {
        ordered_json sj;
        sj["model"] = s.model;
        sj["template"] = s.template_hash;
        sj["raw"] = s.raw;
        sj["warnings"] = s.warnings;
        meta[s.stage] = sj;
    }
    return meta;
}

inline std::string encode_record(const PipelineOutput& out) {
    check_output_invariants(out);
    std::string generator;
    for (const auto& s : out.stages)
        if (s.stage == "essay") generator = s.model;
    return detail::encode_fields(
        out.prompt.id, out.prompt.text, out.essay.text,
        out.claim_plan ? out.claim_plan->claims : std::vector<std::string>{},
        out.ground_plan ? out.ground_plan->grounds : std::vector<std::string>{},
        generator, out.created_at, stage_meta_of(out));
}

/// Decodes one canonical line. Throws ParseError (with the byte offset of the
/// failure) on malformed JSON or schema violations, and InvariantViolation for
/// well-formed records that break the data-model invariants.
inline DecodedRecord decode_record(const std::string& line) {
    ordered_json j;
    try {
        j = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(e.what(), e.byte);
    }
    if (!j.is_object()) throw ParseError("record line is not a JSON object");

    static const char* required[] = {"id",     "prompt",          "essay",
                                     "claims", "grounds",         "annotator_model",
                                     "created_at"};
    for (const char* key : required)
        if (!j.contains(key)) throw ParseError(std::string("missing field: ") + key);
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        bool known = k == "stage_meta";
        for (const char* key : required) known = known || k == key;
        if (!known) throw ParseError("unknown field: " + k);
    }

    DecodedRecord r;
    try {
        r.id = j.at("id").get<std::string>();
        r.prompt_text = j.at("prompt").get<std::string>();
        r.essay_text = j.at("essay").get<std::string>();
        r.claims = j.at("claims").get<std::vector<std::string>>();
        r.grounds = j.at("grounds").get<std::vector<std::string>>();
        r.annotator_model = j.at("annotator_model").get<std::string>();
        r.created_at = j.at("created_at").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(e.what());
    }
    if (j.contains("stage_meta")) r.stage_meta = j.at("stage_meta");

    if (r.id.empty()) throw InvariantViolation("record id is empty");
    if (trim(r.prompt_text).empty()) throw InvariantViolation("prompt text is empty");
    if (is_blank(r.essay_text)) throw InvariantViolation("essay text is empty");
    detail::validate_plan_arrays(r.claims, r.grounds);
    return r;
}

}  // namespace pesa
