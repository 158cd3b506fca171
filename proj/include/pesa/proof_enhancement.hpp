#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pesa/backend.hpp"
#include "pesa/domain.hpp"
#include "pesa/errors.hpp"
#include "pesa/templates.hpp"

namespace pesa {

enum class Stage { Claims, Grounds, Essay };

inline const char* stage_name(Stage s) {
    switch (s) {
        case Stage::Claims: return "claims";
        case Stage::Grounds: return "grounds";
        case Stage::Essay: return "essay";
    }
    return "claims";
}

inline Stage stage_from_name(const std::string& name) {
    if (name == "claims") return Stage::Claims;
    if (name == "grounds") return Stage::Grounds;
    if (name == "essay") return Stage::Essay;
    throw ConfigError("unknown stage: " + name);
}

// -- numbered-list parsing ----------------------------------------------------

struct ParsedList {
    std::vector<std::string> items;
    std::vector<std::string> warnings;
};

namespace detail {

// Recognizes "N." / "N)" (N up to 3 digits, whitespace or end after the
// marker) and "-" / "•" bullets. Returns the item text after the marker, or
// nullopt for a non-marker line.
inline std::optional<std::pair<std::string, std::optional<long>>> match_list_marker(
    std::string_view line) {
    std::size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i < line.size() && (line[i] == '-' || line.substr(i).rfind("\xe2\x80\xa2", 0) == 0)) {
        std::size_t after = i + (line[i] == '-' ? 1 : 3);
        if (after >= line.size() || line[after] == ' ' || line[after] == '\t')
            return {{trim(line.substr(after)), std::nullopt}};
        return std::nullopt;
    }
    std::size_t d = i;
    while (d < line.size() && std::isdigit(static_cast<unsigned char>(line[d]))) ++d;
    std::size_t ndigits = d - i;
    if (ndigits == 0 || ndigits > 3) return std::nullopt;
    if (d >= line.size() || (line[d] != '.' && line[d] != ')')) return std::nullopt;
    std::size_t after = d + 1;
    if (after < line.size() && line[after] != ' ' && line[after] != '\t')
        return std::nullopt;
    long number = std::stol(std::string(line.substr(i, ndigits)));
    return {{trim(line.substr(after > line.size() ? line.size() : after)), number}};
}

}  // namespace detail

/// Parses a model-produced plan into ordered items. Items start at "N." /
/// "N)" / "-" / "•" markers; following non-marker lines attach to the current
/// item. Leading prose before the first marker is skipped with a warning;
/// non-contiguous numbering is tolerated (textual order wins) but flagged.
inline ParsedList parse_numbered_list(const std::string& text) {
    ParsedList out;
    std::vector<long> numbers;
    std::string current;
    bool in_item = false;
    bool saw_preamble = false;

    auto flush = [&] {
        if (!in_item) return;
        out.items.push_back(trim(current));
        current.clear();
    };

    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view line(text.data() + pos,
                              (nl == std::string::npos ? text.size() : nl) - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (auto marker = detail::match_list_marker(line)) {
            flush();
            in_item = true;
            current = marker->first;
            if (marker->second) numbers.push_back(*marker->second);
        } else if (!is_blank(line)) {
            if (in_item) {
                if (!current.empty()) current += '\n';
                current.append(trim(line));
            } else {
                saw_preamble = true;
            }
        }
        if (nl == std::string::npos) break;
        pos = nl + 1;
    }
    flush();

    if (out.items.empty()) throw ParseError("no list items recognized");
    if (saw_preamble) out.warnings.push_back("LeadingTextIgnored");
    for (std::size_t i = 0; i < numbers.size(); ++i) {
        if (numbers[i] != static_cast<long>(i) + 1) {
            out.warnings.push_back("NonContiguousNumbering");
            break;
        }
    }
    for (std::size_t i = 0; i < out.items.size(); ++i)
        if (out.items[i].empty())
            out.warnings.push_back("EmptyItem:" + std::to_string(i));
    return out;
}

/// Canonical plan rendering: "1. item" per line, continuation lines kept
/// verbatim. parse_numbered_list(render_plan(p)) == p for well-formed plans.
inline std::string render_plan(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += '\n';
        out += std::to_string(i + 1) + ". " + items[i];
    }
    return out;
}

// -- stage bindings -------------------------------------------------------------

/// One inference stage bound to an endpoint. The three stages may target
/// three different models.
struct StageBinding {
    std::shared_ptr<Backend> backend;
    RetryPolicy retry{};
    double temperature = 0.7;
    int max_new_tokens = 1024;
};

struct PipelineBindings {
    StageBinding claims;
    StageBinding grounds;
    StageBinding essay;

    void validate() const {
        if (!claims.backend || !grounds.backend || !essay.backend)
            throw InvariantViolation("all three stages must be bound");
    }
};

struct PipelineOptions {
    std::size_t max_claims = kDefaultMaxClaims;
    bool single_call_grounds = false;
    bool end_to_end = false;
    std::string created_at;  // stamped into outputs when non-empty
};

/// Stage failure carrying whatever artifacts were already produced.
class PipelineStageError : public Error {
public:
    PipelineStageError(Stage stage, const std::string& what,
                       std::optional<ClaimPlan> partial_claims = std::nullopt,
                       std::optional<GroundPlan> partial_grounds = std::nullopt)
        : Error(std::string("pipeline stage '") + stage_name(stage) + "' failed: " + what),
          stage(stage),
          partial_claims(std::move(partial_claims)),
          partial_grounds(std::move(partial_grounds)) {}
    Stage stage;
    std::optional<ClaimPlan> partial_claims;
    std::optional<GroundPlan> partial_grounds;
};

// -- prompt builders ---------------------------------------------------------------

inline std::string build_claims_prompt(const StagePromptSet& templates,
                                       const WritingPrompt& prompt) {
    return templates.claims_template.render({{"prompt", prompt.text}});
}

/// Renders the grounds-stage prompt. With a focal index the full claim list is
/// kept (the plan section stays byte-identical) and a focus directive is
/// appended after the template body.
inline std::string build_grounds_prompt(const StagePromptSet& templates,
                                        const WritingPrompt& prompt,
                                        const ClaimPlan& claims,
                                        std::optional<std::size_t> focal_index = std::nullopt) {
    std::string rendered = templates.grounds_template.render(
        {{"prompt", prompt.text}, {"claims", render_plan(claims.claims)}});
    if (focal_index) {
        if (*focal_index >= claims.claims.size())
            throw InvariantViolation("focal index out of range");
        rendered += "\n\nFocus directive: write only the supporting ground for claim " +
                    std::to_string(*focal_index + 1) +
                    ". Answer with that single ground paragraph, no numbering.";
    }
    return rendered;
}

inline std::string build_essay_prompt(const StagePromptSet& templates,
                                      const WritingPrompt& prompt,
                                      const ClaimPlan& claims,
                                      const GroundPlan& grounds) {
    return templates.essay_template.render({{"prompt", prompt.text},
                                            {"claims", render_plan(claims.claims)},
                                            {"grounds", render_plan(grounds.grounds)}});
}

// -- stage operations -----------------------------------------------------------------

struct ClaimsResult {
    ClaimPlan plan;
    StageRecord meta;
};

struct GroundsResult {
    GroundPlan plan;
    StageRecord meta;
};

struct EssayResult {
    Essay essay;
    StageRecord meta;
};

namespace detail {

inline GenerationRequest stage_request(const StageBinding& binding, std::string tag,
                                       std::string user_text) {
    GenerationRequest req;
    req.user_text = std::move(user_text);
    req.temperature = binding.temperature;
    req.max_new_tokens = binding.max_new_tokens;
    req.request_tag = std::move(tag);
    return req;
}

class StageTimer {
public:
    StageTimer() : start_(std::chrono::steady_clock::now()) {}
    double elapsed_s() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

/// Claims planning: one call, numbered-list parse, one re-ask with an explicit
/// list-format reminder. Plans beyond max_claims are truncated with a warning.
inline ClaimsResult plan_claims(const WritingPrompt& prompt, const StageBinding& binding,
                                const StagePromptSet& templates,
                                const PipelineOptions& options = {}) {
    if (is_blank(prompt.text)) throw InvariantViolation("prompt text is empty");
    detail::StageTimer timer;
    std::string user_text = build_claims_prompt(templates, prompt);
    auto response =
        complete_with_retry(*binding.backend,
                            detail::stage_request(binding, "claims", user_text),
                            binding.retry);

    ParsedList parsed;
    bool ok = false;
    try {
        parsed = parse_numbered_list(response.text);
        ok = true;
    } catch (const ParseError&) {
    }
    if (ok) {
        for (const auto& item : parsed.items)
            if (item.empty()) {
                ok = false;
                break;
            }
    }
    if (!ok) {
        // one re-ask with an explicit format reminder
        response = complete_with_retry(
            *binding.backend,
            detail::stage_request(binding, "claims",
                                  user_text +
                                      "\n\nAnswer as a numbered list (1., 2., ...), one "
                                      "claim per item."),
            binding.retry);
        parsed = parse_numbered_list(response.text);
        for (const auto& item : parsed.items)
            if (item.empty()) throw ParseError("claims list contains an empty item");
    }

    if (parsed.items.size() > options.max_claims) {
        parsed.warnings.push_back("TruncatedClaims: kept " +
                                  std::to_string(options.max_claims) + " of " +
                                  std::to_string(parsed.items.size()));
        parsed.items.resize(options.max_claims);
    }

    ClaimsResult result{ClaimPlan(parsed.items, options.max_claims),
                        StageRecord{"claims", binding.backend->model_name(),
                                    templates.claims_template.hash(), response.text,
                                    parsed.warnings, 0.0}};
    result.meta.elapsed_s = timer.elapsed_s();
    return result;
}

/// Grounds planning. By default one call per claim (the alignment is enforced
/// structurally); single-call mode asks for the whole numbered list at once.
inline GroundsResult plan_grounds(const WritingPrompt& prompt, const ClaimPlan& claims,
                                  const StageBinding& binding,
                                  const StagePromptSet& templates,
                                  const PipelineOptions& options = {}) {
    if (claims.claims.empty()) throw InvariantViolation("claim plan is empty");
    detail::StageTimer timer;
    std::vector<std::string> grounds;
    StageRecord meta{"grounds", binding.backend->model_name(),
                     templates.grounds_template.hash(), nullptr, {}, 0.0};

    if (options.single_call_grounds) {
        std::string user_text = build_grounds_prompt(templates, prompt, claims);
        auto response = complete_with_retry(
            *binding.backend, detail::stage_request(binding, "grounds", user_text),
            binding.retry);
        std::optional<ParsedList> parsed;
        try {
            ParsedList p = parse_numbered_list(response.text);
            if (p.items.size() == claims.claims.size()) parsed = std::move(p);
        } catch (const ParseError&) {
        }
        if (!parsed) {
            response = complete_with_retry(
                *binding.backend,
                detail::stage_request(
                    binding, "grounds",
                    user_text + "\n\nAnswer as a numbered list with exactly " +
                        std::to_string(claims.claims.size()) + " items."),
                binding.retry);
            ParsedList p = parse_numbered_list(response.text);
            if (p.items.size() != claims.claims.size())
                throw CountMismatch(claims.claims.size(), p.items.size());
            parsed = std::move(p);
        }
        grounds = parsed->items;
        meta.raw = response.text;
        meta.warnings = parsed->warnings;
    } else {
        ordered_json raw = ordered_json::array();
        for (std::size_t i = 0; i < claims.claims.size(); ++i) {
            std::string user_text = build_grounds_prompt(templates, prompt, claims, i);
            auto response = complete_with_retry(
                *binding.backend, detail::stage_request(binding, "grounds", user_text),
                binding.retry);
            if (is_blank(response.text)) {
                response = complete_with_retry(
                    *binding.backend,
                    detail::stage_request(binding, "grounds",
                                          user_text +
                                              "\n\nThe ground paragraph must not be "
                                              "empty."),
                    binding.retry);
                if (is_blank(response.text)) throw EmptyAnnotation(i);
            }
            grounds.push_back(trim(response.text));
            raw.push_back(response.text);
        }
        meta.raw = raw;
    }

    GroundsResult result{GroundPlan(grounds), std::move(meta)};
    auto alignment = validate_alignment(claims, result.plan);
    if (!alignment.ok()) throw InvariantViolation(alignment.describe());
    result.meta.elapsed_s = timer.elapsed_s();
    return result;
}

/// Essay expansion: alignment is checked before any call; the response text
/// becomes the essay. Fewer than two paragraphs attaches a ShortEssay warning.
inline EssayResult expand_essay(const WritingPrompt& prompt, const ClaimPlan& claims,
                                const GroundPlan& grounds, const StageBinding& binding,
                                const StagePromptSet& templates) {
    auto alignment = validate_alignment(claims, grounds);
    if (!alignment.ok()) throw InvariantViolation(alignment.describe());
    detail::StageTimer timer;
    std::string user_text = build_essay_prompt(templates, prompt, claims, grounds);
    auto response = complete_with_retry(
        *binding.backend, detail::stage_request(binding, "essay", user_text),
        binding.retry);
    if (is_blank(response.text)) {
        response = complete_with_retry(
            *binding.backend,
            detail::stage_request(binding, "essay",
                                  user_text + "\n\nThe essay must not be empty."),
            binding.retry);
        if (is_blank(response.text)) throw EmptyGeneration();
    }

    EssayResult result{Essay(response.text),
                       StageRecord{"essay", binding.backend->model_name(),
                                   templates.essay_template.hash(), response.text,
                                   {},
                                   0.0}};
    if (result.essay.paragraphs.size() < 2) result.meta.warnings.push_back("ShortEssay");
    result.meta.elapsed_s = timer.elapsed_s();
    return result;
}

/// End-to-end comparison arm: the essay endpoint is called with the prompt
/// text alone, no planning.
inline EssayResult expand_essay_end_to_end(const WritingPrompt& prompt,
                                           const StageBinding& binding) {
    if (is_blank(prompt.text)) throw InvariantViolation("prompt text is empty");
    detail::StageTimer timer;
    auto response = complete_with_retry(
        *binding.backend, detail::stage_request(binding, "essay", prompt.text),
        binding.retry);
    if (is_blank(response.text)) {
        auto retry_req = detail::stage_request(
            binding, "essay", prompt.text + "\n\nThe essay must not be empty.");
        response = complete_with_retry(*binding.backend, retry_req, binding.retry);
        if (is_blank(response.text)) throw EmptyGeneration();
    }
    EssayResult result{Essay(response.text),
                       StageRecord{"essay", binding.backend->model_name(), "", response.text,
                                   {}, 0.0}};
    if (result.essay.paragraphs.size() < 2) result.meta.warnings.push_back("ShortEssay");
    result.meta.elapsed_s = timer.elapsed_s();
    return result;
}

/// Runs claims -> grounds -> essay strictly in order, each stage consuming the
/// previous stage's parsed output. A stage failure aborts the run and carries
/// the partial artifacts.
inline PipelineOutput run_pipeline(const WritingPrompt& prompt,
                                   const PipelineBindings& bindings,
                                   const StagePromptSet& templates,
                                   const PipelineOptions& options = {}) {
    bindings.validate();
    PipelineOutput out;
    out.prompt = prompt;
    out.created_at = options.created_at;

    if (options.end_to_end) {
        EssayResult essay;
        try {
            essay = expand_essay_end_to_end(prompt, bindings.essay);
        } catch (const Error& e) {
            throw PipelineStageError(Stage::Essay, e.what());
        }
        out.essay = std::move(essay.essay);
        out.stages.push_back(std::move(essay.meta));
        return out;
    }

    ClaimsResult claims;
    try {
        claims = plan_claims(prompt, bindings.claims, templates, options);
    } catch (const Error& e) {
        throw PipelineStageError(Stage::Claims, e.what());
    }

    GroundsResult grounds;
    try {
        grounds = plan_grounds(prompt, claims.plan, bindings.grounds, templates, options);
    } catch (const Error& e) {
        throw PipelineStageError(Stage::Grounds, e.what(), claims.plan);
    }

    EssayResult essay;
    try {
        essay = expand_essay(prompt, claims.plan, grounds.plan, bindings.essay, templates);
    } catch (const Error& e) {
        throw PipelineStageError(Stage::Essay, e.what(), claims.plan, grounds.plan);
    }

    out.claim_plan = std::move(claims.plan);
    out.ground_plan = std::move(grounds.plan);
    out.essay = std::move(essay.essay);
    out.stages.push_back(std::move(claims.meta));
    out.stages.push_back(std::move(grounds.meta));
    out.stages.push_back(std::move(essay.meta));
    check_output_invariants(out);
    return out;
}

}  // namespace pesa
