#pragma once

#include <atomic>
#include <cstddef>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pesa/backend.hpp"
#include "pesa/clock.hpp"
#include "pesa/domain.hpp"
#include "pesa/errors.hpp"
#include "pesa/parallel.hpp"
#include "pesa/proof_enhancement.hpp"
#include "pesa/record_io.hpp"
#include "pesa/templates.hpp"

namespace pesa {

struct AnnotationOptions {
    AnnotationPromptSet templates = AnnotationPromptSet::defaults();
    bool body_only = false;        // drop first/last paragraph before annotation
    bool omit_prompt = false;      // render the {prompt} slot empty
    double temperature = 0.0;
    int max_new_tokens = 1024;
    RetryPolicy retry{};
    // Pseudo-label plans carry one claim per retained paragraph, so the
    // generation-side claim cap does not apply here by default.
    std::size_t max_claims = kNoClaimCap;
    std::size_t concurrency = 1;
    Clock clock = iso8601_utc_now;
};

namespace detail {

inline GenerationRequest annotation_request(const AnnotationOptions& options,
                                            std::string tag, std::string user_text) {
    GenerationRequest req;
    req.user_text = std::move(user_text);
    req.temperature = options.temperature;
    req.max_new_tokens = options.max_new_tokens;
    req.request_tag = std::move(tag);
    return req;
}

inline std::vector<std::string> retained_paragraphs(const Essay& essay,
                                                    const AnnotationOptions& options) {
    if (!options.body_only) return essay.paragraphs;
    if (essay.paragraphs.size() < 3)
        throw InvariantViolation(
            "no body paragraphs left after dropping introduction and conclusion");
    return {essay.paragraphs.begin() + 1, essay.paragraphs.end() - 1};
}

}  // namespace detail

/// Extracts one ground per retained paragraph by summarizing it with the
/// grounds template: one backend call per paragraph, order preserved, one
/// re-ask on a blank answer.
inline GroundPlan annotate_grounds(const WritingPrompt& prompt, const Essay& essay,
                                   Backend& backend,
                                   const AnnotationOptions& options = {}) {
    auto paragraphs = detail::retained_paragraphs(essay, options);
    std::string prompt_text = options.omit_prompt ? "" : prompt.text;
    std::vector<std::string> grounds;
    grounds.reserve(paragraphs.size());
    for (std::size_t i = 0; i < paragraphs.size(); ++i) {
        std::string user_text = options.templates.grounds_template.render(
            {{"prompt", prompt_text}, {"paragraph", paragraphs[i]}});
        auto response = complete_with_retry(
            backend, detail::annotation_request(options, "annotate_grounds", user_text),
            options.retry);
        if (is_blank(response.text)) {
            response = complete_with_retry(
                backend,
                detail::annotation_request(options, "annotate_grounds",
                                           user_text +
                                               "\n\nThe summary must not be empty."),
                options.retry);
            if (is_blank(response.text)) throw EmptyAnnotation(i);
        }
        grounds.push_back(trim(response.text));
    }
    return GroundPlan(std::move(grounds));
}

/// Extracts the major claim behind each ground with a single call whose output
/// is parsed as a numbered list of exactly |grounds| items. One re-ask with an
/// explicit count reminder, then CountMismatch or ParseError.
inline ClaimPlan annotate_claims(const WritingPrompt& prompt, const Essay& essay,
                                 const GroundPlan& grounds, Backend& backend,
                                 const AnnotationOptions& options = {}) {
    if (grounds.grounds.empty()) throw InvariantViolation("ground plan is empty");
    std::string prompt_text = options.omit_prompt ? "" : prompt.text;
    std::string user_text = options.templates.claims_template.render(
        {{"prompt", prompt_text},
         {"essay", essay.text},
         {"grounds", render_plan(grounds.grounds)}});

    auto parse_claims = [&](const std::string& text) -> std::optional<ParsedList> {
        ParsedList p = parse_numbered_list(text);
        for (const auto& item : p.items)
            if (item.empty()) throw ParseError("claims list contains an empty item");
        if (p.items.size() != grounds.grounds.size()) return std::nullopt;
        return p;
    };

    auto response = complete_with_retry(
        backend, detail::annotation_request(options, "annotate_claims", user_text),
        options.retry);
    std::optional<ParsedList> parsed;
    try {
        parsed = parse_claims(response.text);
    } catch (const ParseError&) {
    }
    if (!parsed) {
        response = complete_with_retry(
            backend,
            detail::annotation_request(
                options, "annotate_claims",
                user_text + "\n\nAnswer as a numbered list with exactly " +
                    std::to_string(grounds.grounds.size()) + " items, one claim per "
                    "ground, in order."),
            options.retry);
        parsed = parse_claims(response.text);
        if (!parsed)
            throw CountMismatch(grounds.grounds.size(),
                                parse_numbered_list(response.text).items.size());
    }
    return ClaimPlan(parsed->items, options.max_claims);
}

/// Runs the full layer-by-layer extraction for one (prompt, essay) pair.
inline PseudoLabeledRecord annotate_pair(const WritingPrompt& prompt, const Essay& essay,
                                         Backend& backend,
                                         const AnnotationOptions& options = {}) {
    PseudoLabeledRecord record;
    record.prompt = prompt;
    record.essay = essay;
    record.ground_plan = annotate_grounds(prompt, essay, backend, options);
    record.claim_plan = annotate_claims(prompt, essay, record.ground_plan, backend, options);
    record.annotator_model = backend.model_name();
    record.created_at = options.clock();
    record.stage_meta = ordered_json{
        {"templates",
         ordered_json{{"annotate_grounds", options.templates.grounds_template.hash()},
                      {"annotate_claims", options.templates.claims_template.hash()}}}};
    check_record_invariants(record);
    return record;
}

struct BuildReport {
    std::size_t written = 0;
    std::size_t skipped = 0;
    std::size_t rejected = 0;
};

inline std::string rejects_path_for(const std::string& output_path) {
    return output_path + ".rejects";
}

namespace detail {

inline std::set<std::string> existing_record_ids(const std::string& path) {
    std::set<std::string> ids;
    std::ifstream in(path);
    if (!in) return ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            ids.insert(decode_record(line).id);
        } catch (const Error& e) {
            throw IoError("corrupt output file " + path + " at line " +
                          std::to_string(line_no) + ": " + e.what());
        }
    }
    return ids;
}

}  // namespace detail

/// Annotates every (prompt, essay) pair and appends one record line per
/// success to output_path. Failures go to the `.rejects` sidecar with the
/// error text. Records land in input order; pairs whose id is already present
/// in the output are skipped, so re-running is idempotent and an aborted run
/// resumes where it stopped.
inline BuildReport build_pseudo_dataset(
    const std::vector<std::pair<WritingPrompt, Essay>>& dataset, Backend& backend,
    const std::string& output_path, const AnnotationOptions& options = {},
    const std::atomic<bool>* cancel = nullptr) {
    auto existing = detail::existing_record_ids(output_path);

    std::ofstream out(output_path, std::ios::app | std::ios::binary);
    if (!out) throw IoError("cannot open output file: " + output_path);
    std::ofstream rejects;  // opened lazily on first reject

    struct JobOut {
        std::string id;
        std::optional<std::string> line;   // encoded record; nullopt = skipped/failed
        std::optional<std::string> error;  // failure reason
    };

    BuildReport report;
    auto job = [&](std::size_t i) -> JobOut {
        const auto& [prompt, essay] = dataset[i];
        JobOut jo;
        jo.id = prompt.id;
        if (existing.count(prompt.id) > 0) return jo;
        try {
            jo.line = encode_record(annotate_pair(prompt, essay, backend, options));
        } catch (const Error& e) {
            jo.error = e.what();
        }
        return jo;
    };

    auto commit = [&](std::size_t, auto&& slot) {
        if constexpr (std::is_same_v<std::decay_t<decltype(slot)>, std::exception_ptr>)
            std::rethrow_exception(slot);
        else {
            const JobOut& jo = slot;
            if (jo.line) {
                out << *jo.line << '\n';
                out.flush();
                if (!out) throw IoError("write failed: " + output_path);
                ++report.written;
            } else if (jo.error) {
                if (!rejects.is_open()) {
                    rejects.open(rejects_path_for(output_path),
                                 std::ios::app | std::ios::binary);
                    if (!rejects)
                        throw IoError("cannot open rejects file: " +
                                      rejects_path_for(output_path));
                }
                ordered_json rj{{"id", jo.id}, {"error", *jo.error}};
                rejects << rj.dump() << '\n';
                rejects.flush();
                ++report.rejected;
            } else {
                ++report.skipped;
            }
        }
    };

    ordered_parallel_for<JobOut>(dataset.size(), options.concurrency, job, commit, cancel);
    return report;
}

// -- staged SFT emission ----------------------------------------------------------

/// One supervised pair realizing a stage's conditioning: claims sees the
/// prompt alone, grounds sees prompt + claim plan, essay sees prompt + both
/// plans. Targets are the rendered claim plan, rendered ground plan, and the
/// essay text respectively.
struct SftRecord {
    Stage stage = Stage::Claims;
    std::string input_text;
    std::string target_text;
    std::string source_id;

    std::string to_line() const {
        ordered_json j;
        j["stage"] = stage_name(stage);
        j["source_id"] = source_id;
        j["input"] = input_text;
        j["target"] = target_text;
        return j.dump();
    }

    static SftRecord from_line(const std::string& line) {
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(e.what(), e.byte);
        }
        SftRecord r;
        try {
            r.stage = stage_from_name(j.at("stage").get<std::string>());
            r.source_id = j.at("source_id").get<std::string>();
            r.input_text = j.at("input").get<std::string>();
            r.target_text = j.at("target").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(e.what());
        }
        return r;
    }
};

inline SftRecord make_sft_record(const PseudoLabeledRecord& record, Stage stage,
                                 const StagePromptSet& templates) {
    SftRecord sft;
    sft.stage = stage;
    sft.source_id = record.prompt.id;
    switch (stage) {
        case Stage::Claims:
            sft.input_text = build_claims_prompt(templates, record.prompt);
            sft.target_text = render_plan(record.claim_plan.claims);
            break;
        case Stage::Grounds:
            sft.input_text = build_grounds_prompt(templates, record.prompt, record.claim_plan);
            sft.target_text = render_plan(record.ground_plan.grounds);
            break;
        case Stage::Essay:
            sft.input_text = build_essay_prompt(templates, record.prompt,
                                                record.claim_plan, record.ground_plan);
            sft.target_text = record.essay.text;
            break;
    }
    return sft;
}

/// Converts a pseudo-label file into one SFT line per record for the given
/// stage. Returns the number of records written.
inline std::size_t emit_sft_records(const std::string& pseudo_dataset_path, Stage stage,
                                    const StagePromptSet& templates,
                                    const std::string& output_path) {
    std::ifstream in(pseudo_dataset_path, std::ios::binary);
    if (!in) throw IoError("cannot open pseudo dataset: " + pseudo_dataset_path);
    std::ofstream out(output_path, std::ios::trunc | std::ios::binary);
    if (!out) throw IoError("cannot open output file: " + output_path);

    std::string line;
    std::size_t line_no = 0;
    std::size_t written = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        PseudoLabeledRecord record;
        try {
            record = decode_record(line).as_pseudo();
        } catch (const ParseError& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what(),
                             e.byte_offset);
        }
        out << make_sft_record(record, stage, templates).to_line() << '\n';
        if (!out) throw IoError("write failed: " + output_path);
        ++written;
    }
    return written;
}

}  // namespace pesa
