#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pesa/errors.hpp"
#include "pesa/hash.hpp"

namespace pesa {

/// A plain-text prompt template with named {slot} placeholders. Every declared
/// slot must appear exactly once; the content hash versions the template text.
class PromptTemplate {
public:
    PromptTemplate() = default;
    PromptTemplate(std::string text, std::vector<std::string> slots)
        : text_(std::move(text)), slots_(std::move(slots)), hash_(content_hash(text_)) {
        for (const auto& slot : slots_) {
            std::string token = "{" + slot + "}";
            std::size_t first = text_.find(token);
            if (first == std::string::npos)
                throw TemplateError("slot {" + slot + "} missing from template");
            if (text_.find(token, first + token.size()) != std::string::npos)
                throw TemplateError("slot {" + slot + "} appears more than once");
        }
    }

    std::string render(const std::map<std::string, std::string>& values) const {
        std::string out = text_;
        for (const auto& slot : slots_) {
            auto it = values.find(slot);
            if (it == values.end())
                throw TemplateError("no value supplied for slot {" + slot + "}");
            std::string token = "{" + slot + "}";
            out.replace(out.find(token), token.size(), it->second);
        }
        return out;
    }

    const std::string& text() const { return text_; }
    const std::vector<std::string>& slots() const { return slots_; }
    const std::string& hash() const { return hash_; }

private:
    std::string text_;
    std::vector<std::string> slots_;
    std::string hash_;
};

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Templates driving the layer-by-layer pseudo-label extraction.
struct AnnotationPromptSet {
    PromptTemplate grounds_template;  // slots: prompt, paragraph
    PromptTemplate claims_template;   // slots: prompt, essay, grounds

    static AnnotationPromptSet defaults();
    static AnnotationPromptSet from_files(const std::string& grounds_path,
                                          const std::string& claims_path) {
        return {PromptTemplate(read_text_file(grounds_path), {"prompt", "paragraph"}),
                PromptTemplate(read_text_file(claims_path), {"prompt", "essay", "grounds"})};
    }
};

/// Templates driving the three inference stages.
struct StagePromptSet {
    PromptTemplate claims_template;   // slots: prompt
    PromptTemplate grounds_template;  // slots: prompt, claims
    PromptTemplate essay_template;    // slots: prompt, claims, grounds

    static StagePromptSet defaults();
    static StagePromptSet from_files(const std::string& claims_path,
                                     const std::string& grounds_path,
                                     const std::string& essay_path) {
        return {PromptTemplate(read_text_file(claims_path), {"prompt"}),
                PromptTemplate(read_text_file(grounds_path), {"prompt", "claims"}),
                PromptTemplate(read_text_file(essay_path), {"prompt", "claims", "grounds"})};
    }
};

namespace default_templates {

inline constexpr const char* kAnnotateGrounds =
    "You are analyzing an argumentative essay written for the topic below.\n"
    "\n"
    "Topic: {prompt}\n"
    "\n"
    "Summarize the following paragraph of the essay into one brief ground "
    "paragraph. Keep the complete logical structure and grounds: preserve the "
    "examples, data, and logical reasoning sentences, not just the topic "
    "sentence. Answer with the ground paragraph only.\n"
    "\n"
    "Paragraph:\n"
    "{paragraph}";

inline constexpr const char* kAnnotateClaims =
    "Topic: {prompt}\n"
    "\n"
    "Essay:\n"
    "{essay}\n"
    "\n"
    "Paragraph grounds:\n"
    "{grounds}\n"
    "\n"
    "For each ground above, extract the major claim it supports. Give exactly "
    "one claim per ground, in the same order. Answer as a numbered list "
    "(1., 2., ...), one claim per item.";

inline constexpr const char* kStageClaims =
    "Write the major claims for an argumentative essay on the topic below. "
    "The claims must be relevant to the topic and form a clear logical "
    "structure, such as juxtaposition or progression, that argues one "
    "position. Answer as a numbered list (1., 2., ...), one major claim per "
    "item.\n"
    "\n"
    "Topic: {prompt}";

inline constexpr const char* kStageGrounds =
    "Topic: {prompt}\n"
    "\n"
    "Major claims:\n"
    "{claims}\n"
    "\n"
    "For each major claim above, generate supporting evidence and data as a "
    "brief paragraph, with logical reasoning that justifies that claim. "
    "Answer as a numbered list with exactly one ground per claim, in claim "
    "order. If a focus directive follows, answer with that single ground "
    "paragraph only.";

inline constexpr const char* kStageEssay =
    "Topic: {prompt}\n"
    "\n"
    "Major claims:\n"
    "{claims}\n"
    "\n"
    "Grounds:\n"
    "{grounds}\n"
    "\n"
    "Expand the claim planning and ground planning above into a complete, "
    "coherent, persuasive argumentative essay on the topic. Follow the claim "
    "order, justify each claim with its ground, and separate paragraphs with "
    "blank lines.";

}  // namespace default_templates

inline AnnotationPromptSet AnnotationPromptSet::defaults() {
    return {PromptTemplate(default_templates::kAnnotateGrounds, {"prompt", "paragraph"}),
            PromptTemplate(default_templates::kAnnotateClaims, {"prompt", "essay", "grounds"})};
}

inline StagePromptSet StagePromptSet::defaults() {
    return {PromptTemplate(default_templates::kStageClaims, {"prompt"}),
            PromptTemplate(default_templates::kStageGrounds, {"prompt", "claims"}),
            PromptTemplate(default_templates::kStageEssay, {"prompt", "claims", "grounds"})};
}

}  // namespace pesa
