#pragma once

#include <cstddef>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pesa/domain.hpp"
#include "pesa/errors.hpp"
#include "pesa/hash.hpp"
#include "pesa/record_io.hpp"

namespace pesa {

enum class Split { Train, Valid, Test };

inline const char* split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Valid: return "valid";
        case Split::Test: return "test";
    }
    return "train";
}

inline Split split_from_name(const std::string& name) {
    if (name == "train") return Split::Train;
    if (name == "valid" || name == "validation") return Split::Valid;
    if (name == "test") return Split::Test;
    throw ConfigError("unknown split: " + name);
}

/// A loaded prompt–essay corpus. Immutable after load.
struct Corpus {
    Split split = Split::Train;
    std::vector<std::pair<WritingPrompt, Essay>> pairs;
    std::string source_path;
    std::string content_hash;
};

namespace detail {

inline std::string derive_pair_id(const std::string& prompt_text,
                                  const std::string& essay_text) {
    return pesa::content_hash(prompt_text + '\x1f' + essay_text);
}

inline std::string unescape_tsv_field(const std::string& in) {
    std::string out;
    out.reserve(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (in[i] == '\\' && i + 1 < in.size()) {
            char c = in[i + 1];
            if (c == 'n') { out += '\n'; ++i; continue; }
            if (c == 't') { out += '\t'; ++i; continue; }
            if (c == '\\') { out += '\\'; ++i; continue; }
        }
        out += in[i];
    }
    return out;
}

inline std::string escape_tsv_field(const std::string& in) {
    std::string out;
    out.reserve(in.size());
    for (char c : in) {
        if (c == '\n') out += "\\n";
        else if (c == '\t') out += "\\t";
        else if (c == '\\') out += "\\\\";
        else out += c;
    }
    return out;
}

inline std::vector<std::string> split_tsv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == '\t') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace detail

/// Loads a corpus from either the canonical line format or a headered
/// tab-delimited file (columns: prompt, essay, optional id), auto-detected
/// from the first non-blank line. Missing ids are derived from a content
/// hash, so reloading the same file always yields the same corpus.
inline Corpus load_corpus(const std::string& path, Split split) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open corpus file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    std::string bytes = buffer.str();

    Corpus corpus;
    corpus.split = split;
    corpus.source_path = path;
    corpus.content_hash = pesa::content_hash(bytes);

    std::vector<std::string> lines;
    {
        std::istringstream ss(bytes);
        std::string line;
        while (std::getline(ss, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            lines.push_back(line);
        }
    }

    std::size_t first_content = 0;
    while (first_content < lines.size() && trim(lines[first_content]).empty())
        ++first_content;
    if (first_content >= lines.size()) return corpus;  // empty corpus

    std::set<std::string> seen_ids;
    auto add_pair = [&](std::size_t line_no, const std::string& id,
                        const std::string& prompt_text, const std::string& essay_text) {
        if (trim(prompt_text).empty()) throw EmptyFieldError(line_no, "prompt");
        if (is_blank(essay_text)) throw EmptyFieldError(line_no, "essay");
        std::string final_id =
            id.empty() ? detail::derive_pair_id(prompt_text, essay_text) : id;
        if (!seen_ids.insert(final_id).second)
            throw ParseError("line " + std::to_string(line_no) + ": duplicate id " +
                             final_id);
        corpus.pairs.emplace_back(WritingPrompt(final_id, prompt_text), Essay(essay_text));
    };

    if (trim(lines[first_content])[0] == '{') {
        // canonical line format; plan fields are ignored here
        for (std::size_t i = first_content; i < lines.size(); ++i) {
            if (trim(lines[i]).empty()) continue;
            std::size_t line_no = i + 1;
            ordered_json j;
            try {
                j = ordered_json::parse(lines[i]);
            } catch (const nlohmann::json::parse_error& e) {
                throw ParseError("line " + std::to_string(line_no) + ": " + e.what(),
                                 e.byte);
            }
            if (!j.is_object() || !j.contains("prompt") || !j.contains("essay"))
                throw ParseError("line " + std::to_string(line_no) +
                                 ": record needs prompt and essay fields");
            std::string prompt_text, essay_text, id;
            try {
                prompt_text = j.at("prompt").get<std::string>();
                essay_text = j.at("essay").get<std::string>();
                id = j.value("id", "");
            } catch (const nlohmann::json::exception& e) {
                throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
            }
            add_pair(line_no, id, prompt_text, essay_text);
        }
        return corpus;
    }

    // headered tab-delimited format
    auto header = detail::split_tsv_line(lines[first_content]);
    std::map<std::string, std::size_t> columns;
    for (std::size_t c = 0; c < header.size(); ++c) columns[trim(header[c])] = c;
    if (columns.count("prompt") == 0 || columns.count("essay") == 0)
        throw ParseError("line " + std::to_string(first_content + 1) +
                         ": delimited corpus needs a header with prompt and essay columns");
    for (std::size_t i = first_content + 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        std::size_t line_no = i + 1;
        auto fields = detail::split_tsv_line(lines[i]);
        if (fields.size() != header.size())
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " columns, got " +
                             std::to_string(fields.size()));
        std::string prompt_text = detail::unescape_tsv_field(fields[columns["prompt"]]);
        std::string essay_text = detail::unescape_tsv_field(fields[columns["essay"]]);
        std::string id =
            columns.count("id") > 0 ? trim(fields[columns["id"]]) : std::string();
        add_pair(line_no, id, prompt_text, essay_text);
    }
    return corpus;
}

/// Writes a corpus in the canonical line format (empty plans, no provenance).
inline void save_corpus(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw IoError("cannot open output file: " + path);
    for (const auto& [prompt, essay] : corpus.pairs) {
        out << detail::encode_fields(prompt.id, prompt.text, essay.text, {}, {}, "", "",
                                     ordered_json())
            << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

struct CorpusStats {
    std::size_t pair_count = 0;
    double mean_paragraphs = 0.0;
    std::size_t min_paragraphs = 0;
    std::size_t max_paragraphs = 0;
    double mean_prompt_chars = 0.0;
};

inline CorpusStats corpus_stats(const Corpus& corpus) {
    CorpusStats s;
    s.pair_count = corpus.pairs.size();
    if (corpus.pairs.empty()) return s;
    s.min_paragraphs = std::numeric_limits<std::size_t>::max();
    double para_sum = 0.0;
    double prompt_sum = 0.0;
    for (const auto& [prompt, essay] : corpus.pairs) {
        std::size_t n = essay.paragraphs.size();
        para_sum += static_cast<double>(n);
        s.min_paragraphs = std::min(s.min_paragraphs, n);
        s.max_paragraphs = std::max(s.max_paragraphs, n);
        prompt_sum += static_cast<double>(prompt.text.size());
    }
    s.mean_paragraphs = para_sum / static_cast<double>(s.pair_count);
    s.mean_prompt_chars = prompt_sum / static_cast<double>(s.pair_count);
    return s;
}

/// Loud split-size assertion: the corpus must have exactly the expected
/// number of pairs.
inline void assert_split_size(const Corpus& corpus, std::size_t expected) {
    if (corpus.pairs.size() != expected)
        throw SplitSizeMismatch(split_name(corpus.split), expected, corpus.pairs.size());
}

struct SplitSizes {
    std::size_t train = 0;
    std::size_t valid = 0;
    std::size_t test = 0;
};

inline void check_split_sizes(const Corpus& train, const Corpus& valid,
                              const Corpus& test, const SplitSizes& expected) {
    assert_split_size(train, expected.train);
    assert_split_size(valid, expected.valid);
    assert_split_size(test, expected.test);
}

}  // namespace pesa
