#pragma once

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "pesa/domain.hpp"

namespace pesa::testgen {

/// Random printable text with embedded newlines, quotes, backslashes and a
/// couple of multibyte UTF-8 sequences, to exercise the codec escaping.
inline std::string random_text(std::mt19937& rng, std::size_t min_words = 1,
                               std::size_t max_words = 12) {
    static const std::vector<std::string> vocab = {
        "education", "policy",  "evidence", "claim\"x\"", "a\\b", "tab\tstop",
        "caf\xc3\xa9", "\xe2\x80\xa2", "reasoning", "persuasive", "unemployment",
        "secondary"};
    std::uniform_int_distribution<std::size_t> count(min_words, max_words);
    std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
    std::uniform_int_distribution<int> sep(0, 9);
    std::string out;
    std::size_t n = count(rng);
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) out += sep(rng) == 0 ? "\n" : " ";
        out += vocab[pick(rng)];
    }
    return out;
}

inline std::string random_paragraph_text(std::mt19937& rng, std::size_t min_paras = 1,
                                         std::size_t max_paras = 5) {
    std::uniform_int_distribution<std::size_t> count(min_paras, max_paras);
    std::size_t n = count(rng);
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) out += "\n\n";
        out += random_text(rng, 3, 20);
    }
    return out;
}

inline pesa::PseudoLabeledRecord random_record(std::mt19937& rng, std::size_t index) {
    pesa::PseudoLabeledRecord r;
    r.prompt = pesa::WritingPrompt("id-" + std::to_string(index), random_text(rng, 4, 16));
    r.essay = pesa::Essay(random_paragraph_text(rng, 1, 6));
    std::uniform_int_distribution<std::size_t> plan_len(1, 6);
    std::size_t n = plan_len(rng);
    std::vector<std::string> claims, grounds;
    for (std::size_t i = 0; i < n; ++i) {
        claims.push_back(random_text(rng, 2, 8));
        grounds.push_back(random_text(rng, 3, 14));
    }
    r.claim_plan = pesa::ClaimPlan(claims);
    r.ground_plan = pesa::GroundPlan(grounds);
    r.annotator_model = "gen-model";
    r.created_at = "2025-01-01T00:00:00Z";
    std::uniform_int_distribution<int> with_meta(0, 1);
    if (with_meta(rng) == 1)
        r.stage_meta = pesa::ordered_json{{"templates", pesa::ordered_json{{"annotate_grounds", "abc"}}}};
    return r;
}

/// Plan items that survive the render -> parse round trip: single line, no
/// leading list markers.
inline std::vector<std::string> random_plan_items(std::mt19937& rng, std::size_t min_n = 1,
                                                  std::size_t max_n = 6) {
    static const std::vector<std::string> vocab = {
        "education is a basic right", "jobs require training",
        "secondary school feeds higher study", "public funding pays off",
        "skills reduce unemployment", "opportunity must be universal"};
    std::uniform_int_distribution<std::size_t> count(min_n, max_n);
    std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
    std::size_t n = count(rng);
    std::vector<std::string> items;
    for (std::size_t i = 0; i < n; ++i)
        items.push_back(vocab[pick(rng)] + " #" + std::to_string(i));
    return items;
}

/// Unique scratch directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        auto base = std::filesystem::temp_directory_path();
        std::random_device rd;
        dir_ = base / ("pesa-test-" + std::to_string(rd()) + "-" +
                       std::to_string(::getpid()));
        std::filesystem::create_directories(dir_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(dir_, ec);
    }
    std::filesystem::path path() const { return dir_; }
    std::string file(const std::string& name) const { return (dir_ / name).string(); }

private:
    std::filesystem::path dir_;
};

}  // namespace pesa::testgen
