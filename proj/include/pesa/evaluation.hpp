#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pesa/backend.hpp"
#include "pesa/domain.hpp"
#include "pesa/errors.hpp"
#include "pesa/hash.hpp"

namespace pesa {

// -- metrics ------------------------------------------------------------------

enum class MetricKind {
    Relevance = 0,
    ValidityOfReasoning,
    CredibilityOfEvidence,
    LanguageAndRhetoric,
    OverallPersuasiveness,
};

inline constexpr std::size_t kMetricCount = 5;

inline constexpr std::array<MetricKind, kMetricCount> kAllMetrics = {
    MetricKind::Relevance, MetricKind::ValidityOfReasoning,
    MetricKind::CredibilityOfEvidence, MetricKind::LanguageAndRhetoric,
    MetricKind::OverallPersuasiveness};

inline const char* metric_id(MetricKind m) {
    switch (m) {
        case MetricKind::Relevance: return "relevance";
        case MetricKind::ValidityOfReasoning: return "validity_of_reasoning";
        case MetricKind::CredibilityOfEvidence: return "credibility_of_evidence";
        case MetricKind::LanguageAndRhetoric: return "language_and_rhetoric";
        case MetricKind::OverallPersuasiveness: return "overall_persuasiveness";
    }
    return "relevance";
}

inline const char* metric_display_name(MetricKind m) {
    switch (m) {
        case MetricKind::Relevance: return "Relevance";
        case MetricKind::ValidityOfReasoning: return "Validity of Reasoning";
        case MetricKind::CredibilityOfEvidence: return "Credibility of Evidence";
        case MetricKind::LanguageAndRhetoric: return "Language and Rhetoric";
        case MetricKind::OverallPersuasiveness: return "Overall Persuasiveness";
    }
    return "Relevance";
}

inline MetricKind metric_from_id(const std::string& id) {
    for (MetricKind m : kAllMetrics)
        if (id == metric_id(m)) return m;
    throw ParseError("unknown metric: " + id);
}

// -- judge prompts ---------------------------------------------------------------

namespace judge_prompts {

inline constexpr const char* kRelevance =
    "Rate the direct relevance of the above argumentative essay to the topic. "
    "The criterion is: all the claims in the argumentative essay should be "
    "related to the topic or the major claim of the essay. Rating score is out "
    "of 100. Please give a short reason for the rating first, followed by a "
    "direct score in the form of xx/100.";

inline constexpr const char* kValidityOfReasoning =
    "Rate the clarity and coherence of the logic of the above argumentative "
    "essay. The criteria are: the main ideas presented in the essay should "
    "have logical relationships, including progression, concessions, etc., and "
    "be able to argue the major claim of the essay. Each main idea should be "
    "logically and consistently argued. Rating score is out of 100. Please "
    "give a short reason for the rating first, followed by a direct score in "
    "the form of xx/100.";

inline constexpr const char* kCredibilityOfEvidence =
    "Rate the credibility of the evidence used in the above argumentative "
    "essay. The criterion is: ideas should be supported by credible evidence "
    "or sources, and unsubstantiated ideas are not as persuasive as rebuttals "
    "based on corroborating evidence. Rating score is out of 100. Please give "
    "a short reason for the rating first, followed by a direct score in the "
    "form of xx/100.";

inline constexpr const char* kLanguageAndRhetoric =
    "Rate the effectiveness of the language and rhetoric used in the above "
    "argumentative essay. The criterion is: argumentative essay should "
    "effectively use persuasive language and rhetorical techniques, such as "
    "appealing to logic or evidence, to convince the reader. Rating score is "
    "out of 100. Please give a short reason for the rating first, followed by "
    "a direct score in the form of xx/100.";

inline constexpr const char* kOverallPersuasiveness =
    "Rate the overall persuasiveness of the above argumentative essay. The "
    "criterion is: the argumentative essay should effectively argue its point "
    "of view in a way that the reader is convinced and agrees with it. Please "
    "give a short reason for the rating first, followed by a direct score in "
    "the form of xx/100.";

}  // namespace judge_prompts

inline const char* judge_prompt_text(MetricKind m) {
    switch (m) {
        case MetricKind::Relevance: return judge_prompts::kRelevance;
        case MetricKind::ValidityOfReasoning: return judge_prompts::kValidityOfReasoning;
        case MetricKind::CredibilityOfEvidence:
            return judge_prompts::kCredibilityOfEvidence;
        case MetricKind::LanguageAndRhetoric: return judge_prompts::kLanguageAndRhetoric;
        case MetricKind::OverallPersuasiveness:
            return judge_prompts::kOverallPersuasiveness;
    }
    return judge_prompts::kRelevance;
}

/// Combined content hash over the five prompt constants, printed in reports
/// for provenance.
inline std::string judge_prompts_hash() {
    std::string all;
    for (MetricKind m : kAllMetrics) {
        all += judge_prompt_text(m);
        all += '\x1f';
    }
    return content_hash(all);
}

/// The prompts reference "the above argumentative essay", so the essay is
/// prepended, blank line, then the metric prompt.
inline std::string build_metric_prompt(MetricKind metric, const Essay& essay) {
    if (essay.text.empty()) throw InvariantViolation("essay is empty");
    return essay.text + "\n\n" + judge_prompt_text(metric);
}

// -- score parsing -----------------------------------------------------------------

struct ScoreParse {
    std::string explanation;
    int score = 0;
};

/// Extracts the last "N/100" occurrence (optional spaces around '/', integer
/// N in [0,100]); everything before it is the explanation. Candidates over
/// 100 only raise OutOfRange when no valid occurrence exists.
inline ScoreParse parse_judge_score(const std::string& raw) {
    std::optional<std::pair<std::size_t, int>> last_valid;  // (digit-run start, N)
    std::optional<long> last_out_of_range;

    for (std::size_t slash = 0; (slash = raw.find('/', slash)) != std::string::npos;
         ++slash) {
        // digits (with optional spaces) must precede the slash
        std::size_t left = slash;
        while (left > 0 && raw[left - 1] == ' ') --left;
        std::size_t digits_end = left;
        while (left > 0 && std::isdigit(static_cast<unsigned char>(raw[left - 1]))) --left;
        if (left == digits_end) continue;
        // a decimal like "8.5/100" is not an integer score
        if (left >= 2 && raw[left - 1] == '.' &&
            std::isdigit(static_cast<unsigned char>(raw[left - 2])))
            continue;
        // "100" (exactly) must follow the slash, not followed by another digit
        std::size_t right = slash + 1;
        while (right < raw.size() && raw[right] == ' ') ++right;
        if (raw.compare(right, 3, "100") != 0) continue;
        if (right + 3 < raw.size() && std::isdigit(static_cast<unsigned char>(raw[right + 3])))
            continue;

        std::string digits = raw.substr(left, digits_end - left);
        if (digits.size() > 9) continue;
        long n = std::stol(digits);
        if (n <= 100)
            last_valid = {{left, static_cast<int>(n)}};
        else
            last_out_of_range = n;
    }

    if (!last_valid) {
        if (last_out_of_range)
            throw OutOfRange(static_cast<double>(*last_out_of_range),
                             "judge score exceeds 100");
        throw NoScoreFound();
    }
    ScoreParse out;
    out.score = last_valid->second;
    out.explanation = trim(raw.substr(0, last_valid->first));
    return out;
}

// -- evaluation types -----------------------------------------------------------------

struct MetricScore {
    MetricKind metric = MetricKind::Relevance;
    std::string explanation;
    int score = 0;  // [0, 100]
    std::string raw_judgment;
};

/// One judged essay: exactly one MetricScore per MetricKind, in order.
struct EssayEvaluation {
    std::string essay_id;
    std::array<MetricScore, kMetricCount> scores;
    std::string judge_model;

    const MetricScore& score_for(MetricKind m) const {
        return scores[static_cast<std::size_t>(m)];
    }
};

struct JudgeOptions {
    double temperature = 0.0;
    int max_new_tokens = 1024;
    RetryPolicy retry{};
};

/// Judges one essay on all five metrics: one call per metric at the given
/// (default 0) temperature, one re-ask per metric when no score can be
/// parsed.
inline EssayEvaluation evaluate_essay(const std::string& essay_id, const Essay& essay,
                                      Backend& judge, const JudgeOptions& options = {}) {
    EssayEvaluation eval;
    eval.essay_id = essay_id;
    eval.judge_model = judge.model_name();
    for (MetricKind m : kAllMetrics) {
        std::string user_text = build_metric_prompt(m, essay);
        GenerationRequest req;
        req.user_text = user_text;
        req.temperature = options.temperature;
        req.max_new_tokens = options.max_new_tokens;
        req.request_tag = "judge";
        auto response = complete_with_retry(judge, req, options.retry);
        std::optional<ScoreParse> parsed;
        try {
            parsed = parse_judge_score(response.text);
        } catch (const Error&) {
        }
        if (!parsed) {
            req.user_text = user_text +
                            "\n\nEnd your answer with a direct score in the form of "
                            "xx/100.";
            response = complete_with_retry(judge, req, options.retry);
            try {
                parsed = parse_judge_score(response.text);
            } catch (const Error&) {
                throw JudgeFailure(metric_id(m));
            }
        }
        MetricScore& slot = eval.scores[static_cast<std::size_t>(m)];
        slot.metric = m;
        slot.explanation = parsed->explanation;
        slot.score = parsed->score;
        slot.raw_judgment = response.text;
    }
    return eval;
}

// -- corpus aggregation ------------------------------------------------------------------

struct MetricStats {
    std::size_t count = 0;
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    double stddev = 0.0;  // population
};

struct CorpusReport {
    std::size_t essay_count = 0;
    std::array<MetricStats, kMetricCount> per_metric;
    std::string judge_prompts_version;

    const MetricStats& stats_for(MetricKind m) const {
        return per_metric[static_cast<std::size_t>(m)];
    }
};

namespace detail {

inline std::string format_fixed(double v, int places) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(places) << v;
    return ss.str();
}

}  // namespace detail

/// Per-metric mean/min/max/stddev over a corpus of evaluations, computed as a
/// single streaming fold (Welford update per essay).
inline CorpusReport evaluate_corpus(const std::vector<EssayEvaluation>& evaluations) {
    if (evaluations.empty()) throw EmptyCorpus();
    for (const auto& eval : evaluations)
        for (std::size_t i = 0; i < kMetricCount; ++i) {
            if (eval.scores[i].metric != kAllMetrics[i])
                throw InvariantViolation("evaluation of " + eval.essay_id +
                                         " does not carry the five metrics in order");
            if (eval.scores[i].score < 0 || eval.scores[i].score > 100)
                throw InvariantViolation("score outside [0, 100] in " + eval.essay_id);
        }
    CorpusReport report;
    report.essay_count = evaluations.size();
    report.judge_prompts_version = judge_prompts_hash();
    for (std::size_t mi = 0; mi < kMetricCount; ++mi) {
        MetricStats& s = report.per_metric[mi];
        double m2 = 0.0;
        for (const auto& eval : evaluations) {
            double x = static_cast<double>(eval.scores[mi].score);
            if (s.count == 0) {
                s.min = s.max = x;
            } else {
                s.min = std::min(s.min, x);
                s.max = std::max(s.max, x);
            }
            ++s.count;
            double delta = x - s.mean;
            s.mean += delta / static_cast<double>(s.count);
            m2 += delta * (x - s.mean);
        }
        s.stddev = std::sqrt(m2 / static_cast<double>(s.count));
    }
    return report;
}

/// Plain-text table in the reporting metric order (metrics as columns).
inline std::string render_report(const CorpusReport& report) {
    std::ostringstream out;
    out << "essays: " << report.essay_count
        << "  judge-prompts: " << report.judge_prompts_version << "\n";
    out << std::left << std::setw(8) << "";
    for (MetricKind m : kAllMetrics)
        out << std::right << std::setw(24) << metric_display_name(m);
    out << "\n";
    auto row = [&](const char* label, auto getter) {
        out << std::left << std::setw(8) << label;
        for (MetricKind m : kAllMetrics)
            out << std::right << std::setw(24)
                << detail::format_fixed(getter(report.stats_for(m)), 2);
        out << "\n";
    };
    row("mean", [](const MetricStats& s) { return s.mean; });
    row("min", [](const MetricStats& s) { return s.min; });
    row("max", [](const MetricStats& s) { return s.max; });
    row("stddev", [](const MetricStats& s) { return s.stddev; });
    return out.str();
}

inline std::string report_to_json_line(const CorpusReport& report) {
    ordered_json j;
    j["essays"] = report.essay_count;
    j["judge_prompts"] = report.judge_prompts_version;
    for (MetricKind m : kAllMetrics) {
        const auto& s = report.stats_for(m);
        j[metric_id(m)] = ordered_json{{"mean", s.mean},
                                       {"min", s.min},
                                       {"max", s.max},
                                       {"stddev", s.stddev},
                                       {"count", s.count}};
    }
    return j.dump();
}

// -- evaluation line codec (CLI output) ------------------------------------------------

inline std::string evaluation_to_line(const EssayEvaluation& eval) {
    ordered_json j;
    j["essay_id"] = eval.essay_id;
    j["judge_model"] = eval.judge_model;
    ordered_json scores;
    for (MetricKind m : kAllMetrics) {
        const auto& s = eval.score_for(m);
        scores[metric_id(m)] =
            ordered_json{{"score", s.score}, {"explanation", s.explanation}};
    }
    j["scores"] = scores;
    return j.dump();
}

inline EssayEvaluation evaluation_from_line(const std::string& line) {
    ordered_json j;
    try {
        j = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(e.what(), e.byte);
    }
    EssayEvaluation eval;
    try {
        eval.essay_id = j.at("essay_id").get<std::string>();
        eval.judge_model = j.at("judge_model").get<std::string>();
        for (MetricKind m : kAllMetrics) {
            const auto& s = j.at("scores").at(metric_id(m));
            MetricScore& slot = eval.scores[static_cast<std::size_t>(m)];
            slot.metric = m;
            slot.score = s.at("score").get<int>();
            slot.explanation = s.value("explanation", "");
            if (slot.score < 0 || slot.score > 100)
                throw OutOfRange(slot.score, "metric score outside [0, 100]");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(e.what());
    }
    return eval;
}

// -- pairwise verdicts ----------------------------------------------------------------

enum class Verdict { Win, Loss, Tie };

inline Verdict verdict_from_string(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (s == "win") return Verdict::Win;
    if (s == "loss") return Verdict::Loss;
    if (s == "tie") return Verdict::Tie;
    throw ParseError("unknown verdict: " + s);
}

/// A human side-by-side comparison, from system_a's perspective.
struct PairwiseVerdict {
    std::string sample_id;
    std::string system_a;
    std::string system_b;
    Verdict verdict = Verdict::Tie;
    std::string annotator_id;

    PairwiseVerdict() = default;
    PairwiseVerdict(std::string sample_id, std::string system_a, std::string system_b,
                    Verdict verdict, std::string annotator_id = "")
        : sample_id(std::move(sample_id)),
          system_a(std::move(system_a)),
          system_b(std::move(system_b)),
          verdict(verdict),
          annotator_id(std::move(annotator_id)) {
        if (this->system_a == this->system_b)
            throw InvariantViolation("verdict compares a system to itself");
    }
};

struct PairwiseTally {
    std::string system_a;
    std::string system_b;
    std::size_t wins = 0;
    std::size_t losses = 0;
    std::size_t ties = 0;
    std::size_t n = 0;

    // Exact in rational arithmetic; rounded to 4 places for reporting.
    double win_rate() const { return round4(wins); }
    double loss_rate() const { return round4(losses); }
    double tie_rate() const { return round4(ties); }

private:
    double round4(std::size_t c) const {
        double r = static_cast<double>(c) / static_cast<double>(n);
        return std::round(r * 10000.0) / 10000.0;
    }
};

/// Tallies verdicts for the (a, b) pair. Verdicts recorded as (b, a) are
/// flipped; verdicts mentioning any other system raise MixedPairs.
inline PairwiseTally tally_pairwise(const std::vector<PairwiseVerdict>& verdicts,
                                    const std::string& system_a,
                                    const std::string& system_b) {
    if (verdicts.empty()) throw EmptyVerdicts();
    if (system_a == system_b) throw InvariantViolation("system_a equals system_b");
    PairwiseTally t;
    t.system_a = system_a;
    t.system_b = system_b;
    for (const auto& v : verdicts) {
        Verdict oriented;
        if (v.system_a == system_a && v.system_b == system_b) {
            oriented = v.verdict;
        } else if (v.system_a == system_b && v.system_b == system_a) {
            oriented = v.verdict == Verdict::Win    ? Verdict::Loss
                       : v.verdict == Verdict::Loss ? Verdict::Win
                                                    : Verdict::Tie;
        } else {
            throw MixedPairs(v.system_a + " vs " + v.system_b);
        }
        switch (oriented) {
            case Verdict::Win: ++t.wins; break;
            case Verdict::Loss: ++t.losses; break;
            case Verdict::Tie: ++t.ties; break;
        }
        ++t.n;
    }
    return t;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(trim(cur));
    return fields;
}

}  // namespace detail

/// Reads the documented comma-delimited verdict format (header:
/// sample_id,system_a,system_b,verdict,annotator_id).
inline std::vector<PairwiseVerdict> load_verdicts(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open verdicts file: " + path);
    std::vector<PairwiseVerdict> verdicts;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (!header_seen) {
            header_seen = true;
            if (fields == std::vector<std::string>{"sample_id", "system_a", "system_b",
                                                   "verdict", "annotator_id"})
                continue;
            throw ParseError("line 1: expected header "
                             "sample_id,system_a,system_b,verdict,annotator_id");
        }
        if (fields.size() != 5)
            throw ParseError("line " + std::to_string(line_no) + ": expected 5 fields, got " +
                             std::to_string(fields.size()));
        verdicts.emplace_back(fields[0], fields[1], fields[2],
                              verdict_from_string(fields[3]), fields[4]);
    }
    return verdicts;
}

// -- human scores -------------------------------------------------------------------------

/// One human rating on the 5-point scale.
struct HumanScore {
    std::string essay_id;
    std::string system;
    MetricKind metric = MetricKind::Relevance;
    double score = 1.0;  // [1, 5]
    std::string annotator_id;
};

struct HumanScoreReport {
    std::vector<HumanScore> scores;
    // system -> per-metric mean, metric order as in kAllMetrics
    std::map<std::string, std::array<double, kMetricCount>> means;
};

/// Reads the documented comma-delimited format (header:
/// essay_id,system,metric,score,annotator_id), validates the 1..5 range, and
/// computes per-system per-metric means.
inline HumanScoreReport ingest_human_scores(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open human scores file: " + path);
    HumanScoreReport report;
    std::map<std::string, std::array<std::pair<double, std::size_t>, kMetricCount>> acc;

    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (!header_seen) {
            header_seen = true;
            if (fields == std::vector<std::string>{"essay_id", "system", "metric", "score",
                                                   "annotator_id"})
                continue;
            throw ParseError("line 1: expected header "
                             "essay_id,system,metric,score,annotator_id");
        }
        if (fields.size() != 5)
            throw ParseError("line " + std::to_string(line_no) + ": expected 5 fields, got " +
                             std::to_string(fields.size()));
        HumanScore s;
        s.essay_id = fields[0];
        s.system = fields[1];
        s.metric = metric_from_id(fields[2]);
        try {
            s.score = std::stod(fields[3]);
        } catch (const std::exception&) {
            throw ParseError("line " + std::to_string(line_no) + ": bad score '" +
                             fields[3] + "'");
        }
        if (s.score < 1.0 || s.score > 5.0)
            throw OutOfRange(s.score, "human score outside [1, 5] at line " +
                                          std::to_string(line_no));
        s.annotator_id = fields[4];
        auto& slot = acc[s.system][static_cast<std::size_t>(s.metric)];
        slot.first += s.score;
        slot.second += 1;
        report.scores.push_back(std::move(s));
    }
    for (const auto& [system, metrics] : acc) {
        std::array<double, kMetricCount> means{};
        for (std::size_t i = 0; i < kMetricCount; ++i)
            means[i] = metrics[i].second == 0
                           ? 0.0
                           : metrics[i].first / static_cast<double>(metrics[i].second);
        report.means[system] = means;
    }
    return report;
}

inline std::string render_human_means(const HumanScoreReport& report) {
    std::ostringstream out;
    out << std::left << std::setw(16) << "system";
    for (MetricKind m : kAllMetrics)
        out << std::right << std::setw(24) << metric_display_name(m);
    out << "\n";
    for (const auto& [system, means] : report.means) {
        out << std::left << std::setw(16) << system;
        for (std::size_t i = 0; i < kMetricCount; ++i)
            out << std::right << std::setw(24) << detail::format_fixed(means[i], 2);
        out << "\n";
    }
    return out.str();
}

}  // namespace pesa
