// pesa: toolkit for staged argumentative essay generation — pseudo-label
// annotation, claims/grounds planning, essay expansion, and rubric judging.

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pesa/pesa.hpp"

namespace {

std::atomic<bool> g_interrupted{false};

void handle_interrupt(int) { g_interrupted.store(true); }

struct GlobalFlags {
    std::string config_path;
    std::string backend_url;
    std::string model;
    std::string mock_scenario;
    int concurrency = 0;          // 0: keep config value
    double temperature = -1.0;    // <0: keep config value
    bool verbose = false;
};

struct Runtime {
    pesa::ToolConfig config;
    std::shared_ptr<pesa::MockBackend> mock;  // set when --mock-scenario given

    /// Backend for a role: the shared mock when scripted, otherwise an HTTP
    /// client built from the role's effective config.
    std::shared_ptr<pesa::Backend> backend_for(const std::string& role,
                                               std::ostream* log) const {
        if (mock) return mock;
        return std::make_shared<pesa::HttpBackend>(config.backend_for(role), log);
    }

    pesa::RetryPolicy retry_for(const std::string& role) const {
        return pesa::RetryPolicy::from_config(config.backend_for(role));
    }
};

Runtime make_runtime(const GlobalFlags& flags) {
    Runtime rt;
    if (!flags.config_path.empty()) rt.config = pesa::ToolConfig::load(flags.config_path);
    if (!flags.backend_url.empty()) rt.config.default_backend.base_url = flags.backend_url;
    if (!flags.model.empty()) rt.config.default_backend.model_name = flags.model;
    if (flags.concurrency > 0)
        rt.config.concurrency = static_cast<std::size_t>(flags.concurrency);
    if (flags.temperature >= 0.0)
        for (const auto& role : pesa::backend_roles())
            rt.config.temperatures[role] = flags.temperature;
    rt.config.validate();
    if (!flags.mock_scenario.empty())
        rt.mock = std::make_shared<pesa::MockBackend>(
            pesa::load_mock_scenario(flags.mock_scenario),
            rt.config.default_backend.model_name);
    return rt;
}

void print_template_provenance(const pesa::StagePromptSet& templates) {
    std::cerr << "templates: claims=" << templates.claims_template.hash()
              << " grounds=" << templates.grounds_template.hash()
              << " essay=" << templates.essay_template.hash() << "\n";
}

void print_template_provenance(const pesa::AnnotationPromptSet& templates) {
    std::cerr << "templates: annotate_grounds=" << templates.grounds_template.hash()
              << " annotate_claims=" << templates.claims_template.hash() << "\n";
}

std::vector<pesa::WritingPrompt> load_prompts(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw pesa::IoError("cannot open prompts file: " + path);
    std::vector<pesa::WritingPrompt> prompts;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string t = pesa::trim(line);
        if (t.empty()) continue;
        if (t[0] == '{') {
            pesa::ordered_json j;
            try {
                j = pesa::ordered_json::parse(t);
            } catch (const nlohmann::json::parse_error& e) {
                throw pesa::ParseError("line " + std::to_string(line_no) + ": " + e.what());
            }
            std::string text = j.value("text", j.value("prompt", ""));
            std::string id = j.value("id", "");
            if (text.empty())
                throw pesa::ParseError("line " + std::to_string(line_no) +
                                       ": prompt record needs a text field");
            if (id.empty()) id = pesa::content_hash(text);
            prompts.emplace_back(id, text);
        } else {
            prompts.emplace_back(pesa::content_hash(t), t);
        }
    }
    return prompts;
}

/// Shared job-runner for per-item workflows: parallel jobs, in-order commits,
/// failures to a rejects sidecar.
struct LineSink {
    std::ofstream out;
    std::ofstream rejects;
    std::string rejects_path;
    std::size_t written = 0;
    std::size_t failed = 0;

    LineSink(const std::string& out_path, const std::string& rejects_path_in)
        : out(out_path, std::ios::trunc | std::ios::binary), rejects_path(rejects_path_in) {
        if (!out) throw pesa::IoError("cannot open output file: " + out_path);
    }

    void accept(const std::string& line) {
        out << line << '\n';
        out.flush();
        ++written;
    }

    void reject(const std::string& id, const std::string& error) {
        if (!rejects.is_open()) {
            rejects.open(rejects_path, std::ios::app | std::ios::binary);
            if (!rejects) throw pesa::IoError("cannot open rejects file: " + rejects_path);
        }
        pesa::ordered_json j{{"id", id}, {"error", error}};
        rejects << j.dump() << '\n';
        rejects.flush();
        ++failed;
    }
};

// -- annotate ---------------------------------------------------------------

int run_annotate(const Runtime& rt, const std::string& in_path, const std::string& out_path,
                 const std::string& split, bool body_only, std::ostream* log) {
    auto corpus = pesa::load_corpus(in_path, pesa::split_from_name(split));
    auto backend = rt.backend_for("annotator", log);

    pesa::AnnotationOptions options;
    options.templates = rt.config.annotation_templates();
    options.body_only = body_only || rt.config.body_only;
    options.omit_prompt = rt.config.omit_prompt_in_annotation;
    options.temperature = rt.config.temperature_for("annotator");
    options.retry = rt.retry_for("annotator");
    options.concurrency = rt.config.concurrency;
    print_template_provenance(options.templates);

    auto report =
        pesa::build_pseudo_dataset(corpus.pairs, *backend, out_path, options, &g_interrupted);
    std::cerr << "annotate: written=" << report.written << " skipped=" << report.skipped
              << " rejected=" << report.rejected << "\n";
    if (g_interrupted.load()) {
        std::cerr << "interrupted; partial progress kept in " << out_path << "\n";
        return 1;
    }
    return report.rejected > 0 ? 1 : 0;
}

// -- sft-emit ---------------------------------------------------------------

int run_sft_emit(const Runtime& rt, const std::string& stage, const std::string& in_path,
                 const std::string& out_path) {
    auto templates = rt.config.stage_templates();
    print_template_provenance(templates);
    std::size_t n = pesa::emit_sft_records(in_path, pesa::stage_from_name(stage),
                                           templates, out_path);
    std::cerr << "sft-emit: stage=" << stage << " written=" << n << "\n";
    return 0;
}

// -- generate ---------------------------------------------------------------

int run_generate(const Runtime& rt, const std::string& prompts_path,
                 const std::string& out_path, bool end_to_end, bool single_call_grounds,
                 std::ostream* log) {
    auto prompts = load_prompts(prompts_path);
    auto templates = rt.config.stage_templates();
    print_template_provenance(templates);

    pesa::PipelineBindings bindings;
    auto bind = [&](const std::string& role) {
        pesa::StageBinding b;
        b.backend = rt.backend_for(role, log);
        b.retry = rt.retry_for(role);
        b.temperature = rt.config.temperature_for(role);
        b.max_new_tokens = role == "essay" ? 2048 : 1024;
        return b;
    };
    bindings.claims = bind("claims");
    bindings.grounds = bind("grounds");
    bindings.essay = bind("essay");

    pesa::PipelineOptions options;
    options.max_claims = rt.config.max_claims;
    options.single_call_grounds = single_call_grounds || rt.config.single_call_grounds;
    options.end_to_end = end_to_end;

    LineSink sink(out_path, out_path + ".rejects");
    struct JobOut {
        std::string id;
        std::optional<std::string> line;
        std::string error;
    };
    auto job = [&](std::size_t i) -> JobOut {
        JobOut jo;
        jo.id = prompts[i].id;
        try {
            jo.line = pesa::encode_record(
                pesa::run_pipeline(prompts[i], bindings, templates, options));
        } catch (const pesa::Error& e) {
            jo.error = e.what();
        }
        return jo;
    };
    auto commit = [&](std::size_t, auto&& slot) {
        if constexpr (std::is_same_v<std::decay_t<decltype(slot)>, std::exception_ptr>)
            std::rethrow_exception(slot);
        else {
            if (slot.line)
                sink.accept(*slot.line);
            else
                sink.reject(slot.id, slot.error);
        }
    };
    pesa::ordered_parallel_for<JobOut>(prompts.size(), rt.config.concurrency, job, commit,
                                       &g_interrupted);
    std::cerr << "generate: written=" << sink.written << " rejected=" << sink.failed
              << "\n";
    if (g_interrupted.load()) return 1;
    return sink.failed > 0 ? 1 : 0;
}

// -- evaluate ---------------------------------------------------------------

int run_evaluate(const Runtime& rt, const std::string& in_path, const std::string& out_path,
                 const std::string& report_path, std::ostream* log) {
    std::cerr << "judge-prompts: " << pesa::judge_prompts_hash() << "\n";

    std::vector<std::pair<std::string, pesa::Essay>> essays;
    {
        std::ifstream in(in_path);
        if (!in) throw pesa::IoError("cannot open generations file: " + in_path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (pesa::trim(line).empty()) continue;
            try {
                auto record = pesa::decode_record(line);
                essays.emplace_back(record.id, pesa::Essay(record.essay_text));
            } catch (const pesa::Error& e) {
                throw pesa::ParseError("line " + std::to_string(line_no) + ": " + e.what());
            }
        }
    }

    auto judge = rt.backend_for("judge", log);
    pesa::JudgeOptions options;
    options.temperature = rt.config.temperature_for("judge");
    options.retry = rt.retry_for("judge");

    LineSink sink(out_path, out_path + ".rejects");
    std::vector<pesa::EssayEvaluation> completed;
    struct JobOut {
        std::string id;
        std::optional<pesa::EssayEvaluation> eval;
        std::string error;
    };
    auto job = [&](std::size_t i) -> JobOut {
        JobOut jo;
        jo.id = essays[i].first;
        try {
            jo.eval = pesa::evaluate_essay(essays[i].first, essays[i].second, *judge, options);
        } catch (const pesa::Error& e) {
            jo.error = e.what();
        }
        return jo;
    };
    auto commit = [&](std::size_t, auto&& slot) {
        if constexpr (std::is_same_v<std::decay_t<decltype(slot)>, std::exception_ptr>)
            std::rethrow_exception(slot);
        else {
            if (slot.eval) {
                sink.accept(pesa::evaluation_to_line(*slot.eval));
                completed.push_back(*slot.eval);
            } else {
                sink.reject(slot.id, slot.error);
            }
        }
    };
    pesa::ordered_parallel_for<JobOut>(essays.size(), rt.config.concurrency, job, commit,
                                       &g_interrupted);

    if (!completed.empty()) {
        auto report = pesa::evaluate_corpus(completed);
        std::cout << pesa::render_report(report);
        if (!report_path.empty()) {
            std::ofstream rout(report_path, std::ios::trunc | std::ios::binary);
            if (!rout) throw pesa::IoError("cannot open report file: " + report_path);
            rout << pesa::report_to_json_line(report) << '\n';
        }
    }
    std::cerr << "evaluate: judged=" << sink.written << " rejected=" << sink.failed << "\n";
    if (g_interrupted.load()) return 1;
    return sink.failed > 0 ? 1 : 0;
}

int run_human_scores(const std::string& path) {
    auto report = pesa::ingest_human_scores(path);
    std::cout << pesa::render_human_means(report);
    std::cerr << "human-scores: rows=" << report.scores.size() << "\n";
    return 0;
}

// -- tally --------------------------------------------------------------------

int run_tally(const std::string& in_path, const std::string& system_a,
              const std::string& system_b) {
    auto verdicts = pesa::load_verdicts(in_path);
    auto tally = pesa::tally_pairwise(verdicts, system_a, system_b);
    pesa::ordered_json j{{"system_a", tally.system_a}, {"system_b", tally.system_b},
                         {"n", tally.n},               {"win_rate", tally.win_rate()},
                         {"loss_rate", tally.loss_rate()}, {"tie_rate", tally.tie_rate()}};
    std::cout << j.dump() << "\n";
    return 0;
}

// -- stats ---------------------------------------------------------------------

int run_stats(const std::string& in_path, const std::string& split, long expect_size) {
    auto corpus = pesa::load_corpus(in_path, pesa::split_from_name(split));
    auto stats = pesa::corpus_stats(corpus);
    pesa::ordered_json j{{"split", pesa::split_name(corpus.split)},
                         {"pairs", stats.pair_count},
                         {"mean_paragraphs", stats.mean_paragraphs},
                         {"min_paragraphs", stats.min_paragraphs},
                         {"max_paragraphs", stats.max_paragraphs},
                         {"mean_prompt_chars", stats.mean_prompt_chars},
                         {"content_hash", corpus.content_hash}};
    std::cout << j.dump() << "\n";
    if (expect_size >= 0)
        pesa::assert_split_size(corpus, static_cast<std::size_t>(expect_size));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    std::signal(SIGINT, handle_interrupt);

    CLI::App app{"pesa: staged argumentative essay generation toolkit"};
    app.require_subcommand(1);

    GlobalFlags flags;
    app.add_option("--config", flags.config_path, "configuration file (ini)");
    app.add_option("--backend-url", flags.backend_url, "override default backend base url");
    app.add_option("--model", flags.model, "override default model name");
    app.add_option("--concurrency", flags.concurrency, "bounded-parallelism limit");
    app.add_option("--temperature", flags.temperature, "override temperature for all roles");
    app.add_option("--mock-scenario", flags.mock_scenario,
                   "scenario file; replaces every backend with the scripted mock");
    app.add_flag("--verbose", flags.verbose, "log every backend attempt to stderr");

    std::string in_path, out_path, prompts_path, stage, split = "train";
    std::string system_a, system_b, report_path, human_scores_path;
    bool body_only = false, end_to_end = false, single_call = false;
    long expect_size = -1;

    auto* annotate = app.add_subcommand("annotate", "build the pseudo-labeled dataset");
    annotate->add_option("--in", in_path, "corpus file (canonical or tsv)")->required();
    annotate->add_option("--out", out_path, "pseudo-label output file")->required();
    annotate->add_option("--split", split, "corpus split name");
    annotate->add_flag("--body-only", body_only, "drop first/last paragraphs");

    auto* sft = app.add_subcommand("sft-emit", "emit staged fine-tuning records");
    sft->add_option("--stage", stage, "claims | grounds | essay")->required();
    sft->add_option("--in", in_path, "pseudo-label file")->required();
    sft->add_option("--out", out_path, "sft output file")->required();

    auto* generate = app.add_subcommand("generate", "run the three-stage pipeline");
    generate->add_option("--prompts", prompts_path, "prompt file (one per line)")->required();
    generate->add_option("--out", out_path, "generations output file")->required();
    generate->add_flag("--end-to-end", end_to_end, "skip planning; prompt -> essay");
    generate->add_flag("--single-call-grounds", single_call,
                       "one grounds call for the whole plan");

    auto* evaluate = app.add_subcommand("evaluate", "judge generations on the five metrics");
    evaluate->add_option("--in", in_path, "generations file");
    evaluate->add_option("--out", out_path, "per-essay evaluations output");
    evaluate->add_option("--report", report_path, "machine-readable corpus report");
    evaluate->add_option("--human-scores", human_scores_path,
                         "ingest a human score file instead of judging");

    auto* tally = app.add_subcommand("tally", "tally pairwise win/loss/tie verdicts");
    tally->add_option("--in", in_path, "verdicts csv")->required();
    tally->add_option("--system-a", system_a, "first system")->required();
    tally->add_option("--system-b", system_b, "second system")->required();

    auto* stats = app.add_subcommand("stats", "corpus summary");
    stats->add_option("--in", in_path, "corpus file")->required();
    stats->add_option("--split", split, "corpus split name");
    stats->add_option("--expect-size", expect_size, "assert the exact pair count");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    std::ostream* log = flags.verbose ? &std::cerr : nullptr;

    // setup failures (bad config, missing referenced files) exit 2
    Runtime rt;
    try {
        rt = make_runtime(flags);
        if (evaluate->parsed() && human_scores_path.empty() &&
            (in_path.empty() || out_path.empty()))
            throw pesa::ConfigError("evaluate needs --in and --out (or --human-scores)");
    } catch (const pesa::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (annotate->parsed())
            return run_annotate(rt, in_path, out_path, split, body_only, log);
        if (sft->parsed()) return run_sft_emit(rt, stage, in_path, out_path);
        if (generate->parsed())
            return run_generate(rt, prompts_path, out_path, end_to_end, single_call, log);
        if (evaluate->parsed())
            return human_scores_path.empty()
                       ? run_evaluate(rt, in_path, out_path, report_path, log)
                       : run_human_scores(human_scores_path);
        if (tally->parsed()) return run_tally(in_path, system_a, system_b);
        if (stats->parsed()) return run_stats(in_path, split, expect_size);
    } catch (const pesa::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const pesa::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
