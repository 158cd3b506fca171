#include <memory>
#include <random>

#include <catch2/catch_amalgamated.hpp>

#include "pesa/proof_enhancement.hpp"
#include "pesa/record_io.hpp"
#include "support/fixtures.hpp"
#include "support/generators.hpp"

using namespace pesa;

namespace {

std::shared_ptr<MockBackend> mock_queue(std::vector<MockEntry> entries,
                                        const std::string& model = "mock-model") {
    return std::make_shared<MockBackend>(MockScript::queue(std::move(entries)), model);
}

StageBinding binding_for(std::shared_ptr<Backend> backend) {
    StageBinding b;
    b.backend = std::move(backend);
    b.retry = RetryPolicy{0, 0.001};
    b.temperature = 0.7;
    b.max_new_tokens = 256;
    return b;
}

PipelineBindings all_stages(std::shared_ptr<Backend> backend) {
    return {binding_for(backend), binding_for(backend), binding_for(backend)};
}

const WritingPrompt kPrompt("p1", "Should secondary education be universal?");

}  // namespace

TEST_CASE("parse_numbered_list fixture corpus", "[fixtures]") {
    for (const auto& c : testfix::numbered_list_cases()) {
        INFO(c.name);
        if (c.expect_error) {
            CHECK_THROWS_AS(parse_numbered_list(c.input), ParseError);
        } else {
            CHECK(parse_numbered_list(c.input).items == c.items);
        }
    }
}

TEST_CASE("parse_numbered_list flags non-contiguous numbering") {
    auto r = parse_numbered_list("1. A\n3. B");
    REQUIRE(r.items == std::vector<std::string>{"A", "B"});
    bool flagged = false;
    for (const auto& w : r.warnings) flagged = flagged || w == "NonContiguousNumbering";
    CHECK(flagged);
    CHECK(parse_numbered_list("1. A\n2. B").warnings.empty());
}

TEST_CASE("render then parse is the identity on well-formed plans", "[property]") {
    std::mt19937 rng(31);
    for (int iter = 0; iter < 200; ++iter) {
        auto items = testgen::random_plan_items(rng);
        auto parsed = parse_numbered_list(render_plan(items));
        CHECK(parsed.items == items);
        CHECK(parsed.warnings.empty());
    }
}

TEST_CASE("render_plan numbers items one per line") {
    CHECK(render_plan({"A", "B"}) == "1. A\n2. B");
    CHECK(render_plan({"A\ncont", "B"}) == "1. A\ncont\n2. B");
}

// -- plan_claims --------------------------------------------------------------

TEST_CASE("plan_claims parses the scripted list") {
    auto mock = mock_queue({std::string(
        "1. Education is a basic right\n"
        "2. Secondary education is a prerequisite for higher education")});
    auto result = plan_claims(kPrompt, binding_for(mock), StagePromptSet::defaults());
    CHECK(result.plan.claims ==
          std::vector<std::string>{
              "Education is a basic right",
              "Secondary education is a prerequisite for higher education"});
    CHECK(result.meta.stage == "claims");
    CHECK(result.meta.raw.get<std::string>().rfind("1. Education", 0) == 0);
    CHECK(mock->call_count() == 1);
}

TEST_CASE("plan_claims rejects an empty prompt before any call") {
    auto mock = mock_queue({std::string("1. A")});
    WritingPrompt empty;
    CHECK_THROWS_AS(plan_claims(empty, binding_for(mock), StagePromptSet::defaults()),
                    InvariantViolation);
    CHECK(mock->call_count() == 0);
}

TEST_CASE("plan_claims re-asks once with a list-format reminder, then fails") {
    SECTION("second attempt recovers") {
        auto mock = mock_queue({std::string("prose, no list"), std::string("1. A\n2. B")});
        auto result = plan_claims(kPrompt, binding_for(mock), StagePromptSet::defaults());
        CHECK(result.plan.claims.size() == 2);
        REQUIRE(mock->call_count() == 2);
        CHECK(mock->calls()[1].user_text.find("numbered list") != std::string::npos);
    }
    SECTION("both attempts prose") {
        auto mock = mock_queue({std::string("prose"), std::string("still prose")});
        CHECK_THROWS_AS(plan_claims(kPrompt, binding_for(mock), StagePromptSet::defaults()),
                        ParseError);
        CHECK(mock->call_count() == 2);
    }
}

TEST_CASE("plan_claims truncates beyond max_claims with a warning") {
    auto mock = mock_queue(
        {std::string("1. a\n2. b\n3. c\n4. d\n5. e\n6. f\n7. g\n8. h")});
    PipelineOptions options;
    options.max_claims = 6;
    auto result =
        plan_claims(kPrompt, binding_for(mock), StagePromptSet::defaults(), options);
    CHECK(result.plan.claims.size() == 6);
    bool warned = false;
    for (const auto& w : result.meta.warnings)
        warned = warned || w.rfind("TruncatedClaims", 0) == 0;
    CHECK(warned);
}

// -- plan_grounds --------------------------------------------------------------

TEST_CASE("plan_grounds issues one call per claim in order") {
    auto mock = mock_queue({std::string("E1"), std::string("E2")});
    ClaimPlan claims({"claim one", "claim two"});
    auto result =
        plan_grounds(kPrompt, claims, binding_for(mock), StagePromptSet::defaults());
    CHECK(result.plan.grounds == std::vector<std::string>{"E1", "E2"});
    CHECK(validate_alignment(claims, result.plan).ok());
    REQUIRE(mock->call_count() == 2);
    // each rendered prompt embeds the full claim list plus a focus directive
    auto calls = mock->calls();
    for (std::size_t i = 0; i < 2; ++i) {
        const auto& text = calls[i].user_text;
        CHECK(text.find(render_plan(claims.claims)) != std::string::npos);
        CHECK(text.find("claim " + std::to_string(i + 1)) != std::string::npos);
    }
}

TEST_CASE("plan_grounds fails fast on an empty claim plan") {
    auto mock = mock_queue({std::string("E1")});
    ClaimPlan none;
    CHECK_THROWS_AS(
        plan_grounds(kPrompt, none, binding_for(mock), StagePromptSet::defaults()),
        InvariantViolation);
    CHECK(mock->call_count() == 0);
}

TEST_CASE("plan_grounds re-asks a blank ground once then reports the index") {
    auto mock = mock_queue({std::string("E1"), std::string(""), std::string("")});
    ClaimPlan claims({"claim one", "claim two"});
    try {
        plan_grounds(kPrompt, claims, binding_for(mock), StagePromptSet::defaults());
        FAIL("expected EmptyAnnotation");
    } catch (const EmptyAnnotation& e) {
        CHECK(e.index == 1);
    }
    CHECK(mock->call_count() == 3);
}

TEST_CASE("single-call grounds mode parses one list and checks the count") {
    PipelineOptions options;
    options.single_call_grounds = true;
    ClaimPlan claims({"claim one", "claim two"});
    SECTION("happy path") {
        auto mock = mock_queue({std::string("1. E1\n2. E2")});
        auto result = plan_grounds(kPrompt, claims, binding_for(mock),
                                   StagePromptSet::defaults(), options);
        CHECK(result.plan.grounds == std::vector<std::string>{"E1", "E2"});
        CHECK(mock->call_count() == 1);
    }
    SECTION("wrong count twice") {
        auto mock = mock_queue({std::string("1. E1"), std::string("1. E1")});
        try {
            plan_grounds(kPrompt, claims, binding_for(mock), StagePromptSet::defaults(),
                         options);
            FAIL("expected CountMismatch");
        } catch (const CountMismatch& e) {
            CHECK(e.expected == 2);
            CHECK(e.actual == 1);
        }
        CHECK(mock->call_count() == 2);
    }
}

// -- expand_essay ----------------------------------------------------------------

TEST_CASE("expand_essay renders all three sections and splits paragraphs") {
    auto mock = mock_queue({std::string("Intro para.\n\nBody para.\n\nConclusion.")});
    ClaimPlan claims({"c1", "c2"});
    GroundPlan grounds({"g1", "g2"});
    auto result =
        expand_essay(kPrompt, claims, grounds, binding_for(mock), StagePromptSet::defaults());
    CHECK(result.essay.paragraphs.size() == 3);
    CHECK(result.meta.warnings.empty());
    auto calls = mock->calls();
    const auto& text = calls[0].user_text;
    CHECK(text.find(render_plan(claims.claims)) != std::string::npos);
    CHECK(text.find(render_plan(grounds.grounds)) != std::string::npos);
    CHECK(text.find(kPrompt.text) != std::string::npos);
}

TEST_CASE("expand_essay rejects misaligned plans before any call") {
    auto mock = mock_queue({std::string("essay")});
    ClaimPlan claims({"c1", "c2", "c3"});
    GroundPlan grounds({"g1", "g2"});
    CHECK_THROWS_AS(expand_essay(kPrompt, claims, grounds, binding_for(mock),
                                 StagePromptSet::defaults()),
                    InvariantViolation);
    CHECK(mock->call_count() == 0);
}

TEST_CASE("expand_essay warns on single-paragraph output") {
    auto mock = mock_queue({std::string("just one paragraph")});
    ClaimPlan claims({"c1"});
    GroundPlan grounds({"g1"});
    auto result =
        expand_essay(kPrompt, claims, grounds, binding_for(mock), StagePromptSet::defaults());
    CHECK(result.meta.warnings == std::vector<std::string>{"ShortEssay"});
}

TEST_CASE("expand_essay re-asks a blank generation once") {
    auto mock = mock_queue({std::string(""), std::string("")});
    ClaimPlan claims({"c1"});
    GroundPlan grounds({"g1"});
    CHECK_THROWS_AS(expand_essay(kPrompt, claims, grounds, binding_for(mock),
                                 StagePromptSet::defaults()),
                    EmptyGeneration);
    CHECK(mock->call_count() == 2);
}

// -- run_pipeline -----------------------------------------------------------------

TEST_CASE("run_pipeline chains the three stages and stamps metadata") {
    auto mock = mock_queue({std::string("1. c1\n2. c2"), std::string("g1"),
                            std::string("g2"),
                            std::string("Para one.\n\nPara two.\n\nPara three.")});
    auto out = run_pipeline(kPrompt, all_stages(mock), StagePromptSet::defaults());
    REQUIRE(out.claim_plan.has_value());
    CHECK(out.claim_plan->claims == std::vector<std::string>{"c1", "c2"});
    CHECK(out.ground_plan->grounds == std::vector<std::string>{"g1", "g2"});
    CHECK(out.essay.paragraphs.size() == 3);
    REQUIRE(out.stages.size() == 3);
    CHECK(out.stages[0].stage == "claims");
    CHECK(out.stages[1].stage == "grounds");
    CHECK(out.stages[2].stage == "essay");
    CHECK(out.stages[1].raw.is_array());
    // stage order in the transcript: claims, grounds, grounds, essay
    auto calls = mock->calls();
    REQUIRE(calls.size() == 4);
    CHECK(calls[0].request_tag == "claims");
    CHECK(calls[1].request_tag == "grounds");
    CHECK(calls[3].request_tag == "essay");
}

TEST_CASE("grounds-stage prompts embed the parsed claims verbatim") {
    auto mock = mock_queue({std::string("1. alpha claim\n2. beta claim"),
                            std::string("g1"), std::string("g2"),
                            std::string("One.\n\nTwo.")});
    auto out = run_pipeline(kPrompt, all_stages(mock), StagePromptSet::defaults());
    auto calls = mock->calls();
    std::string claims_section = render_plan(out.claim_plan->claims);
    CHECK(calls[1].user_text.find(claims_section) != std::string::npos);
    CHECK(calls[2].user_text.find(claims_section) != std::string::npos);
    std::string grounds_section = render_plan(out.ground_plan->grounds);
    CHECK(calls[3].user_text.find(claims_section) != std::string::npos);
    CHECK(calls[3].user_text.find(grounds_section) != std::string::npos);
}

TEST_CASE("a claims failure aborts the pipeline before any grounds call") {
    auto mock = mock_queue({std::string("no list"), std::string("still no list")});
    try {
        run_pipeline(kPrompt, all_stages(mock), StagePromptSet::defaults());
        FAIL("expected PipelineStageError");
    } catch (const PipelineStageError& e) {
        CHECK(e.stage == Stage::Claims);
        CHECK_FALSE(e.partial_claims.has_value());
    }
    CHECK(mock->call_count("grounds") == 0);
    CHECK(mock->call_count("essay") == 0);
}

TEST_CASE("a grounds failure carries the partial claim plan") {
    auto mock = mock_queue({std::string("1. c1\n2. c2"), std::string("g1"),
                            MockFault{MockFault::Kind::Http, 400, "bad"}});
    try {
        run_pipeline(kPrompt, all_stages(mock), StagePromptSet::defaults());
        FAIL("expected PipelineStageError");
    } catch (const PipelineStageError& e) {
        CHECK(e.stage == Stage::Grounds);
        REQUIRE(e.partial_claims.has_value());
        CHECK(e.partial_claims->claims.size() == 2);
    }
    CHECK(mock->call_count("essay") == 0);
}

TEST_CASE("identical scenarios produce byte-identical encoded output") {
    auto run_once = [] {
        auto mock = mock_queue({std::string("1. c1\n2. c2"), std::string("g1"),
                                std::string("g2"), std::string("One.\n\nTwo.")});
        auto out = run_pipeline(kPrompt, all_stages(mock), StagePromptSet::defaults());
        return encode_record(out);
    };
    CHECK(run_once() == run_once());
}

TEST_CASE("end-to-end mode calls the essay endpoint with the prompt text only") {
    auto mock = mock_queue({std::string("Essay one.\n\nEssay two.")});
    PipelineOptions options;
    options.end_to_end = true;
    auto out = run_pipeline(kPrompt, all_stages(mock), StagePromptSet::defaults(), options);
    CHECK(out.end_to_end());
    CHECK_FALSE(out.claim_plan.has_value());
    REQUIRE(mock->call_count() == 1);
    CHECK(mock->calls()[0].request_tag == "essay");
    CHECK(mock->calls()[0].user_text == kPrompt.text);
    CHECK(encode_record(out).find("end_to_end") != std::string::npos);
}

TEST_CASE("pipeline requires all three stages bound") {
    PipelineBindings bindings;
    bindings.claims = binding_for(mock_queue({}));
    CHECK_THROWS_AS(run_pipeline(kPrompt, bindings, StagePromptSet::defaults()),
                    InvariantViolation);
}
