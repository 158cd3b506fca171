#include <fstream>

#include <catch2/catch_amalgamated.hpp>

#include "pesa/templates.hpp"
#include "support/generators.hpp"

using namespace pesa;

TEST_CASE("render substitutes every declared slot") {
    PromptTemplate t("Topic: {prompt}\nBody: {paragraph}", {"prompt", "paragraph"});
    CHECK(t.render({{"prompt", "P"}, {"paragraph", "B"}}) == "Topic: P\nBody: B");
}

TEST_CASE("a declared slot must appear exactly once") {
    CHECK_THROWS_AS(PromptTemplate("no slots here", {"prompt"}), TemplateError);
    CHECK_THROWS_AS(PromptTemplate("{prompt} and {prompt}", {"prompt"}), TemplateError);
}

TEST_CASE("render requires a value for every slot") {
    PromptTemplate t("{prompt}", {"prompt"});
    CHECK_THROWS_AS(t.render({}), TemplateError);
}

TEST_CASE("template hash is stable and content-derived") {
    PromptTemplate a("{prompt} x", {"prompt"});
    PromptTemplate b("{prompt} x", {"prompt"});
    PromptTemplate c("{prompt} y", {"prompt"});
    CHECK(a.hash() == b.hash());
    CHECK(a.hash() != c.hash());
    CHECK(a.hash().size() == 16);
}

TEST_CASE("default template sets satisfy slot discipline") {
    CHECK_NOTHROW(AnnotationPromptSet::defaults());
    CHECK_NOTHROW(StagePromptSet::defaults());
}

TEST_CASE("template sets load from files") {
    testgen::TempDir dir;
    {
        std::ofstream out(dir.file("claims.txt"));
        out << "Claims for {prompt} please";
    }
    {
        std::ofstream out(dir.file("grounds.txt"));
        out << "Grounds for {prompt} given {claims}";
    }
    {
        std::ofstream out(dir.file("essay.txt"));
        out << "Essay for {prompt} from {claims} and {grounds}";
    }
    auto set = StagePromptSet::from_files(dir.file("claims.txt"), dir.file("grounds.txt"),
                                          dir.file("essay.txt"));
    CHECK(set.claims_template.render({{"prompt", "T"}}) == "Claims for T please");
    CHECK_THROWS_AS(StagePromptSet::from_files(dir.file("missing.txt"),
                                               dir.file("grounds.txt"),
                                               dir.file("essay.txt")),
                    IoError);
}
