#pragma once

#include <optional>
#include <string>
#include <vector>

namespace pesa::testfix {

/// One parse_numbered_list fixture: expected items, or empty+expect_error.
struct ListCase {
    std::string name;
    std::string input;
    std::vector<std::string> items;  // ignored when expect_error
    bool expect_error = false;
};

inline const std::vector<ListCase>& numbered_list_cases() {
    static const std::vector<ListCase> cases = {
        {"dot markers", "1. A\n2. B", {"A", "B"}},
        {"paren markers", "1) A\n2) B", {"A", "B"}},
        {"dash bullets", "- A\n- B", {"A", "B"}},
        {"unicode bullets", "\xe2\x80\xa2 A\n\xe2\x80\xa2 B", {"A", "B"}},
        {"continuation line", "1) A\nmore A\n2) B", {"A\nmore A", "B"}},
        {"indented continuation", "1. A\n   still A\n2. B", {"A\nstill A", "B"}},
        {"leading prose skipped", "Here are the claims:\n1. A\n2. B", {"A", "B"}},
        {"non-contiguous numbering", "1. A\n3. B", {"A", "B"}},
        {"numbering starts late", "2. A\n3. B", {"A", "B"}},
        {"large start", "10. A\n11. B", {"A", "B"}},
        {"mixed marker styles", "1. A\n- B", {"A", "B"}},
        {"blank line between items", "1. A\n\n2. B", {"A", "B"}},
        {"trailing blank lines", "1. A\n2. B\n\n\n", {"A", "B"}},
        {"single item", "1. only", {"only"}},
        {"trailing spaces trimmed", "1. A   \n2.  B  ", {"A", "B"}},
        {"crlf input", "1. A\r\n2. B\r\n", {"A", "B"}},
        {"digits inside continuation", "1. price rose\n2008 was hard\n2. B",
         {"price rose\n2008 was hard", "B"}},
        {"four digit number is not a marker", "1. A\n1000. not a marker",
         {"A\n1000. not a marker"}},
        {"marker needs following space", "1.A\n2.B", {}, true},
        {"decimal-looking line attaches", "1. growth\n3.14 is not a marker",
         {"growth\n3.14 is not a marker"}},
        {"paren and dot mixed", "1. A\n2) B", {"A", "B"}},
        {"zero start tolerated", "0. A\n1. B", {"A", "B"}},
        {"duplicate numbers tolerated", "1. A\n1. B", {"A", "B"}},
        {"empty marker fed by continuation", "1.\ncontent\n2. B", {"content", "B"}},
        {"spaces before marker", "  1. A\n  2. B", {"A", "B"}},
        {"trailing prose attaches to last item", "1. A\n2. B\nOverall fine.",
         {"A", "B\nOverall fine."}},
        {"bullet without space is not a marker", "-A\n-B", {}, true},
        {"plain prose", "no markers here", {}, true},
        {"empty input", "", {}, true},
        {"whitespace only", "   \n \n", {}, true},
    };
    return cases;
}

/// One parse_judge_score fixture: expected (explanation, score) or an error
/// class.
struct ScoreCase {
    std::string name;
    std::string input;
    std::string explanation;  // ignored on errors
    int score = 0;
    enum class Expect { Ok, NoScore, OutOfRange } expect = Expect::Ok;
};

inline const std::vector<ScoreCase>& judge_score_cases() {
    using E = ScoreCase::Expect;
    static const std::vector<ScoreCase> cases = {
        {"plain", "The essay stays on topic throughout. 85/100",
         "The essay stays on topic throughout.", 85},
        {"last occurrence wins", "Earlier I considered 60/100 but on reflection: 72/100",
         "Earlier I considered 60/100 but on reflection:", 72},
        {"descending mentions", "90/100 at first glance, final: 85/100",
         "90/100 at first glance, final:", 85},
        {"space both sides", "solid reasoning 85 / 100", "solid reasoning", 85},
        {"space before slash", "good flow 85 /100", "good flow", 85},
        {"space after slash", "good flow 85/ 100", "good flow", 85},
        {"zero score", "entirely off-topic. 0/100", "entirely off-topic.", 0},
        {"full marks", "flawless. 100/100", "flawless.", 100},
        {"score at start", "85/100", "", 85},
        {"newline before score", "reasoned well.\n85/100", "reasoned well.", 85},
        {"multiline explanation", "point one.\npoint two.\n\n78/100",
         "point one.\npoint two.", 78},
        {"trailing period", "fine. 85/100.", "fine.", 85},
        {"trailing words", "fine. 85/100 overall", "fine.", 85},
        {"parenthesised", "fine (85/100)", "fine (", 85},
        {"bold-ish wrapper", "Score: **85/100**", "Score: **", 85},
        {"single digit", "weak essay. 7/100", "weak essay.", 7},
        {"out-of-range then valid", "not 250/100, more like 80/100",
         "not 250/100, more like", 80},
        {"valid then out-of-range", "80/100 was my read, never 300/100", "", 80},
        {"only out-of-range", "I rate it 150/100", "", 0, E::OutOfRange},
        {"only out-of-range spaced", "easily 101 / 100", "", 0, E::OutOfRange},
        {"no score at all", "I'd rate this essay highly.", "", 0, E::NoScore},
        {"empty input", "", "", 0, E::NoScore},
        {"denominator not 100", "maybe 8/10", "", 0, E::NoScore},
        {"denominator 1000", "85/1000 sounds wrong", "", 0, E::NoScore},
        {"bare slash", "n/a and /100 alone", "", 0, E::NoScore},
        {"decimal numerator skipped", "precisely 8.5/100", "", 0, E::NoScore},
        {"decimal then integer", "8.5/100 rounds to 9/100", "8.5/100 rounds to", 9},
        {"template literally", "a direct score in the form of xx/100.", "", 0, E::NoScore},
        {"score embedded mid-sentence", "I give 64/100 because evidence is thin",
         "I give", 64},
        {"hundred in explanation", "100 people agree. 91/100", "100 people agree.", 91},
    };
    return cases;
}

}  // namespace pesa::testfix
