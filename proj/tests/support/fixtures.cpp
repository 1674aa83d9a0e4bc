#include "fixtures.hpp"

#include <cmath>

namespace jitdp::testing {

namespace {

std::vector<std::string> numbered(const std::string& stem, int from, int to) {
    std::vector<std::string> out;
    for (int i = from; i <= to; ++i) out.push_back(stem + std::to_string(i));
    return out;
}

std::vector<std::string> operator+(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

}  // namespace

RepoBuilder metrics_fixture() {
    const auto t0 = kFixtureEpoch;
    const std::vector<std::string> b_lines = {"int b_value_1 = 1;", "int b_value_2 = 2;", "int b_value_3 = 3;",
                                              "int b_value_4 = 4;"};
    RepoBuilder b;
    int c1 = b.commit({.message = "initial import",
                       .time = t0,
                       .author = kAlice,
                       .writes = {{"core/a.c", lines(numbered("a", 1, 10))},
                                  {"net/b.c", lines(b_lines)},
                                  {"docs/readme.md", lines({"readme"})}}});
    int c2 = b.commit({.message = "fix crash in parser",
                       .time = t0 + 2 * kDay,
                       .author = kBob,
                       .parents = {c1},
                       .writes = {{"core/a.c", lines(std::vector<std::string>{"a1", "A2", "A3"} + numbered("a", 4, 11))},
                                  {"core/util/c.c", lines({"c1", "c2", "c3"})}}});
    int c3 = b.commit({.message = "move b into core",
                       .time = t0 + 3 * kDay,
                       .author = kAlice,
                       .parents = {c2},
                       .writes = {{"core/a.c", lines(std::vector<std::string>{"A2", "A3"} + numbered("a", 4, 11))},
                                  {"core/b2.c", lines({b_lines[0], b_lines[1], b_lines[2], "int b_value_4 = 40;"})}},
                       .renames = {{"net/b.c", "core/b2.c"}}});
    int c4 = b.commit({.message = "document and test",
                       .time = t0 + 5 * kDay,
                       .author = kBob,
                       .parents = {c3},
                       .writes = {{"docs/readme.md", lines({"readme", "more"})}, {"test/t.c", lines({"t1"})}}});
    int c5 = b.commit({.message = "refactor, see #42",
                       .time = t0 + 6 * kDay,
                       .author = kBob,
                       .parents = {c4},
                       .writes = {{"core/b2.c", lines({b_lines[0], b_lines[1], b_lines[2], "int b_value_4 = 40;",
                                                       "int b_value_5 = 5;", "int b_value_6 = 6;"})},
                                  {"test/t.c", lines({"t1", "t2"})}},
                       .removes = {"core/util/c.c"}});
    b.commit({.message = "add entry point",
              .time = t0 + 8 * kDay,
              .author = kAlice,
              .parents = {c5},
              .writes = {{"main.c", lines(numbered("m", 1, 5))},
                         {"core/a.c", lines(std::vector<std::string>{"A2", "A3"} + numbered("a", 4, 12))}}});
    return b;
}

namespace {

double entropy2(double a, double b) {
    const double pa = a / (a + b), pb = b / (a + b);
    return -(pa * std::log2(pa) + pb * std::log2(pb));  // log2(2) = 1
}

double recency(double days) { return 1.0 / (1.0 + days * 86400.0 / 31557600.0); }

}  // namespace

std::vector<std::pair<int, ChangeMetrics>> metrics_fixture_expected() {
    //              ns nd nf entropy           la ld lt fix    ndev age  nuc exp rexp                            sexp
    return {{1, {2, 2, 2, entropy2(10, 4), 14, 0, 0, false, 0, 0.0, 0, 0, 0.0, 0}},
            {2, {1, 2, 2, entropy2(5, 3), 6, 2, 10, true, 1, 1.0, 1, 0, 0.0, 0}},
            {3, {1, 1, 2, entropy2(1, 2), 1, 2, 15, false, 2, 2.0, 2, 1, recency(3), 1}},
            {5, {1, 2, 2, entropy2(2, 3), 2, 3, 7, true, 2, 3.5, 3, 1, recency(4), 1}},
            {6, {2, 2, 2, entropy2(5, 1), 6, 0, 10, false, 2, 2.5, 3, 2, recency(8) + recency(5), 2}}};
}

SzzScenario linear_scenario() {
    SzzScenario s{.name = "linear"};
    auto& b = s.builder;
    int c1 = b.commit({.message = "add solver", .time = kFixtureEpoch, .author = kAlice,
                       .writes = {{"src/solve.c", lines(numbered("step ", 1, 6))}}});
    int c2 = b.commit({.message = "tune step three", .time = kFixtureEpoch + kDay, .author = kBob, .parents = {c1},
                       .writes = {{"src/solve.c", lines({"step 1", "step 2", "step 3 tuned", "step 4", "step 5",
                                                         "step 6"})}}});
    int c3 = b.commit({.message = "extend solver", .time = kFixtureEpoch + 2 * kDay, .author = kAlice, .parents = {c2},
                       .writes = {{"src/solve.c", lines({"step 1", "step 2", "step 3 tuned", "step 4", "step 5",
                                                         "step 6", "step 7"})},
                                  {"src/other.c", lines({"other"})}}});
    s.fix = b.commit({.message = "fix wrong step", .time = kFixtureEpoch + 3 * kDay, .author = kBob, .parents = {c3},
                      .writes = {{"src/solve.c", lines({"step 1", "step 2 fixed", "step 3 fixed", "step 4", "step 5",
                                                        "step 6", "step 7", "step 8"})}}});
    s.inducing = {c1, c2};
    return s;
}

SzzScenario rename_scenario() {
    SzzScenario s{.name = "rename"};
    auto& b = s.builder;
    auto body = numbered("long enough line number ", 1, 6);
    int c1 = b.commit({.message = "add module", .time = kFixtureEpoch, .author = kAlice,
                       .writes = {{"old/mod.c", lines(body)}}});
    int c2 = b.commit({.message = "relocate module", .time = kFixtureEpoch + kDay, .author = kBob, .parents = {c1},
                       .renames = {{"old/mod.c", "new/mod.c"}}});
    auto edited = body;
    edited[3] = "long enough line number 4 reworked";
    int c3 = b.commit({.message = "rework line four", .time = kFixtureEpoch + 2 * kDay, .author = kBob, .parents = {c2},
                       .writes = {{"new/mod.c", lines(edited)}}});
    auto fixed = edited;
    fixed.erase(fixed.begin() + 3);
    fixed.erase(fixed.begin() + 1);
    s.fix = b.commit({.message = "fix module", .time = kFixtureEpoch + 3 * kDay, .author = kAlice, .parents = {c3},
                      .writes = {{"new/mod.c", lines(fixed)}}});
    s.inducing = {c1, c3};
    return s;
}

SzzScenario whitespace_scenario() {
    SzzScenario s{.name = "whitespace"};
    auto& b = s.builder;
    int c1 = b.commit({.message = "add loop", .time = kFixtureEpoch, .author = kAlice,
                       .writes = {{"src/loop.c", lines({"int f() {", "int x = 0;", "x = 1;", "return x;", "}"})}}});
    int c2 = b.commit({.message = "change assignment", .time = kFixtureEpoch + kDay, .author = kBob, .parents = {c1},
                       .writes = {{"src/loop.c", lines({"int f() {", "int x = 0;", "x = bad;", "return x;", "}"})}}});
    int c3 = b.commit({.message = "reindent", .time = kFixtureEpoch + 2 * kDay, .author = kAlice, .parents = {c2},
                       .writes = {{"src/loop.c",
                                   lines({"int f()  {", "    int x = 0;", "    x =  bad;", "    return x;", "}"})}}});
    s.fix = b.commit({.message = "fix assignment", .time = kFixtureEpoch + 3 * kDay, .author = kBob, .parents = {c3},
                      .writes = {{"src/loop.c",
                                  lines({"int f()  {", "    int y = 0;", "    x = good;", "    return x;", "}"})}}});
    s.inducing = {c1, c2};
    return s;
}

SzzScenario merge_scenario() {
    SzzScenario s{.name = "merge"};
    auto& b = s.builder;
    int c1 = b.commit({.message = "add config", .time = kFixtureEpoch, .author = kAlice,
                       .writes = {{"src/cfg.c", lines({"a = 1;", "x = 1;", "b = 1;", "c = 1;", "y = 1;"})}}});
    int side = b.commit({.message = "side tweak", .time = kFixtureEpoch + kDay, .author = kBob, .parents = {c1},
                         .writes = {{"src/cfg.c", lines({"a = 1;", "x = 2;", "b = 1;", "c = 1;", "y = 2;"})}}});
    int main = b.commit({.message = "main tweak", .time = kFixtureEpoch + 2 * kDay, .author = kAlice, .parents = {c1},
                         .writes = {{"src/cfg.c", lines({"a = 1;", "x = 3;", "b = 1;", "c = 1;", "y = 1;"})}}});
    int merge = b.commit({.message = "merge side", .time = kFixtureEpoch + 3 * kDay, .author = kAlice,
                          .parents = {main, side},
                          .writes = {{"src/cfg.c", lines({"a = 1;", "x = 23;", "b = 1;", "c = 1;", "y = 2;"})}}});
    s.fix = b.commit({.message = "fix config values", .time = kFixtureEpoch + 4 * kDay, .author = kBob,
                      .parents = {merge},
                      .writes = {{"src/cfg.c", lines({"a = 1;", "x = 0;", "b = 1;", "c = 1;", "y = 0;"})}}});
    s.inducing = {main, side};
    return s;
}

RepoBuilder small_history() {
    RepoBuilder b;
    const std::vector<Author> authors = {kAlice, kBob, {"Carol", "carol@example.com"}};
    std::int64_t t = kFixtureEpoch;
    int prev = 0;
    auto next = [&](std::string message, int author, std::map<std::string, std::string> writes,
                    std::vector<std::string> removes = {}) {
        t += kDay / 3;
        CommitSpec spec{.message = std::move(message), .time = t, .author = authors[author], .writes = std::move(writes),
                        .removes = std::move(removes)};
        if (prev) spec.parents = {prev};
        prev = b.commit(std::move(spec));
        return prev;
    };
    next("create parser", 0, {{"src/parse.c", lines(numbered("parse ", 1, 12))}});
    next("create lexer", 1, {{"src/lex.c", lines(numbered("lex ", 1, 8))}});
    next("add network client", 2, {{"net/client.py", lines(numbered("client ", 1, 20))}});
    next("speed up parser", 0,
         {{"src/parse.c", lines(numbered("parse ", 1, 5) + std::vector<std::string>{"parse fast"} +
                                numbered("parse ", 7, 12))}});
    next("fix lexer bug", 1, {{"src/lex.c", lines(numbered("lex ", 1, 3) + std::vector<std::string>{"lex fixed"} +
                                                  numbered("lex ", 5, 8))}});
    next("add retries", 2, {{"net/client.py", lines(numbered("client ", 1, 20) + numbered("retry ", 1, 6))}});
    next("ui shell", 0, {{"ui/shell.js", lines(numbered("shell ", 1, 10))}, {"docs/ui.md", lines({"ui"})}});
    next("fix parser regression", 2,
         {{"src/parse.c", lines(numbered("parse ", 1, 5) + std::vector<std::string>{"parse careful"} +
                                numbered("parse ", 7, 12))}});
    next("split helpers", 1, {{"src/helpers.h", lines(numbered("helper ", 1, 4))},
                              {"src/parse.c", lines(numbered("parse ", 1, 5) +
                                                    std::vector<std::string>{"parse careful", "#include helpers"} +
                                                    numbered("parse ", 7, 12))}});
    next("theme support", 0, {{"ui/theme.js", lines(numbered("theme ", 1, 7))}});
    next("drop lexer", 2, {{"src/tokens.c", lines(numbered("token ", 1, 5))}}, {"src/lex.c"});
    next("client timeout", 1, {{"net/client.py", lines(numbered("client ", 1, 19) + numbered("retry ", 1, 6) +
                                                       std::vector<std::string>{"timeout"})}});
    return b;
}

}  // namespace jitdp::testing
