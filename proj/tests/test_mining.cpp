#include <doctest.h>

#include <algorithm>
#include <random>

#include "fixtures.hpp"
#include "jitdp/error.hpp"
#include "jitdp/mining.hpp"
#include "repo_builder.hpp"

using namespace jitdp;
using namespace jitdp::testing;

namespace {

std::map<std::string, ChangeMetrics> metrics_by_hash(const std::vector<CommitRecord>& commits) {
    std::map<std::string, ChangeMetrics> out;
    for (auto& [h, m] : compute_all_metrics(commits)) out[h] = m;
    return out;
}

}  // namespace

TEST_CASE("subsystem and directory of a path") {
    CHECK(subsystem_of("core/util/c.c") == "core");
    CHECK(subsystem_of("main.c") == "/");
    CHECK(directory_of("core/util/c.c") == "core/util");
    CHECK(directory_of("main.c") == "/");
}

TEST_CASE("default source filter") {
    auto f = SourceFilter::defaults();
    CHECK(f.accepts("src/a.cpp"));
    CHECK(f.accepts("main.py"));
    CHECK_FALSE(f.accepts("README.md"));
    CHECK_FALSE(f.accepts("docs/gen.py"));
    CHECK_FALSE(f.accepts("lib/test/check.c"));
    CHECK_FALSE(f.accepts("third_party/zlib/inflate.c"));
    CHECK(f.accepts("tests/check.c"));  // only the exact directory name is excluded
}

TEST_CASE("fix detection by keyword and issue reference") {
    FixMatcher m;
    CHECK(m("Fix crash on empty input"));
    CHECK(m("resolves #123"));
    CHECK(m("BUG: off by one"));
    CHECK_FALSE(m("prefix handling"));
    CHECK_FALSE(m("add debugging output"));
    CHECK_FALSE(m("improve #docs"));
    FixMatcher custom({"repair"});
    CHECK(custom("repair the thing"));
    CHECK_FALSE(custom("fix the thing"));
}

TEST_CASE("churn entropy") {
    CHECK(churn_entropy({5, 5}) == 1.0);
    CHECK(churn_entropy({7}) == 0.0);
    CHECK(churn_entropy({}) == 0.0);
    CHECK(churn_entropy({0, 0}) == 0.0);
    CHECK(churn_entropy({3, 0}) == 0.0);
    CHECK(churn_entropy({1, 1, 1, 1}) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("churn entropy is bounded and permutation invariant") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<int> churn(1 + rng() % 12);
        for (auto& c : churn) c = static_cast<int>(rng() % 50);
        double h = churn_entropy(churn);
        CHECK(h >= 0.0);
        CHECK(h <= 1.0);
        std::shuffle(churn.begin(), churn.end(), rng);
        CHECK(churn_entropy(churn) == h);
    }
}

TEST_CASE("mining an empty repository yields nothing") {
    TempDir dir;
    git_in(dir.path(), {"init", "-q"});
    CHECK(mine_history(dir.path()).empty());
}

TEST_CASE("mining a missing repository fails") {
    TempDir dir;
    CHECK_THROWS_AS(mine_history(dir.path() / "nope"), RepoNotFound);
}

TEST_CASE("three linear commits are mined oldest first") {
    TempDir dir;
    RepoBuilder b;
    int c1 = b.commit({.message = "one", .time = 100, .writes = {{"a.c", lines({"x"})}}});
    int c2 = b.commit({.message = "two", .time = 200, .parents = {c1}, .writes = {{"a.c", lines({"x", "y"})}}});
    int c3 = b.commit({.message = "three", .time = 300, .parents = {c2}, .writes = {{"a.c", lines({"y"})}}});
    b.build(dir.path());
    auto commits = mine_history(dir.path());
    REQUIRE(commits.size() == 3);
    CHECK(commits[0].hash == b.hash(c1));
    CHECK(commits[0].parent_hashes.empty());
    CHECK(commits[1].parent_hashes == std::vector<std::string>{b.hash(c1)});
    CHECK(commits[2].hash == b.hash(c3));
    CHECK(commits[2].message == "three");
    CHECK(commits[2].author_id == "alice <alice@example.com>");
    REQUIRE(commits[2].files.size() == 1);
    const auto& f = commits[2].files[0];
    CHECK(f.change_kind == ChangeKind::modify);
    CHECK(f.lines_added == 0);
    CHECK(f.lines_deleted == 1);
    CHECK(f.lines_before == 2);
    CHECK(f.deleted_line_numbers == std::vector<int>{1});
}

TEST_CASE("parents precede children despite clock skew") {
    TempDir dir;
    RepoBuilder b;
    int c1 = b.commit({.message = "one", .time = 500, .writes = {{"a.c", lines({"x"})}}});
    int c2 = b.commit({.message = "two", .time = 100, .parents = {c1}, .writes = {{"b.c", lines({"y"})}}});
    b.build(dir.path());
    auto commits = mine_history(dir.path());
    REQUIRE(commits.size() == 2);
    CHECK(commits[0].hash == b.hash(c1));
    CHECK(commits[1].hash == b.hash(c2));
}

TEST_CASE("merge commits are recorded without files and skipped by metrics") {
    auto s = merge_scenario();
    TempDir dir;
    s.builder.build(dir.path());
    auto commits = mine_history(dir.path());
    REQUIRE(commits.size() == 5);
    auto merge = std::find_if(commits.begin(), commits.end(), [](auto& c) { return c.is_merge(); });
    REQUIRE(merge != commits.end());
    CHECK(merge->files.empty());
    CHECK(merge->parent_hashes.size() == 2);
    auto metrics = metrics_by_hash(commits);
    CHECK(metrics.size() == 4);
    CHECK(metrics.count(merge->hash) == 0);
}

TEST_CASE("change metrics match the hand-derived table") {
    TempDir dir;
    auto b = metrics_fixture();
    b.build(dir.path());
    auto commits = mine_history(dir.path());
    REQUIRE(commits.size() == 6);
    CHECK(commits[3].files.empty());  // docs and test files only

    auto renamed = commits[2].files;
    auto rename = std::find_if(renamed.begin(), renamed.end(), [](auto& f) { return f.change_kind == ChangeKind::rename; });
    REQUIRE(rename != renamed.end());
    CHECK(*rename->old_path == "net/b.c");
    CHECK(*rename->new_path == "core/b2.c");

    auto actual = metrics_by_hash(commits);
    auto expected = metrics_fixture_expected();
    CHECK(actual.size() == expected.size());
    for (const auto& [mark, want] : expected) {
        CAPTURE(mark);
        const auto& got = actual.at(b.hash(mark));
        CHECK(got.ns == want.ns);
        CHECK(got.nd == want.nd);
        CHECK(got.nf == want.nf);
        CHECK(std::abs(got.entropy - want.entropy) <= 1e-12);
        CHECK(got.la == want.la);
        CHECK(got.ld == want.ld);
        CHECK(got.lt == want.lt);
        CHECK(got.fix == want.fix);
        CHECK(got.ndev == want.ndev);
        CHECK(got.age == want.age);
        CHECK(got.nuc == want.nuc);
        CHECK(got.exp == want.exp);
        CHECK(std::abs(got.rexp - want.rexp) <= 1e-12);
        CHECK(got.sexp == want.sexp);
    }
}

TEST_CASE("metrics only depend on the past") {
    TempDir dir;
    auto b = metrics_fixture();
    b.build(dir.path());
    auto commits = mine_history(dir.path());
    auto full = metrics_by_hash(commits);
    for (std::size_t cut = 1; cut <= commits.size(); ++cut) {
        std::vector<CommitRecord> prefix(commits.begin(), commits.begin() + static_cast<long>(cut));
        for (const auto& [h, m] : metrics_by_hash(prefix)) CHECK(full.at(h) == m);
    }
}

TEST_CASE("mining is deterministic and round-trips through JSON") {
    TempDir dir;
    auto b = metrics_fixture();
    b.build(dir.path());
    auto first = mine_history(dir.path());
    auto second = mine_history(dir.path());
    REQUIRE(first.size() == second.size());
    for (std::size_t i = 0; i < first.size(); ++i) {
        nlohmann::ordered_json a = first[i], c = second[i];
        CHECK(a.dump() == c.dump());
        auto back = nlohmann::json::parse(a.dump()).get<CommitRecord>();
        nlohmann::ordered_json again = back;
        CHECK(again.dump() == a.dump());
    }
    nlohmann::ordered_json m = compute_all_metrics(first).front().second;
    CHECK(nlohmann::json::parse(m.dump()).get<ChangeMetrics>() == compute_all_metrics(first).front().second);
}

TEST_CASE("metrics need the parent in the history index") {
    CommitRecord c;
    c.hash = "c";
    c.parent_hashes = {"p"};
    c.files.push_back({.new_path = "a.c", .change_kind = ChangeKind::add, .lines_added = 1});
    HistoryIndex index;
    CHECK_THROWS_AS(compute_metrics(c, index), MissingHistory);
    CommitRecord p;
    p.hash = "p";
    index.add(p);
    CHECK(compute_metrics(c, index).la == 1);
}
