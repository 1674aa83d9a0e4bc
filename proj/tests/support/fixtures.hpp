#pragma once

#include <cstdint>
#include <set>
#include <string>

#include <utility>
#include <vector>

#include "jitdp/mining.hpp"
#include "repo_builder.hpp"

namespace jitdp::testing {

inline constexpr std::int64_t kFixtureEpoch = 1'700'000'000;
inline constexpr std::int64_t kDay = 86'400;

inline const Author kAlice{"Alice", "alice@example.com"};
inline const Author kBob{"Bob", "Bob@Example.com"};

/// Six commits exercising every change metric: adds, a rename with edits,
/// a docs/test-only commit, a delete, an issue-reference fix and a root file.
RepoBuilder metrics_fixture();

/// Hand-derived metrics of metrics_fixture(), keyed by mark. The docs/test
/// commit (mark 4) has no source files and is absent.
std::vector<std::pair<int, ChangeMetrics>> metrics_fixture_expected();

/// A repository with one fix commit and the commits SZZ must trace it to.
struct SzzScenario {
    std::string name;
    RepoBuilder builder;
    int fix = 0;
    std::set<int> inducing;
};

/// Blame on a linear history.
SzzScenario linear_scenario();
/// The blamed lines cross a whole-file rename.
SzzScenario rename_scenario();
/// A reindent sits between the defect and the fix.
SzzScenario whitespace_scenario();
/// A conflict resolution in a merge rewrote the line last.
SzzScenario merge_scenario();

/// Twelve commits, two of them fixes, with enough variety for a full run.
RepoBuilder small_history();

}  // namespace jitdp::testing
