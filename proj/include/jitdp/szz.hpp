#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jitdp/git.hpp"
#include "jitdp/mining.hpp"

namespace jitdp {

struct SzzConfig {
    /// Similarity percentage for rename detection in diffs used while
    /// stepping past meta-changes. Blame's own whole-file rename following
    /// uses git's default.
    int rename_threshold = 50;
    /// Upper bound on consecutive meta-changes skipped for a single line.
    int max_meta_steps = 32;
};

/// The commits a fix's deleted lines trace back to.
struct FixLink {
    std::string fix_hash;
    std::set<std::string> inducing_hashes;
    int traced_lines = 0;
    std::vector<std::string> warnings;
};

struct LabelSet {
    std::map<std::string, int> labels;
    std::map<std::string, std::vector<std::string>> provenance;
};

/// True when the two lines are identical after collapsing every whitespace
/// run to one space and trimming both ends.
bool whitespace_equivalent(const std::string& a, const std::string& b);

/// Traces the pre-image lines deleted by `fix` back to the commits that last
/// changed them, stepping past merges and whitespace-only rewrites.
/// Files whose pre-image cannot be blamed are skipped with a warning.
FixLink trace_fix(const CommitRecord& fix, const git::Repository& repo, const SzzConfig& config = {});

/// trace_fix over every non-merge commit the matcher flags as a fix, in
/// mining order. Up to `jobs` fixes are traced concurrently.
std::vector<FixLink> trace_fixes(const std::vector<CommitRecord>& commits, const git::Repository& repo,
                                 const SzzConfig& config, const FixMatcher& matcher, int jobs = 1);

/// Throws UnknownHash when a link mentions a commit outside `commits`.
LabelSet label_dataset(const std::vector<CommitRecord>& commits, const std::vector<FixLink>& links);

/// One JSON object per mined commit, in mining order.
std::vector<nlohmann::ordered_json> labels_to_json(const std::vector<CommitRecord>& commits, const LabelSet& labels);
LabelSet labels_from_json(const std::vector<nlohmann::json>& rows);

}  // namespace jitdp
