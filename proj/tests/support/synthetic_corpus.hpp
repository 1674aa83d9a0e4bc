#pragma once

#include <cstdint>
#include <set>
#include <string>

#include "repo_builder.hpp"

namespace jitdp::testing {

struct CorpusOptions {
    int commits = 600;
    std::uint64_t seed = 1;
    std::string keyword = "hotpath";
};

/// A generated history where a feature commit is defect-inducing exactly when
/// its message carries the keyword and it adds a large file (40-60 lines).
/// Every such commit is later repaired by a "fix" commit touching one of its
/// lines; the other feature commits (keyword with a small file, or a large
/// file without the keyword) are never repaired.
struct Corpus {
    RepoBuilder builder;
    std::set<int> inducing_marks;
    std::set<int> fix_marks;
};

Corpus make_corpus(const CorpusOptions& options = {});

}  // namespace jitdp::testing
