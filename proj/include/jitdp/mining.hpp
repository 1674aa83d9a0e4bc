#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "jitdp/git.hpp"

namespace jitdp {

using git::ChangeKind;

struct FileChange {
    std::optional<std::string> old_path;  // absent for adds
    std::optional<std::string> new_path;  // absent for deletes
    ChangeKind change_kind = ChangeKind::modify;
    int lines_added = 0;
    int lines_deleted = 0;
    int lines_before = 0;
    std::vector<int> deleted_line_numbers;

    /// Path the file lives at after the change (pre-image path for deletes).
    const std::string& path() const { return new_path ? *new_path : *old_path; }
};

struct CommitRecord {
    std::string hash;
    std::vector<std::string> parent_hashes;
    std::string author_id;  // lowercased "name <email>"
    std::int64_t author_time = 0;
    std::string message;
    std::vector<FileChange> files;

    bool is_merge() const { return parent_hashes.size() > 1; }
};

/// Which paths count as source files.
struct SourceFilter {
    std::vector<std::string> extensions;
    /// "dir/" patterns; a path is excluded when any of its directory
    /// components equals the pattern's directory name.
    std::vector<std::string> excluded;

    static SourceFilter defaults();
    bool accepts(const std::string& path) const;
};

/// Change-level features of one commit.
struct ChangeMetrics {
    int ns = 0;
    int nd = 0;
    int nf = 0;
    double entropy = 0.0;
    int la = 0;
    int ld = 0;
    int lt = 0;
    bool fix = false;
    int ndev = 0;
    double age = 0.0;
    int nuc = 0;
    int exp = 0;
    double rexp = 0.0;
    int sexp = 0;

    bool operator==(const ChangeMetrics&) const = default;
};

/// Default keyword list for fix detection.
std::vector<std::string> default_fix_keywords();

/// Word-boundary keyword match on the lowercased message, or an issue
/// reference `#<digits>`.
class FixMatcher {
public:
    explicit FixMatcher(const std::vector<std::string>& keywords = default_fix_keywords());
    bool operator()(const std::string& message) const;

private:
    std::regex pattern_;
};

bool is_fix(const CommitRecord& commit, const FixMatcher& matcher = FixMatcher{});

/// Subsystem of a path: its first segment, "/" for files at the root.
std::string subsystem_of(const std::string& path);
/// Containing directory of a path, "/" for files at the root.
std::string directory_of(const std::string& path);

/// Normalised churn entropy over per-file (added + deleted) counts.
double churn_entropy(std::vector<int> churn);

/// Incremental per-file and per-author history of the commits mined so far.
class HistoryIndex {
public:
    /// Folds `commit` into the index; merges and file-less commits are only
    /// remembered as seen.
    void add(const CommitRecord& commit);
    bool contains(const std::string& hash) const { return seen_.count(hash) != 0; }
    std::size_t size() const { return seen_.size(); }

private:
    friend ChangeMetrics compute_metrics(const CommitRecord&, const HistoryIndex&, const FixMatcher&);

    struct FileHistory {
        std::int64_t last_touch = 0;
        std::set<std::string> authors;
        std::set<std::string> commits;
    };
    struct AuthoredCommit {
        std::int64_t time = 0;
        std::vector<std::string> subsystems;
    };

    std::unordered_set<std::string> seen_;
    std::map<std::string, FileHistory> files_;
    std::map<std::string, std::vector<AuthoredCommit>> authors_;
};

inline constexpr double kSecondsPerDay = 86400.0;
inline constexpr double kSecondsPerYear = 31557600.0;

/// Metrics of `commit` against everything already folded into `index`.
/// Throws MissingHistory when a parent of `commit` has not been indexed.
ChangeMetrics compute_metrics(const CommitRecord& commit, const HistoryIndex& index,
                              const FixMatcher& matcher = FixMatcher{});

struct MiningOptions {
    SourceFilter filter = SourceFilter::defaults();
    int rename_threshold = 50;
};

/// Every commit reachable from HEAD, oldest first by author time with ties
/// (and clock skew) resolved so parents always precede children. Merge
/// commits carry no files.
std::vector<CommitRecord> mine_history(const std::filesystem::path& repo_path,
                                       const MiningOptions& options = {});

/// Builds records from already-parsed log entries; `lines_before` is
/// resolved through `repo` for every non-add file.
std::vector<CommitRecord> records_from_log(std::vector<git::LogEntry> entries, const git::Repository& repo,
                                           const MiningOptions& options);

/// Metrics for every non-merge commit with source files, in mining order.
std::vector<std::pair<std::string, ChangeMetrics>> compute_all_metrics(
    const std::vector<CommitRecord>& commits, const FixMatcher& matcher = FixMatcher{});

void to_json(nlohmann::ordered_json& j, const FileChange& f);
void from_json(const nlohmann::json& j, FileChange& f);
void to_json(nlohmann::ordered_json& j, const CommitRecord& c);
void from_json(const nlohmann::json& j, CommitRecord& c);
void to_json(nlohmann::ordered_json& j, const ChangeMetrics& m);
void from_json(const nlohmann::json& j, ChangeMetrics& m);

}  // namespace jitdp
