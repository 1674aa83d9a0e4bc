#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace jitdp::git {

enum class ChangeKind { add, modify, remove, rename };

std::string_view to_string(ChangeKind kind);
ChangeKind change_kind_from_string(std::string_view text);

/// One `@@ -a,b +c,d @@` hunk of a zero-context unified diff.
struct Hunk {
    int old_start = 0;
    int old_count = 0;
    int new_start = 0;
    int new_count = 0;
    std::vector<std::string> removed;
    std::vector<std::string> added;
};

/// Diff of one file between a commit and its first parent.
struct FilePatch {
    std::optional<std::string> old_path;
    std::optional<std::string> new_path;
    ChangeKind kind = ChangeKind::modify;
    bool binary = false;
    bool mode_changed = false;
    std::vector<Hunk> hunks;

    int lines_added() const;
    int lines_deleted() const;
    /// 1-based pre-image line numbers removed by this patch, ascending.
    std::vector<int> deleted_line_numbers() const;
};

/// Parses the patch portion of `git diff -U0` / `git log -p -U0` output.
std::vector<FilePatch> parse_patch(std::string_view text);

struct LogEntry {
    std::string hash;
    std::vector<std::string> parents;
    std::string author_name;
    std::string author_email;
    std::int64_t author_time = 0;
    std::string message;
    std::vector<FilePatch> patches;
};

/// Record separator emitted ahead of every commit by `Repository::log`.
inline constexpr std::string_view kLogMarker = "\x01\x01jitdp-commit\x01";

/// Parses the output of `git log` run with the format used by `Repository::log`.
std::vector<LogEntry> parse_log(std::string_view text);

struct BlameLine {
    std::string commit;
    int orig_line = 0;
    int final_line = 0;
    std::string orig_path;
    std::string content;
};

/// Parses `git blame --line-porcelain` output.
std::vector<BlameLine> parse_blame(std::string_view text);

/// Undoes git's C-style quoting of a path ("a\tb" with surrounding quotes).
std::string unquote_path(std::string_view text);

struct CommitInfo {
    std::vector<std::string> parents;
    std::int64_t author_time = 0;
};

/// Read-only handle on a local repository, driven through git plumbing.
/// Methods are safe to call from multiple threads.
class Repository {
public:
    /// Throws RepoNotFound when `path` is not inside a git work tree or bare repo.
    static Repository open(const std::filesystem::path& path);

    const std::filesystem::path& path() const noexcept { return path_; }

    /// False for a freshly initialised repository with no commits.
    bool has_head() const;

    /// Full history reachable from HEAD in topological order, oldest first,
    /// each non-merge commit with its zero-context diff against its parent.
    std::vector<LogEntry> log(int rename_threshold) const;

    /// Line counts of `rev:path` blobs; missing objects map to nullopt.
    std::vector<std::optional<int>> line_counts(const std::vector<std::string>& specs) const;

    /// Blames the given 1-based lines of `path` as of `rev`, following renames.
    std::vector<BlameLine> blame(const std::string& rev, const std::string& path,
                                 const std::vector<int>& lines) const;

    /// Zero-context diff of `commit` against its first parent.
    std::vector<FilePatch> first_parent_diff(const std::string& commit, int rename_threshold) const;

    CommitInfo commit_info(const std::string& commit) const;

    /// Runs `git <args>` in the repository; throws GitCommandFailed on nonzero exit.
    std::string run(const std::vector<std::string>& args, const std::string& input = {}) const;

private:
    explicit Repository(std::filesystem::path path) : path_(std::move(path)) {}

    std::filesystem::path path_;
    struct Cache {
        std::mutex mutex;
        std::map<std::string, CommitInfo> info;
    };
    std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

/// Number of lines in a blob as git's diff machinery counts them.
int count_lines(std::string_view blob);

}  // namespace jitdp::git
