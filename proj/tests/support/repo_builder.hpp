#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace jitdp::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& prefix = "jitdp-test");
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

struct Author {
    std::string name = "Alice";
    std::string email = "alice@example.com";
};

/// One scripted commit. `parents` are marks of earlier commits; the first is
/// the mainline parent. Files not mentioned are inherited from it.
struct CommitSpec {
    std::string message;
    std::int64_t time = 0;
    Author author;
    std::vector<int> parents;
    std::map<std::string, std::string> writes;  // path -> full new content
    std::vector<std::string> removes;
    std::vector<std::pair<std::string, std::string>> renames;  // applied before writes
};

/// Builds a repository with `git fast-import`, so hashes are reproducible.
/// Commits are added in order and referenced by their 1-based mark.
class RepoBuilder {
public:
    int commit(CommitSpec spec);
    /// Writes the history into `dir` (git init + fast-import) with the last
    /// commit added as HEAD of refs/heads/main, and resolves every mark.
    void build(const std::filesystem::path& dir);

    const std::string& hash(int mark) const { return hashes_.at(mark); }
    std::size_t size() const { return specs_.size(); }

    /// The fast-import stream for the commits added so far.
    std::string stream() const;

private:
    std::vector<CommitSpec> specs_;
    std::map<int, std::string> hashes_;
};

/// Lines joined with '\n', each terminated.
std::string lines(const std::vector<std::string>& ls);

/// Runs git in `dir` and returns stdout; fails the process on error.
std::string git_in(const std::filesystem::path& dir, const std::vector<std::string>& args);

}  // namespace jitdp::testing
