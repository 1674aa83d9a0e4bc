#include "jitdp/git.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdlib>

#include "jitdp/error.hpp"
#include "jitdp/process.hpp"

namespace jitdp::git {

namespace {

constexpr std::string_view kLogFormat =
    "--format=%x01%x01jitdp-commit%x01%H%x00%P%x00%an%x00%ae%x00%at%x00%B%x00";

bool starts_with(std::string_view s, std::string_view prefix) {
    return s.substr(0, prefix.size()) == prefix;
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        lines.push_back(text.substr(pos, end - pos));
        pos = end + 1;
    }
    return lines;
}

int parse_int(std::string_view s) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw CorruptHistory("unparseable number '" + std::string(s) + "'");
    return value;
}

// "-a,b" or "+c" into (start, count)
std::pair<int, int> parse_range(std::string_view token) {
    token.remove_prefix(1);
    auto comma = token.find(',');
    if (comma == std::string_view::npos) return {parse_int(token), 1};
    return {parse_int(token.substr(0, comma)), parse_int(token.substr(comma + 1))};
}

Hunk parse_hunk_header(std::string_view line) {
    // @@ -a,b +c,d @@ section
    auto rest = line.substr(3);
    auto space = rest.find(' ');
    auto old_tok = rest.substr(0, space);
    rest = rest.substr(space + 1);
    auto new_tok = rest.substr(0, rest.find(' '));
    Hunk h;
    std::tie(h.old_start, h.old_count) = parse_range(old_tok);
    std::tie(h.new_start, h.new_count) = parse_range(new_tok);
    return h;
}

// Path from a "--- a/x" / "+++ b/x" line; nullopt for /dev/null.
std::optional<std::string> marker_path(std::string_view rest) {
    if (!rest.empty() && rest.back() == '\t') rest.remove_suffix(1);
    if (rest == "/dev/null") return std::nullopt;
    std::string path = unquote_path(rest);
    if (path.size() >= 2 && (starts_with(path, "a/") || starts_with(path, "b/"))) path.erase(0, 2);
    return path;
}

// Best-effort paths from "diff --git a/x b/y"; refined by later header lines.
std::pair<std::string, std::string> header_paths(std::string_view rest) {
    if (!rest.empty() && rest.front() == '"') {
        std::size_t i = 1;
        while (i < rest.size() && !(rest[i] == '"' && rest[i - 1] != '\\')) ++i;
        auto first = unquote_path(rest.substr(0, i + 1));
        auto second = unquote_path(rest.substr(std::min(rest.size(), i + 2)));
        return {first.substr(2), second.size() >= 2 ? second.substr(2) : second};
    }
    if (rest.size() >= 5 && (rest.size() - 5) % 2 == 0) {
        std::size_t len = (rest.size() - 5) / 2;
        auto a = rest.substr(2, len);
        if (rest.substr(len + 2, 3) == " b/" && rest.substr(len + 5) == a) return {std::string(a), std::string(a)};
    }
    auto sep = rest.find(" b/");
    if (sep == std::string_view::npos) return {std::string(rest), std::string(rest)};
    return {std::string(rest.substr(2, sep - 2)), std::string(rest.substr(sep + 3))};
}

}  // namespace

std::string_view to_string(ChangeKind kind) {
    switch (kind) {
        case ChangeKind::add: return "add";
        case ChangeKind::modify: return "modify";
        case ChangeKind::remove: return "delete";
        case ChangeKind::rename: return "rename";
    }
    return "modify";
}

ChangeKind change_kind_from_string(std::string_view text) {
    if (text == "add") return ChangeKind::add;
    if (text == "modify") return ChangeKind::modify;
    if (text == "delete") return ChangeKind::remove;
    if (text == "rename") return ChangeKind::rename;
    throw CorruptHistory("unknown change_kind '" + std::string(text) + "'");
}

int FilePatch::lines_added() const {
    int n = 0;
    for (const auto& h : hunks) n += static_cast<int>(h.added.size());
    return n;
}

int FilePatch::lines_deleted() const {
    int n = 0;
    for (const auto& h : hunks) n += static_cast<int>(h.removed.size());
    return n;
}

std::vector<int> FilePatch::deleted_line_numbers() const {
    std::vector<int> lines;
    for (const auto& h : hunks)
        for (int i = 0; i < static_cast<int>(h.removed.size()); ++i) lines.push_back(h.old_start + i);
    std::sort(lines.begin(), lines.end());
    lines.erase(std::unique(lines.begin(), lines.end()), lines.end());
    return lines;
}

std::string unquote_path(std::string_view text) {
    if (text.size() < 2 || text.front() != '"' || text.back() != '"') return std::string(text);
    text = text.substr(1, text.size() - 2);
    std::string out;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c != '\\' || i + 1 == text.size()) {
            out.push_back(c);
            continue;
        }
        char e = text[++i];
        switch (e) {
            case 'n': out.push_back('\n'); break;
            case 't': out.push_back('\t'); break;
            case 'a': out.push_back('\a'); break;
            case 'b': out.push_back('\b'); break;
            case 'f': out.push_back('\f'); break;
            case 'r': out.push_back('\r'); break;
            case 'v': out.push_back('\v'); break;
            default:
                if (e >= '0' && e <= '7' && i + 2 < text.size()) {
                    int v = (e - '0') * 64 + (text[i + 1] - '0') * 8 + (text[i + 2] - '0');
                    out.push_back(static_cast<char>(v));
                    i += 2;
                } else {
                    out.push_back(e);
                }
        }
    }
    return out;
}

std::vector<FilePatch> parse_patch(std::string_view text) {
    std::vector<FilePatch> patches;
    FilePatch* cur = nullptr;
    Hunk* hunk = nullptr;
    int old_left = 0, new_left = 0;

    for (auto line : split_lines(text)) {
        if (hunk && (old_left > 0 || new_left > 0)) {
            if (!line.empty() && line[0] == '-' && old_left > 0) {
                hunk->removed.emplace_back(line.substr(1));
                --old_left;
                continue;
            }
            if (!line.empty() && line[0] == '+' && new_left > 0) {
                hunk->added.emplace_back(line.substr(1));
                --new_left;
                continue;
            }
            if (!line.empty() && line[0] == '\\') continue;
            throw CorruptHistory("truncated hunk in patch near '" + std::string(line) + "'");
        }
        if (!line.empty() && line[0] == '\\') continue;

        if (starts_with(line, "diff --git ")) {
            auto [a, b] = header_paths(line.substr(11));
            patches.emplace_back();
            cur = &patches.back();
            hunk = nullptr;
            cur->old_path = a;
            cur->new_path = b;
            continue;
        }
        if (!cur) continue;
        if (starts_with(line, "new file mode")) {
            cur->kind = ChangeKind::add;
            cur->old_path.reset();
        } else if (starts_with(line, "deleted file mode")) {
            cur->kind = ChangeKind::remove;
            cur->new_path.reset();
        } else if (starts_with(line, "old mode") || starts_with(line, "new mode")) {
            cur->mode_changed = true;
        } else if (starts_with(line, "rename from ")) {
            cur->kind = ChangeKind::rename;
            cur->old_path = unquote_path(line.substr(12));
        } else if (starts_with(line, "rename to ")) {
            cur->kind = ChangeKind::rename;
            cur->new_path = unquote_path(line.substr(10));
        } else if (starts_with(line, "--- ")) {
            if (auto p = marker_path(line.substr(4))) cur->old_path = *p;
        } else if (starts_with(line, "+++ ")) {
            if (auto p = marker_path(line.substr(4))) cur->new_path = *p;
        } else if (starts_with(line, "Binary files ")) {
            cur->binary = true;
        } else if (starts_with(line, "@@ ")) {
            cur->hunks.push_back(parse_hunk_header(line));
            hunk = &cur->hunks.back();
            old_left = hunk->old_count;
            new_left = hunk->new_count;
        }
    }
    if (hunk && (old_left > 0 || new_left > 0)) throw CorruptHistory("patch ends inside a hunk");
    return patches;
}

std::vector<LogEntry> parse_log(std::string_view text) {
    std::vector<LogEntry> entries;
    std::size_t pos = text.find(kLogMarker);
    while (pos != std::string_view::npos) {
        std::size_t start = pos + kLogMarker.size();
        std::size_t next = text.find(kLogMarker, start);
        auto chunk = text.substr(start, next == std::string_view::npos ? std::string_view::npos : next - start);

        std::array<std::string_view, 6> fields;
        std::size_t cursor = 0;
        for (auto& field : fields) {
            std::size_t nul = chunk.find('\0', cursor);
            if (nul == std::string_view::npos) throw CorruptHistory("truncated log record");
            field = chunk.substr(cursor, nul - cursor);
            cursor = nul + 1;
        }
        LogEntry e;
        e.hash = fields[0];
        for (std::size_t p = 0; p < fields[1].size();) {
            auto sp = fields[1].find(' ', p);
            if (sp == std::string_view::npos) sp = fields[1].size();
            if (sp > p) e.parents.emplace_back(fields[1].substr(p, sp - p));
            p = sp + 1;
        }
        e.author_name = fields[2];
        e.author_email = fields[3];
        {
            auto t = fields[4];
            std::int64_t value = 0;
            auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
            if (ec != std::errc{}) throw CorruptHistory("bad author time for " + e.hash);
            e.author_time = value;
        }
        std::string msg(fields[5]);
        while (!msg.empty() && (msg.back() == '\n' || msg.back() == '\r')) msg.pop_back();
        e.message = std::move(msg);
        try {
            e.patches = parse_patch(chunk.substr(cursor));
        } catch (const CorruptHistory& ex) {
            throw CorruptHistory(e.hash + ": " + ex.what());
        }
        entries.push_back(std::move(e));
        pos = next;
    }
    return entries;
}

std::vector<BlameLine> parse_blame(std::string_view text) {
    std::vector<BlameLine> out;
    BlameLine cur;
    bool in_group = false;
    for (auto line : split_lines(text)) {
        if (!in_group) {
            if (line.empty()) continue;
            // <hash> <orig> <final> [<count>]
            auto s1 = line.find(' ');
            auto s2 = line.find(' ', s1 + 1);
            if (s1 == std::string_view::npos || s2 == std::string_view::npos)
                throw BlameFailure("malformed blame header '" + std::string(line) + "'");
            auto s3 = line.find(' ', s2 + 1);
            cur = {};
            cur.commit = line.substr(0, s1);
            cur.orig_line = parse_int(line.substr(s1 + 1, s2 - s1 - 1));
            cur.final_line = parse_int(line.substr(s2 + 1, s3 == std::string_view::npos ? std::string_view::npos : s3 - s2 - 1));
            in_group = true;
        } else if (!line.empty() && line[0] == '\t') {
            cur.content = line.substr(1);
            out.push_back(std::move(cur));
            in_group = false;
        } else if (starts_with(line, "filename ")) {
            cur.orig_path = unquote_path(line.substr(9));
        }
    }
    return out;
}

int count_lines(std::string_view blob) {
    int n = static_cast<int>(std::count(blob.begin(), blob.end(), '\n'));
    if (!blob.empty() && blob.back() != '\n') ++n;
    return n;
}

Repository Repository::open(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_directory(path, ec)) throw RepoNotFound("not a directory: " + path.string());
    auto res = run_process({"git", "rev-parse", "--git-dir"}, {}, path);
    if (res.exit_code != 0) throw RepoNotFound("not a git repository: " + path.string());
    return Repository(std::filesystem::absolute(path));
}

std::string Repository::run(const std::vector<std::string>& args, const std::string& input) const {
    std::vector<std::string> argv{"git",
                                  "-c", "core.quotePath=true",
                                  "-c", "color.ui=false",
                                  "-c", "diff.noprefix=false",
                                  "-c", "diff.mnemonicPrefix=false",
                                  "-c", "log.showSignature=false"};
    argv.insert(argv.end(), args.begin(), args.end());
    auto res = run_process(argv, input, path_);
    if (res.exit_code != 0) {
        std::string cmd;
        for (const auto& a : args) cmd += " " + a;
        throw GitCommandFailed("git" + cmd + " exited " + std::to_string(res.exit_code) + ": " + res.err);
    }
    return std::move(res.out);
}

bool Repository::has_head() const {
    auto res = run_process({"git", "rev-parse", "--verify", "-q", "HEAD^{commit}"}, {}, path_);
    return res.exit_code == 0;
}

std::vector<LogEntry> Repository::log(int rename_threshold) const {
    std::string out;
    try {
        out = run({"log", "--topo-order", "--reverse", "-p", "-U0", "--no-ext-diff", "--no-textconv",
                   "-M" + std::to_string(rename_threshold) + "%", std::string(kLogFormat), "HEAD", "--"});
    } catch (const GitCommandFailed& e) {
        throw CorruptHistory(e.what());
    }
    return parse_log(out);
}

std::vector<std::optional<int>> Repository::line_counts(const std::vector<std::string>& specs) const {
    std::vector<std::optional<int>> counts;
    counts.reserve(specs.size());
    constexpr std::size_t kChunk = 2000;
    for (std::size_t base = 0; base < specs.size(); base += kChunk) {
        std::size_t end = std::min(specs.size(), base + kChunk);
        std::string input;
        for (std::size_t i = base; i < end; ++i) input += specs[i] + "\n";
        std::string out = run({"cat-file", "--batch"}, input);
        std::string_view view(out);
        std::size_t pos = 0;
        for (std::size_t i = base; i < end; ++i) {
            std::size_t nl = view.find('\n', pos);
            if (nl == std::string_view::npos) throw CorruptHistory("truncated cat-file output at " + specs[i]);
            auto header = view.substr(pos, nl - pos);
            pos = nl + 1;
            if (header.ends_with(" missing") || header.ends_with(" ambiguous")) {
                counts.push_back(std::nullopt);
                continue;
            }
            auto last_space = header.rfind(' ');
            std::size_t size = 0;
            auto sz = header.substr(last_space + 1);
            std::from_chars(sz.data(), sz.data() + sz.size(), size);
            if (pos + size > view.size()) throw CorruptHistory("unreadable object " + specs[i]);
            counts.push_back(count_lines(view.substr(pos, size)));
            pos += size + 1;
        }
    }
    return counts;
}

std::vector<BlameLine> Repository::blame(const std::string& rev, const std::string& path,
                                         const std::vector<int>& lines) const {
    std::vector<int> sorted(lines);
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<std::string> args{"blame", "--line-porcelain"};
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j + 1 < sorted.size() && sorted[j + 1] == sorted[j] + 1) ++j;
        args.push_back("-L");
        args.push_back(std::to_string(sorted[i]) + "," + std::to_string(sorted[j]));
        i = j + 1;
    }
    args.push_back(rev);
    args.push_back("--");
    args.push_back(path);
    try {
        return parse_blame(run(args));
    } catch (const GitCommandFailed& e) {
        throw BlameFailure(e.what());
    }
}

std::vector<FilePatch> Repository::first_parent_diff(const std::string& commit, int rename_threshold) const {
    auto info = commit_info(commit);
    std::vector<std::string> args{"diff-tree", "-r", "-p", "-U0", "--no-ext-diff", "--no-textconv",
                                  "--no-commit-id", "-M" + std::to_string(rename_threshold) + "%"};
    if (info.parents.empty()) {
        args.push_back("--root");
    } else {
        args.push_back(info.parents.front());
    }
    args.push_back(commit);
    return parse_patch(run(args));
}

CommitInfo Repository::commit_info(const std::string& commit) const {
    {
        std::lock_guard lock(cache_->mutex);
        if (auto it = cache_->info.find(commit); it != cache_->info.end()) return it->second;
    }
    std::string out;
    try {
        out = run({"show", "-s", "--format=%P%x00%at", commit, "--"});
    } catch (const GitCommandFailed& e) {
        throw CorruptHistory(e.what());
    }
    CommitInfo info;
    auto nul = out.find('\0');
    std::string_view parents(out.data(), nul);
    for (std::size_t p = 0; p < parents.size();) {
        auto sp = parents.find(' ', p);
        if (sp == std::string_view::npos) sp = parents.size();
        if (sp > p) info.parents.emplace_back(parents.substr(p, sp - p));
        p = sp + 1;
    }
    info.author_time = std::strtoll(out.c_str() + nul + 1, nullptr, 10);
    std::lock_guard lock(cache_->mutex);
    cache_->info.emplace(commit, info);
    return info;
}

}  // namespace jitdp::git
