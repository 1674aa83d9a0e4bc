#include "jitdp/szz.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <optional>
#include <stdexcept>
#include <mutex>
#include <thread>
#include <unordered_set>

#include "jitdp/error.hpp"

namespace jitdp {

namespace {

std::string collapse_whitespace(const std::string& s) {
    std::string out;
    bool pending_space = false;
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(static_cast<char>(c));
    }
    return out;
}

struct LineRef {
    std::string path;
    int line = 0;
};

// Position a post-image line had in the pre-image. Lines outside every hunk
// shift by the preceding hunks' size delta; a changed line is paired with
// its positional counterpart only inside equal-sized hunks, and only when
// `predicate(old, new)` accepts the pair.
template <typename Pred>
std::optional<LineRef> map_to_parent(const git::FilePatch& patch, int line, Pred predicate) {
    int offset = 0;
    for (const auto& h : patch.hunks) {
        int last = h.new_start + std::max(h.new_count, 1) - 1;
        if (last < line) {
            offset += h.old_count - h.new_count;
            continue;
        }
        if (h.new_count > 0 && line >= h.new_start) {
            int i = line - h.new_start;
            if (h.removed.size() != h.added.size()) return std::nullopt;
            if (!predicate(h.removed[i], h.added[i])) return std::nullopt;
            if (!patch.old_path) return std::nullopt;
            return LineRef{*patch.old_path, h.old_start + i};
        }
        break;
    }
    if (!patch.old_path) return std::nullopt;
    return LineRef{*patch.old_path, line + offset};
}

const git::FilePatch* find_patch(const std::vector<git::FilePatch>& patches, const std::string& path) {
    for (const auto& p : patches)
        if (p.new_path && *p.new_path == path) return &p;
    return nullptr;
}

bool inside_hunk(const git::FilePatch& patch, int line) {
    return std::any_of(patch.hunks.begin(), patch.hunks.end(), [&](const git::Hunk& h) {
        return h.new_count > 0 && line >= h.new_start && line < h.new_start + h.new_count;
    });
}

class Tracer {
public:
    Tracer(const git::Repository& repo, const SzzConfig& config) : repo_(repo), config_(config) {}

    // Follows one blamed line past meta-changes; nullopt when the line has
    // no non-meta origin.
    std::optional<std::string> resolve(git::BlameLine blamed) {
        for (int step = 0; step <= config_.max_meta_steps; ++step) {
            auto info = repo_.commit_info(blamed.commit);
            if (info.parents.empty()) return blamed.commit;

            const auto& patches = diff(blamed.commit);
            const git::FilePatch* patch = find_patch(patches, blamed.orig_path);
            std::optional<LineRef> prior;
            if (info.parents.size() > 1) {
                // merge: the line's origin lies on the first-parent side
                if (!patch) prior = LineRef{blamed.orig_path, blamed.orig_line};
                else prior = map_to_parent(*patch, blamed.orig_line, [](auto&, auto&) { return true; });
                if (!prior) return std::nullopt;
            } else {
                if (!patch || !inside_hunk(*patch, blamed.orig_line)) return blamed.commit;
                prior = map_to_parent(*patch, blamed.orig_line, whitespace_equivalent);
                if (!prior) return blamed.commit;
            }
            auto lines = repo_.blame(info.parents.front(), prior->path, {prior->line});
            if (lines.empty()) return std::nullopt;
            blamed = std::move(lines.front());
        }
        return std::nullopt;
    }

private:
    const std::vector<git::FilePatch>& diff(const std::string& commit) {
        auto it = diffs_.find(commit);
        if (it == diffs_.end())
            it = diffs_.emplace(commit, repo_.first_parent_diff(commit, config_.rename_threshold)).first;
        return it->second;
    }

    const git::Repository& repo_;
    const SzzConfig& config_;
    std::map<std::string, std::vector<git::FilePatch>> diffs_;
};

}  // namespace

bool whitespace_equivalent(const std::string& a, const std::string& b) {
    return collapse_whitespace(a) == collapse_whitespace(b);
}

FixLink trace_fix(const CommitRecord& fix, const git::Repository& repo, const SzzConfig& config) {
    if (fix.is_merge()) throw std::invalid_argument("trace_fix: " + fix.hash + " is a merge commit");
    FixLink link;
    link.fix_hash = fix.hash;
    if (fix.parent_hashes.empty()) return link;

    const std::string& parent = fix.parent_hashes.front();
    Tracer tracer(repo, config);
    for (const auto& f : fix.files) {
        if (!f.old_path || f.deleted_line_numbers.empty()) continue;
        std::vector<git::BlameLine> blamed;
        try {
            blamed = repo.blame(parent, *f.old_path, f.deleted_line_numbers);
        } catch (const BlameFailure& e) {
            link.warnings.push_back(fix.hash + ": cannot blame " + *f.old_path + ": " + e.what());
            continue;
        }
        link.traced_lines += static_cast<int>(blamed.size());
        for (auto& line : blamed) {
            std::optional<std::string> origin;
            try {
                origin = tracer.resolve(std::move(line));
            } catch (const BlameFailure& e) {
                link.warnings.push_back(fix.hash + ": lost line history in " + *f.old_path + ": " + e.what());
                continue;
            }
            if (!origin || *origin == fix.hash) continue;
            if (repo.commit_info(*origin).author_time > fix.author_time) {
                link.warnings.push_back(fix.hash + ": dropped " + *origin + " authored after the fix");
                continue;
            }
            link.inducing_hashes.insert(*origin);
        }
    }
    return link;
}

std::vector<FixLink> trace_fixes(const std::vector<CommitRecord>& commits, const git::Repository& repo,
                                 const SzzConfig& config, const FixMatcher& matcher, int jobs) {
    std::vector<const CommitRecord*> fixes;
    for (const auto& c : commits)
        if (!c.is_merge() && is_fix(c, matcher)) fixes.push_back(&c);

    std::vector<FixLink> links(fixes.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < fixes.size(); i = next++) {
            try {
                links[i] = trace_fix(*fixes[i], repo, config);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::size_t n_threads = std::clamp<std::size_t>(jobs < 1 ? 1 : static_cast<std::size_t>(jobs), 1,
                                                    std::max<std::size_t>(fixes.size(), 1));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    return links;
}

LabelSet label_dataset(const std::vector<CommitRecord>& commits, const std::vector<FixLink>& links) {
    LabelSet out;
    for (const auto& c : commits) out.labels[c.hash] = 0;
    for (const auto& link : links) {
        if (!out.labels.count(link.fix_hash)) throw UnknownHash("fix " + link.fix_hash + " was not mined");
        for (const auto& h : link.inducing_hashes) {
            auto it = out.labels.find(h);
            if (it == out.labels.end()) throw UnknownHash("inducing commit " + h + " was not mined");
            it->second = 1;
            out.provenance[h].push_back(link.fix_hash);
        }
    }
    return out;
}

std::vector<nlohmann::ordered_json> labels_to_json(const std::vector<CommitRecord>& commits, const LabelSet& labels) {
    std::vector<nlohmann::ordered_json> rows;
    rows.reserve(commits.size());
    for (const auto& c : commits) {
        nlohmann::ordered_json row;
        row["hash"] = c.hash;
        row["label"] = labels.labels.at(c.hash);
        auto it = labels.provenance.find(c.hash);
        row["provenance"] = it == labels.provenance.end() ? std::vector<std::string>{} : it->second;
        rows.push_back(std::move(row));
    }
    return rows;
}

LabelSet labels_from_json(const std::vector<nlohmann::json>& rows) {
    LabelSet out;
    for (const auto& row : rows) {
        auto hash = row.at("hash").get<std::string>();
        int label = row.at("label").get<int>();
        if (label != 0 && label != 1) throw CorruptFile("label of " + hash + " is not 0/1");
        if (!out.labels.emplace(hash, label).second) throw DuplicateHash("label for " + hash + " appears twice");
        auto prov = row.at("provenance").get<std::vector<std::string>>();
        if ((label == 1) != !prov.empty()) throw CorruptFile("label/provenance disagree for " + hash);
        if (!prov.empty()) out.provenance[hash] = std::move(prov);
    }
    return out;
}

}  // namespace jitdp
