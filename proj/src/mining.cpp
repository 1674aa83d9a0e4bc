#include "jitdp/mining.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <unordered_map>

#include "jitdp/error.hpp"

namespace jitdp {

namespace {

std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string regex_escape(const std::string& word) {
    static const std::string special = R"(\^$.|?*+()[]{})";
    std::string out;
    for (char c : word) {
        if (special.find(c) != std::string::npos) out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

}  // namespace

SourceFilter SourceFilter::defaults() {
    return {{".c", ".cc", ".cpp", ".h", ".hpp", ".py", ".rs", ".go", ".java", ".js", ".ts"},
            {"test/", "docs/", "third_party/"}};
}

bool SourceFilter::accepts(const std::string& path) const {
    bool ext_ok = extensions.empty();
    for (const auto& ext : extensions) {
        if (path.size() > ext.size() && path.compare(path.size() - ext.size(), ext.size(), ext) == 0) {
            ext_ok = true;
            break;
        }
    }
    if (!ext_ok) return false;
    for (const auto& pattern : excluded) {
        std::string dir = pattern;
        while (!dir.empty() && dir.back() == '/') dir.pop_back();
        if (dir.empty()) continue;
        if (path.rfind(dir + "/", 0) == 0 || path.find("/" + dir + "/") != std::string::npos) return false;
    }
    return true;
}

std::vector<std::string> default_fix_keywords() {
    return {"fix", "fixes", "fixed", "bug", "defect", "fault", "patch"};
}

FixMatcher::FixMatcher(const std::vector<std::string>& keywords) {
    std::string alternatives;
    for (const auto& kw : keywords) {
        if (kw.empty()) continue;
        if (!alternatives.empty()) alternatives += '|';
        alternatives += regex_escape(lowercase(kw));
    }
    std::string expr = "#[0-9]+";
    if (!alternatives.empty()) expr = "\\b(" + alternatives + ")\\b|" + expr;
    pattern_ = std::regex(expr, std::regex::ECMAScript | std::regex::optimize);
}

bool FixMatcher::operator()(const std::string& message) const {
    return std::regex_search(lowercase(message), pattern_);
}

bool is_fix(const CommitRecord& commit, const FixMatcher& matcher) { return matcher(commit.message); }

std::string subsystem_of(const std::string& path) {
    auto slash = path.find('/');
    return slash == std::string::npos ? "/" : path.substr(0, slash);
}

std::string directory_of(const std::string& path) {
    auto slash = path.rfind('/');
    return slash == std::string::npos ? "/" : path.substr(0, slash);
}

double churn_entropy(std::vector<int> churn) {
    if (churn.size() <= 1) return 0.0;
    // summation order fixed so the result is permutation-invariant bit for bit
    std::sort(churn.begin(), churn.end());
    double total = 0.0;
    for (int c : churn) total += c;
    if (total <= 0.0) return 0.0;
    double h = 0.0;
    for (int c : churn) {
        if (c <= 0) continue;
        double p = c / total;
        h -= p * std::log2(p);
    }
    return std::clamp(h / std::log2(static_cast<double>(churn.size())), 0.0, 1.0);
}

void HistoryIndex::add(const CommitRecord& commit) {
    seen_.insert(commit.hash);
    if (commit.is_merge() || commit.files.empty()) return;

    std::set<std::string> subsystems;
    for (const auto& f : commit.files) {
        subsystems.insert(subsystem_of(f.path()));
        const std::string& key = f.old_path ? *f.old_path : *f.new_path;
        FileHistory hist;
        if (auto it = files_.find(key); it != files_.end()) {
            hist = std::move(it->second);
            files_.erase(it);
        }
        if (!f.new_path) continue;  // deleted: history ends here
        hist.last_touch = commit.author_time;
        hist.authors.insert(commit.author_id);
        hist.commits.insert(commit.hash);
        files_[*f.new_path] = std::move(hist);
    }
    authors_[commit.author_id].push_back({commit.author_time, {subsystems.begin(), subsystems.end()}});
}

ChangeMetrics compute_metrics(const CommitRecord& commit, const HistoryIndex& index, const FixMatcher& matcher) {
    if (commit.is_merge() || commit.files.empty())
        throw std::invalid_argument("compute_metrics: " + commit.hash + " is a merge or touches no source file");
    for (const auto& parent : commit.parent_hashes)
        if (!index.contains(parent))
            throw MissingHistory("parent " + parent + " of " + commit.hash + " is not indexed");

    ChangeMetrics m;
    std::set<std::string> subsystems, directories, authors, commits;
    std::vector<int> churn;
    double age_sum = 0.0;
    for (const auto& f : commit.files) {
        subsystems.insert(subsystem_of(f.path()));
        directories.insert(directory_of(f.path()));
        churn.push_back(f.lines_added + f.lines_deleted);
        m.la += f.lines_added;
        m.ld += f.lines_deleted;
        m.lt += f.lines_before;

        const std::string& key = f.old_path ? *f.old_path : *f.new_path;
        auto it = f.change_kind == ChangeKind::add ? index.files_.end() : index.files_.find(key);
        if (it == index.files_.end()) continue;
        const auto& hist = it->second;
        authors.insert(hist.authors.begin(), hist.authors.end());
        commits.insert(hist.commits.begin(), hist.commits.end());
        age_sum += std::max(0.0, static_cast<double>(commit.author_time - hist.last_touch) / kSecondsPerDay);
    }
    m.ns = static_cast<int>(subsystems.size());
    m.nd = static_cast<int>(directories.size());
    m.nf = static_cast<int>(commit.files.size());
    m.entropy = churn_entropy(std::move(churn));
    m.fix = is_fix(commit, matcher);
    m.ndev = static_cast<int>(authors.size());
    m.nuc = static_cast<int>(commits.size());
    m.age = age_sum / m.nf;

    if (auto it = index.authors_.find(commit.author_id); it != index.authors_.end()) {
        for (const auto& prior : it->second) {
            ++m.exp;
            double years = std::max<double>(0.0, static_cast<double>(commit.author_time - prior.time)) / kSecondsPerYear;
            m.rexp += 1.0 / (years + 1.0);
            bool shared = std::any_of(prior.subsystems.begin(), prior.subsystems.end(),
                                      [&](const std::string& s) { return subsystems.count(s) != 0; });
            if (shared) ++m.sexp;
        }
    }
    return m;
}

std::vector<CommitRecord> records_from_log(std::vector<git::LogEntry> entries, const git::Repository& repo,
                                           const MiningOptions& options) {
    std::vector<CommitRecord> records;
    records.reserve(entries.size());
    std::vector<std::string> blob_specs;
    std::vector<std::pair<std::size_t, std::size_t>> blob_owner;

    for (auto& e : entries) {
        CommitRecord r;
        r.hash = std::move(e.hash);
        r.parent_hashes = std::move(e.parents);
        r.author_id = lowercase(e.author_name + " <" + e.author_email + ">");
        r.author_time = e.author_time;
        r.message = std::move(e.message);
        if (!r.is_merge()) {
            for (auto& p : e.patches) {
                const std::string& path = p.new_path ? *p.new_path : *p.old_path;
                if (!options.filter.accepts(path)) continue;
                FileChange f;
                f.change_kind = p.kind;
                f.old_path = p.old_path;
                f.new_path = p.new_path;
                f.lines_added = p.lines_added();
                f.lines_deleted = p.lines_deleted();
                f.deleted_line_numbers = p.deleted_line_numbers();
                if (f.old_path && !r.parent_hashes.empty()) {
                    blob_specs.push_back(r.parent_hashes.front() + ":" + *f.old_path);
                    blob_owner.emplace_back(records.size(), r.files.size());
                }
                r.files.push_back(std::move(f));
            }
        }
        records.push_back(std::move(r));
    }

    auto counts = repo.line_counts(blob_specs);
    for (std::size_t i = 0; i < counts.size(); ++i) {
        auto [ri, fi] = blob_owner[i];
        if (!counts[i]) throw CorruptHistory("unreadable object " + blob_specs[i] + " in " + records[ri].hash);
        records[ri].files[fi].lines_before = *counts[i];
    }
    return records;
}

std::vector<CommitRecord> mine_history(const std::filesystem::path& repo_path, const MiningOptions& options) {
    auto repo = git::Repository::open(repo_path);
    if (!repo.has_head()) return {};
    auto topo = records_from_log(repo.log(options.rename_threshold), repo, options);

    // Kahn's algorithm keyed by (author_time, topological position).
    std::unordered_map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < topo.size(); ++i) position.emplace(topo[i].hash, i);
    std::vector<int> pending(topo.size(), 0);
    std::vector<std::vector<std::size_t>> children(topo.size());
    for (std::size_t i = 0; i < topo.size(); ++i) {
        for (const auto& p : topo[i].parent_hashes) {
            auto it = position.find(p);
            if (it == position.end()) continue;
            ++pending[i];
            children[it->second].push_back(i);
        }
    }
    using Key = std::pair<std::int64_t, std::size_t>;
    std::priority_queue<Key, std::vector<Key>, std::greater<>> ready;
    for (std::size_t i = 0; i < topo.size(); ++i)
        if (pending[i] == 0) ready.emplace(topo[i].author_time, i);

    std::vector<CommitRecord> ordered;
    ordered.reserve(topo.size());
    while (!ready.empty()) {
        auto [time, i] = ready.top();
        ready.pop();
        for (auto c : children[i])
            if (--pending[c] == 0) ready.emplace(topo[c].author_time, c);
        ordered.push_back(std::move(topo[i]));
    }
    if (ordered.size() != topo.size()) throw CorruptHistory("commit graph contains a cycle");
    return ordered;
}

std::vector<std::pair<std::string, ChangeMetrics>> compute_all_metrics(const std::vector<CommitRecord>& commits,
                                                                       const FixMatcher& matcher) {
    std::vector<std::pair<std::string, ChangeMetrics>> out;
    HistoryIndex index;
    for (const auto& c : commits) {
        if (!c.is_merge() && !c.files.empty()) out.emplace_back(c.hash, compute_metrics(c, index, matcher));
        index.add(c);
    }
    return out;
}

void to_json(nlohmann::ordered_json& j, const FileChange& f) {
    j = nlohmann::ordered_json::object();
    if (f.old_path) j["old_path"] = *f.old_path;
    if (f.new_path) j["new_path"] = *f.new_path;
    j["change_kind"] = std::string(git::to_string(f.change_kind));
    j["lines_added"] = f.lines_added;
    j["lines_deleted"] = f.lines_deleted;
    j["lines_before"] = f.lines_before;
    j["deleted_line_numbers"] = f.deleted_line_numbers;
}

void from_json(const nlohmann::json& j, FileChange& f) {
    f = {};
    if (j.contains("old_path")) f.old_path = j.at("old_path").get<std::string>();
    if (j.contains("new_path")) f.new_path = j.at("new_path").get<std::string>();
    if (!f.old_path && !f.new_path) throw CorruptHistory("file change without any path");
    f.change_kind = git::change_kind_from_string(j.at("change_kind").get<std::string>());
    f.lines_added = j.at("lines_added").get<int>();
    f.lines_deleted = j.at("lines_deleted").get<int>();
    f.lines_before = j.at("lines_before").get<int>();
    f.deleted_line_numbers = j.at("deleted_line_numbers").get<std::vector<int>>();
}

void to_json(nlohmann::ordered_json& j, const CommitRecord& c) {
    j = nlohmann::ordered_json::object();
    j["hash"] = c.hash;
    j["parent_hashes"] = c.parent_hashes;
    j["author_id"] = c.author_id;
    j["author_time"] = c.author_time;
    j["message"] = c.message;
    auto files = nlohmann::ordered_json::array();
    for (const auto& f : c.files) files.push_back(f);
    j["files"] = std::move(files);
}

void from_json(const nlohmann::json& j, CommitRecord& c) {
    c.hash = j.at("hash").get<std::string>();
    c.parent_hashes = j.at("parent_hashes").get<std::vector<std::string>>();
    c.author_id = j.at("author_id").get<std::string>();
    c.author_time = j.at("author_time").get<std::int64_t>();
    c.message = j.at("message").get<std::string>();
    c.files.clear();
    for (const auto& f : j.at("files")) c.files.push_back(f.get<FileChange>());
}

void to_json(nlohmann::ordered_json& j, const ChangeMetrics& m) {
    j = nlohmann::ordered_json::object();
    j["ns"] = m.ns;
    j["nd"] = m.nd;
    j["nf"] = m.nf;
    j["entropy"] = m.entropy;
    j["la"] = m.la;
    j["ld"] = m.ld;
    j["lt"] = m.lt;
    j["fix"] = m.fix;
    j["ndev"] = m.ndev;
    j["age"] = m.age;
    j["nuc"] = m.nuc;
    j["exp"] = m.exp;
    j["rexp"] = m.rexp;
    j["sexp"] = m.sexp;
}

void from_json(const nlohmann::json& j, ChangeMetrics& m) {
    m.ns = j.at("ns").get<int>();
    m.nd = j.at("nd").get<int>();
    m.nf = j.at("nf").get<int>();
    m.entropy = j.at("entropy").get<double>();
    m.la = j.at("la").get<int>();
    m.ld = j.at("ld").get<int>();
    m.lt = j.at("lt").get<int>();
    m.fix = j.at("fix").get<bool>();
    m.ndev = j.at("ndev").get<int>();
    m.age = j.at("age").get<double>();
    m.nuc = j.at("nuc").get<int>();
    m.exp = j.at("exp").get<int>();
    m.rexp = j.at("rexp").get<double>();
    m.sexp = j.at("sexp").get<int>();
}

}  // namespace jitdp
