#include "jitdp/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

#include "jitdp/error.hpp"
#include "jitdp/jsonl.hpp"

namespace jitdp {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// FNV-1a over the token bytes, basis perturbed by the seed, then mixed.
std::uint64_t token_hash(std::string_view token, std::uint64_t seed) {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ splitmix64(seed);
    for (unsigned char c : token) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(h);
}

bool blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

bool is_hex40(const std::string& s) {
    return s.size() == 40 && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isxdigit(c); });
}

}  // namespace

std::string_view to_string(TextSource source) {
    return source == TextSource::hash_featurizer ? "hash_featurizer" : "external_embedding";
}

ChangeMix change_mix(const std::vector<FileChange>& files) {
    bool add = false, modify = false, remove = false;
    for (const auto& f : files) {
        switch (f.change_kind) {
            case ChangeKind::add: add = true; break;
            case ChangeKind::remove: remove = true; break;
            case ChangeKind::modify:
            case ChangeKind::rename: modify = true; break;
        }
    }
    int kinds = add + modify + remove;
    if (kinds != 1) return ChangeMix::mixed;
    if (add) return ChangeMix::pure_add;
    if (remove) return ChangeMix::pure_delete;
    return ChangeMix::pure_modify;
}

int weekday_utc(std::int64_t unix_seconds) {
    std::int64_t days = unix_seconds / 86400;
    if (unix_seconds % 86400 < 0) --days;
    // 1970-01-01 was a Thursday
    return static_cast<int>(((days + 3) % 7 + 7) % 7);
}

VectorXd encode_categorical(bool fix, int weekday, ChangeMix mix) {
    VectorXd v = VectorXd::Zero(kCategoricalDim);
    v(fix ? 1 : 0) = 1.0;
    v(2 + weekday) = 1.0;
    v(9 + static_cast<int>(mix)) = 1.0;
    return v;
}

MetricRow metric_row(const ChangeMetrics& m) {
    MetricRow row;
    row.values = {double(m.ns), double(m.nd),   double(m.nf),  m.entropy,     double(m.la),
                  double(m.ld), double(m.lt),   double(m.ndev), m.age,        double(m.nuc),
                  double(m.exp), m.rexp,        double(m.sexp)};
    row.fix = m.fix;
    return row;
}

MetricRow metric_row_from_json(const nlohmann::json& metrics) {
    MetricRow row;
    for (std::size_t i = 0; i < kNumericalFeatures.size(); ++i) {
        auto it = metrics.find(std::string(kNumericalFeatures[i]));
        if (it != metrics.end() && it->is_number()) row.values[i] = it->get<double>();
    }
    if (auto it = metrics.find("fix"); it != metrics.end() && it->is_boolean()) row.fix = it->get<bool>();
    return row;
}

std::vector<RawInstance> join_and_filter(const std::vector<CommitRecord>& records,
                                         const std::map<std::string, MetricRow>& metrics, const LabelSet& labels) {
    std::vector<RawInstance> out;
    for (const auto& r : records) {
        if (r.is_merge() || r.files.empty() || blank(r.message)) continue;
        auto m = metrics.find(r.hash);
        if (m == metrics.end()) throw JoinMismatch("no metrics for " + r.hash);
        if (!m->second.fix) throw JoinMismatch("metrics for " + r.hash + " lack 'fix'");
        auto l = labels.labels.find(r.hash);
        if (l == labels.labels.end()) throw JoinMismatch("no label for " + r.hash);

        RawInstance inst;
        inst.hash = r.hash;
        inst.message = r.message;
        inst.author_time = r.author_time;
        inst.mix = change_mix(r.files);
        inst.fix = *m->second.fix;
        for (std::size_t i = 0; i < kNumericalDim; ++i) inst.metrics[i] = m->second.values[i].value_or(kMissing);
        inst.label = l->second;
        out.push_back(std::move(inst));
    }
    return out;
}

void impute_missing(std::vector<RawInstance>& rows, const std::unordered_set<std::string>* training) {
    for (std::size_t col = 0; col < kNumericalDim; ++col) {
        std::vector<double> observed;
        bool any_missing = false;
        for (const auto& r : rows) {
            double v = r.metrics[col];
            if (std::isnan(v)) {
                any_missing = true;
                continue;
            }
            if (!training || training->count(r.hash)) observed.push_back(v);
        }
        if (!any_missing) continue;
        double median = 0.0;
        if (!observed.empty()) {
            std::sort(observed.begin(), observed.end());
            std::size_t mid = observed.size() / 2;
            median = observed.size() % 2 ? observed[mid] : 0.5 * (observed[mid - 1] + observed[mid]);
        }
        for (auto& r : rows)
            if (std::isnan(r.metrics[col])) r.metrics[col] = median;
    }
}

std::vector<RawInstance> clean(const std::vector<CommitRecord>& records, const std::map<std::string, MetricRow>& metrics,
                               const LabelSet& labels, const std::unordered_set<std::string>* training) {
    auto rows = join_and_filter(records, metrics, labels);
    impute_missing(rows, training);
    return rows;
}

std::vector<std::string> tokenize(std::string_view message) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : message) {
        // bytes >= 0x80 belong to UTF-8 sequences and stay inside tokens
        if (std::isalnum(c) || c >= 0x80) {
            cur.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

TextVector hash_featurize(std::string_view message, int dim, std::uint64_t seed) {
    if (dim < 2) throw std::invalid_argument("hash_featurize: dim must be >= 2");
    TextVector out;
    out.source = TextSource::hash_featurizer;
    out.values = VectorXd::Zero(dim);
    const std::uint64_t sign_seed = seed ^ 0x5bd1e9955bd1e995ULL;
    for (const auto& tok : tokenize(message)) {
        auto bucket = static_cast<Eigen::Index>(token_hash(tok, seed) % static_cast<std::uint64_t>(dim));
        out.values(bucket) += (token_hash(tok, sign_seed) & 1U) ? 1.0 : -1.0;
    }
    double norm = out.values.norm();
    if (norm > 0.0) out.values /= norm;
    return out;
}

std::map<std::string, TextVector> load_embeddings(const std::filesystem::path& path, int expected_dim) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::map<std::string, TextVector> out;
    std::string line;
    for (std::size_t number = 1; std::getline(in, line); ++number) {
        if (blank(line)) continue;
        auto where = path.filename().string() + ":" + std::to_string(number);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw MalformedLine(where + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("hash") || !j["hash"].is_string() || !j.contains("dim") ||
            !j["dim"].is_number_integer() || !j.contains("vector") || !j["vector"].is_array())
            throw MalformedLine(where + ": expected {\"hash\", \"dim\", \"vector\"}");
        auto hash = j["hash"].get<std::string>();
        if (!is_hex40(hash)) throw MalformedLine(where + ": hash is not 40 hex characters");
        const auto& vec = j["vector"];
        int dim = j["dim"].get<int>();
        if (dim != expected_dim || static_cast<int>(vec.size()) != dim)
            throw DimMismatch(hash + ": dim " + std::to_string(dim) + " with " + std::to_string(vec.size()) +
                              " values, expected " + std::to_string(expected_dim));
        TextVector tv;
        tv.source = TextSource::external_embedding;
        tv.values.resize(dim);
        for (int i = 0; i < dim; ++i) {
            if (!vec[i].is_number()) throw MalformedLine(where + ": non-numeric vector entry");
            tv.values(i) = vec[i].get<double>();
        }
        if (!tv.values.allFinite()) throw MalformedLine(where + ": non-finite vector entry");
        if (!out.emplace(hash, std::move(tv)).second) throw DuplicateHash(hash + " repeated at " + where);
    }
    return out;
}

std::array<int, 3> parse_ratios(const std::string& text) {
    std::array<int, 3> r{};
    std::size_t pos = 0;
    for (int i = 0; i < 3; ++i) {
        std::size_t end = text.find(':', pos);
        if ((i < 2) == (end == std::string::npos)) throw ConfigError("ratios must look like a:b:c, got '" + text + "'");
        auto part = text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
        if (part.empty() || !std::all_of(part.begin(), part.end(), ::isdigit))
            throw ConfigError("ratio '" + part + "' is not a positive integer");
        r[i] = std::stoi(part);
        if (r[i] <= 0) throw ConfigError("ratio '" + part + "' is not a positive integer");
        pos = end + 1;
    }
    return r;
}

std::string format_ratios(const std::array<int, 3>& r) {
    return std::to_string(r[0]) + ":" + std::to_string(r[1]) + ":" + std::to_string(r[2]);
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        std::uint64_t r = rng();
        if (r >= threshold) return r % bound;
    }
}

SplitIndices split(std::size_t n, const SplitSpec& spec) {
    if (n < 10) throw TooFewInstances("need at least 10 instances to split, have " + std::to_string(n));
    for (int r : spec.ratios)
        if (r <= 0) throw ConfigError("split ratios must be positive");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (!spec.chronological) {
        std::mt19937_64 rng(spec.seed);
        for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[uniform_below(rng, i + 1)]);
    }
    const std::size_t total = spec.ratios[0] + spec.ratios[1] + spec.ratios[2];
    const std::size_t n_train = n * spec.ratios[0] / total;
    const std::size_t n_val = n * spec.ratios[1] / total;
    SplitIndices out;
    out.train.assign(order.begin(), order.begin() + n_train);
    out.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
    out.test.assign(order.begin() + n_train + n_val, order.end());
    return out;
}

Standardizer Standardizer::fit(const std::vector<std::array<double, kNumericalDim>>& rows) {
    Standardizer s;
    if (rows.empty()) return s;
    for (std::size_t c = 0; c < kNumericalDim; ++c) {
        double sum = 0.0;
        for (const auto& r : rows) sum += r[c];
        double mean = sum / rows.size();
        double ss = 0.0;
        for (const auto& r : rows) ss += (r[c] - mean) * (r[c] - mean);
        s.mean[c] = mean;
        s.stddev[c] = std::sqrt(ss / rows.size());
    }
    return s;
}

VectorXd Standardizer::transform(const std::array<double, kNumericalDim>& row) const {
    VectorXd z(kNumericalDim);
    for (std::size_t c = 0; c < kNumericalDim; ++c)
        z(c) = stddev[c] > 0.0 ? (row[c] - mean[c]) / stddev[c] : 0.0;
    return z;
}

nlohmann::ordered_json Standardizer::to_json() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < kNumericalDim; ++c)
        j[std::string(kNumericalFeatures[c])] = {{"mean", mean[c]}, {"std", stddev[c]}};
    return j;
}

Standardizer Standardizer::from_json(const nlohmann::json& j) {
    Standardizer s;
    for (std::size_t c = 0; c < kNumericalDim; ++c) {
        const auto& f = j.at(std::string(kNumericalFeatures[c]));
        s.mean[c] = f.at("mean").get<double>();
        s.stddev[c] = f.at("std").get<double>();
    }
    return s;
}

nlohmann::ordered_json instance_to_json(const LabeledInstance& inst) {
    nlohmann::ordered_json j;
    j["hash"] = inst.hash;
    j["label"] = inst.label;
    j["text"] = {{"source", std::string(to_string(inst.text.source))},
                 {"dim", inst.text.dim()},
                 {"values", std::vector<double>(inst.text.values.data(), inst.text.values.data() + inst.text.dim())}};
    j["cat"] = std::vector<int>(inst.cat.data(), inst.cat.data() + inst.cat.size());
    j["num"] = std::vector<double>(inst.num.data(), inst.num.data() + inst.num.size());
    return j;
}

LabeledInstance instance_from_json(const nlohmann::json& j) {
    LabeledInstance inst;
    try {
        inst.hash = j.at("hash").get<std::string>();
        inst.label = j.at("label").get<int>();
        const auto& text = j.at("text");
        auto source = text.at("source").get<std::string>();
        if (source == "hash_featurizer") inst.text.source = TextSource::hash_featurizer;
        else if (source == "external_embedding") inst.text.source = TextSource::external_embedding;
        else throw CorruptFile("unknown text source '" + source + "'");
        auto values = text.at("values").get<std::vector<double>>();
        if (static_cast<int>(values.size()) != text.at("dim").get<int>())
            throw DimMismatch(inst.hash + ": text dim disagrees with its values");
        inst.text.values = Eigen::Map<const VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
        auto cat = j.at("cat").get<std::vector<double>>();
        auto num = j.at("num").get<std::vector<double>>();
        if (cat.size() != kCategoricalDim || num.size() != kNumericalDim)
            throw DimMismatch(inst.hash + ": categorical/numerical width");
        inst.cat = Eigen::Map<const VectorXd>(cat.data(), kCategoricalDim);
        inst.num = Eigen::Map<const VectorXd>(num.data(), kNumericalDim);
    } catch (const nlohmann::json::exception& e) {
        throw CorruptFile(std::string("dataset row: ") + e.what());
    }
    if (inst.label != 0 && inst.label != 1) throw CorruptFile(inst.hash + ": label is not 0/1");
    return inst;
}

}  // namespace jitdp
