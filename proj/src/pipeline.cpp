#include "jitdp/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>
#include <unordered_map>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <spdlog/spdlog.h>

#include "jitdp/error.hpp"
#include "jitdp/jsonl.hpp"

namespace jitdp {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> parse_list(const std::string& text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        auto item = trim(text.substr(pos, comma - pos));
        if (!item.empty()) out.push_back(item);
        pos = comma + 1;
    }
    return out;
}

std::string join_list(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& i : items) out += (out.empty() ? "" : ",") + i;
    return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        T out{};
        if constexpr (std::is_same_v<T, double>) out = std::stod(value, &used);
        else if constexpr (std::is_same_v<T, std::uint64_t>) out = std::stoull(value, &used);
        else out = static_cast<T>(std::stoi(value, &used));
        if (used != value.size()) throw std::invalid_argument(value);
        return out;
    } catch (const std::exception&) {
        throw ConfigError(key + ": '" + value + "' is not a valid number");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError(key + ": '" + value + "' is not a boolean");
}

struct Setting {
    std::string key;
    std::vector<std::string> stages;
    std::function<void(PipelineConfig&, const std::string&)> apply;
};

const std::vector<Setting>& settings_table() {
    static const std::vector<Setting> table = {
        {"repo.path", {"mine", "label"}, [](auto& c, auto& v) { c.repo_path = v; }},
        {"output.dir", {"mine", "label", "featurize", "split", "train", "evaluate"},
         [](auto& c, auto& v) { c.output_dir = v; }},
        {"mining.extensions", {"mine"}, [](auto& c, auto& v) { c.mining.filter.extensions = parse_list(v); }},
        {"mining.exclude", {"mine"}, [](auto& c, auto& v) { c.mining.filter.excluded = parse_list(v); }},
        {"mining.fix_keywords", {"mine", "label"}, [](auto& c, auto& v) { c.fix_keywords = parse_list(v); }},
        {"mining.rename_threshold", {"mine"},
         [](auto& c, auto& v) { c.mining.rename_threshold = parse_number<int>("mining.rename_threshold", v); }},
        {"szz.rename_threshold", {"label"},
         [](auto& c, auto& v) { c.szz.rename_threshold = parse_number<int>("szz.rename_threshold", v); }},
        {"szz.max_meta_steps", {"label"},
         [](auto& c, auto& v) { c.szz.max_meta_steps = parse_number<int>("szz.max_meta_steps", v); }},
        {"text.source", {"featurize"},
         [](auto& c, auto& v) {
             if (v == "hash") c.text_source = TextSource::hash_featurizer;
             else if (v == "embeddings") c.text_source = TextSource::external_embedding;
             else throw ConfigError("text.source must be hash or embeddings, got '" + v + "'");
         }},
        {"text.embeddings", {"featurize"}, [](auto& c, auto& v) { c.embeddings_path = v; }},
        {"text.dim", {"featurize"}, [](auto& c, auto& v) { c.text_dim = parse_number<int>("text.dim", v); }},
        {"text.seed", {"featurize"},
         [](auto& c, auto& v) { c.text_seed = parse_number<std::uint64_t>("text.seed", v); }},
        {"split.ratios", {"featurize", "split"}, [](auto& c, auto& v) { c.split.ratios = parse_ratios(v); }},
        {"split.seed", {"featurize", "split"},
         [](auto& c, auto& v) { c.split.seed = parse_number<std::uint64_t>("split.seed", v); }},
        {"split.chronological", {"featurize", "split"},
         [](auto& c, auto& v) { c.split.chronological = parse_bool("split.chronological", v); }},
        {"model.combine", {"train"}, [](auto& c, auto& v) { c.combine = combine_method_from_string(v); }},
        {"model.inputs", {"train"}, [](auto& c, auto& v) { c.inputs = input_mask_from_string(v); }},
        {"model.d", {"train"}, [](auto& c, auto& v) { c.hyper.d = parse_number<int>("model.d", v); }},
        {"model.hidden", {"train"}, [](auto& c, auto& v) { c.hyper.hidden = parse_number<int>("model.hidden", v); }},
        {"model.depth", {"train"}, [](auto& c, auto& v) { c.hyper.depth = parse_number<int>("model.depth", v); }},
        {"model.beta", {"train"}, [](auto& c, auto& v) { c.hyper.beta = parse_number<double>("model.beta", v); }},
        {"model.lr", {"train"}, [](auto& c, auto& v) { c.hyper.lr = parse_number<double>("model.lr", v); }},
        {"model.epochs", {"train"}, [](auto& c, auto& v) { c.hyper.epochs = parse_number<int>("model.epochs", v); }},
        {"model.batch", {"train"}, [](auto& c, auto& v) { c.hyper.batch = parse_number<int>("model.batch", v); }},
        {"model.seed", {"train"},
         [](auto& c, auto& v) { c.hyper.seed = parse_number<std::uint64_t>("model.seed", v); }},
        {"model.threshold", {"train"},
         [](auto& c, auto& v) { c.hyper.threshold = parse_number<double>("model.threshold", v); }},
        {"run.jobs", {"label"}, [](auto& c, auto& v) { c.jobs = parse_number<int>("run.jobs", v); }},
    };
    return table;
}

// ---- manifest ------------------------------------------------------------

ojson read_manifest(const fs::path& dir) {
    auto path = dir / artifacts::manifest;
    if (!fs::exists(path)) return ojson{{"format_version", kArtifactSchemaVersion}, {"stages", ojson::object()}};
    auto plain = read_json(path);
    return ojson::parse(plain.dump());
}

void record_stage(const fs::path& dir, const std::string& stage, ojson details) {
    auto manifest = read_manifest(dir);
    ojson entry{{"schema_version", kArtifactSchemaVersion}};
    for (auto& [k, v] : details.items()) entry[k] = v;
    manifest["stages"][stage] = std::move(entry);
    write_json(dir / artifacts::manifest, manifest);
}

// Checks that `file` exists and was written by `stage` with a schema this
// build understands; returns the stage's manifest entry.
ojson require_input(const fs::path& dir, const std::string& file, const std::string& stage) {
    if (!fs::exists(dir / file))
        throw MissingInput(file + " not found in " + dir.string() + "; run `jitdp " + stage + "` first");
    auto manifest = read_manifest(dir);
    if (!manifest["stages"].contains(stage))
        throw MissingInput(file + " has no '" + stage + "' entry in " + artifacts::manifest + "; re-run `jitdp " +
                           stage + "`");
    const auto& entry = manifest["stages"][stage];
    int version = entry.value("schema_version", 0);
    if (version != kArtifactSchemaVersion)
        throw VersionMismatch(file + " has schema version " + std::to_string(version) + ", expected " +
                              std::to_string(kArtifactSchemaVersion));
    return entry;
}

std::vector<CommitRecord> read_commits(const fs::path& dir) {
    require_input(dir, artifacts::commits, "mine");
    std::vector<CommitRecord> commits;
    for (const auto& row : read_jsonl(dir / artifacts::commits)) {
        try {
            commits.push_back(row.get<CommitRecord>());
        } catch (const nlohmann::json::exception& e) {
            throw CorruptFile(std::string(artifacts::commits) + ": " + e.what());
        }
    }
    return commits;
}

ojson split_to_json(const SplitSpec& s) {
    return {{"ratios", format_ratios(s.ratios)}, {"seed", s.seed}, {"chronological", s.chronological}};
}

SplitSpec split_from_json(const nlohmann::json& j) {
    SplitSpec s;
    s.ratios = parse_ratios(j.at("ratios").get<std::string>());
    s.seed = j.at("seed").get<std::uint64_t>();
    s.chronological = j.at("chronological").get<bool>();
    return s;
}

std::vector<std::string> hashes_at(const std::vector<std::string>& hashes, const std::vector<std::size_t>& idx) {
    std::vector<std::string> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(hashes[i]);
    return out;
}

}  // namespace

int PipelineConfig::effective_text_dim() const {
    if (text_dim > 0) return text_dim;
    return text_source == TextSource::hash_featurizer ? 256 : 768;
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& s : settings_table()) k.push_back(s.key);
        return k;
    }();
    return keys;
}

const std::vector<std::string>& stage_config_keys(const std::string& stage) {
    static const std::map<std::string, std::vector<std::string>> by_stage = [] {
        std::map<std::string, std::vector<std::string>> m;
        for (const auto& s : settings_table())
            for (const auto& st : s.stages) m[st].push_back(s.key);
        m["all"] = config_keys();
        return m;
    }();
    static const std::vector<std::string> none;
    auto it = by_stage.find(stage);
    return it == by_stage.end() ? none : it->second;
}

void apply_settings(PipelineConfig& config, const std::map<std::string, std::string>& settings) {
    const auto& table = settings_table();
    for (const auto& [key, value] : settings) {
        auto it = std::find_if(table.begin(), table.end(), [&](const Setting& s) { return s.key == key; });
        if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
        it->apply(config, trim(value));
    }
}

std::map<std::string, std::string> read_config_file(const fs::path& path) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(path.string(), tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(e.what());
    }
    std::map<std::string, std::string> out;
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ConfigError(path.string() + ": key '" + section + "' must live inside a [section]");
        for (const auto& [key, value] : body) out[section + "." + key] = value.get_value<std::string>();
    }
    return out;
}

void run_mine(const PipelineConfig& config) {
    if (config.repo_path.empty()) throw ConfigError("mine needs --repo (or repo.path)");
    const auto& dir = config.output_dir;
    fs::create_directories(dir);
    auto commits = mine_history(config.repo_path, config.mining);
    spdlog::info("mined {} commits from {}", commits.size(), config.repo_path.string());

    std::vector<ojson> rows;
    rows.reserve(commits.size());
    for (const auto& c : commits) rows.emplace_back(c);
    write_jsonl(dir / artifacts::commits, rows);

    rows.clear();
    FixMatcher matcher(config.fix_keywords);
    for (const auto& [hash, m] : compute_all_metrics(commits, matcher)) rows.push_back({{"hash", hash}, {"metrics", m}});
    write_jsonl(dir / artifacts::metrics, rows);

    record_stage(dir, "mine",
                 {{"repo", fs::absolute(config.repo_path).lexically_normal().string()},
                  {"commits", commits.size()},
                  {"extensions", join_list(config.mining.filter.extensions)},
                  {"exclude", join_list(config.mining.filter.excluded)},
                  {"rename_threshold", config.mining.rename_threshold}});
}

void run_label(const PipelineConfig& config) {
    if (config.repo_path.empty()) throw ConfigError("label needs --repo (or repo.path)");
    const auto& dir = config.output_dir;
    auto commits = read_commits(dir);
    auto repo = git::Repository::open(config.repo_path);
    FixMatcher matcher(config.fix_keywords);
    auto links = trace_fixes(commits, repo, config.szz, matcher, config.jobs);
    auto labels = label_dataset(commits, links);

    write_jsonl(dir / artifacts::labels, labels_to_json(commits, labels));
    std::ofstream log(dir / artifacts::szz_warnings, std::ios::binary | std::ios::trunc);
    std::size_t warnings = 0;
    for (const auto& link : links)
        for (const auto& w : link.warnings) {
            log << w << '\n';
            ++warnings;
        }
    long positives = std::count_if(labels.labels.begin(), labels.labels.end(), [](auto& kv) { return kv.second == 1; });
    spdlog::info("traced {} fixes, {} defect-inducing commits, {} warnings", links.size(), positives, warnings);
    record_stage(dir, "label",
                 {{"fixes", links.size()},
                  {"inducing", positives},
                  {"warnings", warnings},
                  {"rename_threshold", config.szz.rename_threshold},
                  {"max_meta_steps", config.szz.max_meta_steps}});
}

void run_featurize(const PipelineConfig& config) {
    const auto& dir = config.output_dir;
    auto commits = read_commits(dir);
    require_input(dir, artifacts::metrics, "mine");
    require_input(dir, artifacts::labels, "label");

    std::map<std::string, MetricRow> metrics;
    for (const auto& row : read_jsonl(dir / artifacts::metrics))
        metrics[row.at("hash").get<std::string>()] = metric_row_from_json(row.at("metrics"));
    auto labels = labels_from_json(read_jsonl(dir / artifacts::labels));

    auto rows = join_and_filter(commits, metrics, labels);
    auto parts = split(rows.size(), config.split);
    std::unordered_set<std::string> training;
    for (auto i : parts.train) training.insert(rows[i].hash);
    impute_missing(rows, &training);

    const int dim = config.effective_text_dim();
    std::map<std::string, TextVector> embeddings;
    if (config.text_source == TextSource::external_embedding) {
        if (config.embeddings_path.empty()) throw ConfigError("--text embeddings needs --embeddings PATH");
        embeddings = load_embeddings(config.embeddings_path, dim);
    }

    std::vector<std::array<double, kNumericalDim>> train_rows;
    for (auto i : parts.train) train_rows.push_back(rows[i].metrics);
    auto standardizer = Standardizer::fit(train_rows);

    std::vector<ojson> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        LabeledInstance inst;
        inst.hash = r.hash;
        inst.label = r.label;
        if (config.text_source == TextSource::hash_featurizer) {
            inst.text = hash_featurize(r.message, dim, config.text_seed);
        } else {
            auto it = embeddings.find(r.hash);
            if (it == embeddings.end()) throw JoinMismatch("no embedding for " + r.hash);
            inst.text = it->second;
        }
        inst.cat = encode_categorical(r.fix, weekday_utc(r.author_time), r.mix);
        inst.num = standardizer.transform(r.metrics);
        out.push_back(instance_to_json(inst));
    }
    write_jsonl(dir / artifacts::dataset, out);
    write_json(dir / artifacts::standardization, standardizer.to_json());
    spdlog::info("featurized {} instances ({} training)", rows.size(), parts.train.size());
    record_stage(dir, "featurize",
                 {{"instances", rows.size()},
                  {"split", split_to_json(config.split)},
                  {"text", {{"source", std::string(to_string(config.text_source))}, {"dim", dim},
                            {"seed", config.text_seed}}}});
}

void run_split(const PipelineConfig& config) {
    const auto& dir = config.output_dir;
    auto featurized = require_input(dir, artifacts::dataset, "featurize");
    auto used = split_from_json(featurized.at("split"));
    if (!(used == config.split))
        throw ConfigError("featurize standardised against split " + split_to_json(used).dump() +
                          " but split was asked for " + split_to_json(config.split).dump() +
                          "; re-run featurize with the same --ratios/--seed");
    std::vector<std::string> hashes;
    for (const auto& row : read_jsonl(dir / artifacts::dataset)) hashes.push_back(row.at("hash").get<std::string>());
    auto parts = split(hashes.size(), config.split);
    ojson j{{"format_version", kArtifactSchemaVersion}};
    auto spec = split_to_json(config.split);
    for (auto& [k, v] : spec.items()) j[k] = v;
    j["counts"] = {{"train", parts.train.size()}, {"val", parts.val.size()}, {"test", parts.test.size()}};
    j["train"] = hashes_at(hashes, parts.train);
    j["val"] = hashes_at(hashes, parts.val);
    j["test"] = hashes_at(hashes, parts.test);
    write_json(dir / artifacts::splits, j);
    record_stage(dir, "split", {{"split", split_to_json(config.split)}});
}

PartitionedDataset load_partitioned(const fs::path& dir) {
    require_input(dir, artifacts::dataset, "featurize");
    require_input(dir, artifacts::splits, "split");
    std::unordered_map<std::string, LabeledInstance> by_hash;
    for (const auto& row : read_jsonl(dir / artifacts::dataset)) {
        auto inst = instance_from_json(row);
        auto hash = inst.hash;
        if (!by_hash.emplace(hash, std::move(inst)).second) throw DuplicateHash(hash + " repeated in dataset");
    }
    auto splits = read_json(dir / artifacts::splits);
    auto take = [&](const char* part) {
        std::vector<LabeledInstance> out;
        for (const auto& h : splits.at(part)) {
            auto it = by_hash.find(h.get<std::string>());
            if (it == by_hash.end()) throw JoinMismatch(h.get<std::string>() + " listed in splits but not in dataset");
            out.push_back(it->second);
        }
        return out;
    };
    return {take("train"), take("val"), take("test")};
}

TrainReport<double> run_train(const PipelineConfig& config) {
    const auto& dir = config.output_dir;
    auto data = load_partitioned(dir);
    if (data.train.empty()) throw TooFewInstances("training split is empty");
    FusionConfig fc;
    fc.method = config.combine;
    fc.mask = config.inputs;
    fc.text_dim = data.train.front().text.dim();
    fc.hyper = config.hyper;
    auto report = train(init_model<double>(fc), std::span<const LabeledInstance>(data.train),
                        std::span<const LabeledInstance>(data.val));
    save_model(report.model, dir / artifacts::model);
    write_json(dir / artifacts::train_report,
               ojson{{"combine_method", std::string(to_string(fc.method))},
                     {"input_mask", std::string(to_string(fc.mask))},
                     {"best_epoch", report.best_epoch},
                     {"train_loss", report.train_loss},
                     {"val_f1", report.val_f1},
                     {"val_loss", report.val_loss}});
    spdlog::info("trained {} ({}): best epoch {}", to_string(fc.method), to_string(fc.mask), report.best_epoch);
    record_stage(dir, "train", {{"combine_method", std::string(to_string(fc.method))},
                                {"input_mask", std::string(to_string(fc.mask))}});
    return report;
}

EvalReport run_evaluate(const PipelineConfig& config) {
    const auto& dir = config.output_dir;
    auto data = load_partitioned(dir);
    require_input(dir, artifacts::model, "train");
    auto model = load_model(dir / artifacts::model);
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& inst : data.test) {
        scores.push_back(predict(model, inst));
        labels.push_back(inst.label);
    }
    auto report = evaluate(scores, labels, model.config.hyper.threshold);
    report.context = {{"model_file", artifacts::model},
                      {"combine_method", std::string(to_string(model.config.method))},
                      {"input_mask", std::string(to_string(model.config.mask))},
                      {"threshold", model.config.hyper.threshold},
                      {"test_instances", data.test.size()},
                      {"test_positives", std::count(labels.begin(), labels.end(), 1)}};
    write_report(report, dir / artifacts::report, dir / artifacts::pr_curve);
    spdlog::info("test F1 {:.4f}, PR-AUC {:.4f}", report.f1, report.pr_auc);
    record_stage(dir, "evaluate", ojson::object());
    return report;
}

EvalReport run_all(const PipelineConfig& config) {
    run_mine(config);
    run_label(config);
    run_featurize(config);
    run_split(config);
    run_train(config);
    return run_evaluate(config);
}

}  // namespace jitdp
