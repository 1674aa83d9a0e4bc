#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "jitdp/dataset.hpp"
#include "jitdp/eval.hpp"
#include "jitdp/fusion.hpp"
#include "jitdp/mining.hpp"
#include "jitdp/szz.hpp"

namespace jitdp {

struct PipelineConfig {
    std::filesystem::path repo_path;
    std::filesystem::path output_dir = "jitdp-out";

    MiningOptions mining;
    std::vector<std::string> fix_keywords = default_fix_keywords();
    SzzConfig szz;

    TextSource text_source = TextSource::hash_featurizer;
    std::filesystem::path embeddings_path;
    int text_dim = 0;  // 0 picks 256 for hashing, 768 for embeddings
    std::uint64_t text_seed = 0;

    SplitSpec split;
    CombineMethod combine = CombineMethod::gating_sum;
    InputMask inputs = InputMask::all;
    FusionHyper hyper;

    int jobs = 1;

    int effective_text_dim() const;
};

/// Config keys by section, and the ones each stage reads.
const std::vector<std::string>& config_keys();
const std::vector<std::string>& stage_config_keys(const std::string& stage);

/// Applies "section.key" -> value pairs onto `config`; unknown keys and
/// unparsable values raise ConfigError.
void apply_settings(PipelineConfig& config, const std::map<std::string, std::string>& settings);

/// Reads a sectioned key-value (INI) file into "section.key" pairs.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

/// Stable artifact names inside output_dir.
namespace artifacts {
inline constexpr const char* commits = "commits.jsonl";
inline constexpr const char* metrics = "metrics.jsonl";
inline constexpr const char* labels = "labels.jsonl";
inline constexpr const char* szz_warnings = "szz_warnings.log";
inline constexpr const char* dataset = "dataset.jsonl";
inline constexpr const char* standardization = "standardization.json";
inline constexpr const char* splits = "splits.json";
inline constexpr const char* model = "model.json";
inline constexpr const char* train_report = "train_report.json";
inline constexpr const char* report = "report.json";
inline constexpr const char* pr_curve = "pr_curve.csv";
inline constexpr const char* manifest = "manifest.json";
}  // namespace artifacts

inline constexpr int kArtifactSchemaVersion = 1;

void run_mine(const PipelineConfig& config);
void run_label(const PipelineConfig& config);
void run_featurize(const PipelineConfig& config);
void run_split(const PipelineConfig& config);
TrainReport<double> run_train(const PipelineConfig& config);
EvalReport run_evaluate(const PipelineConfig& config);
/// mine, label, featurize, split, train, evaluate.
EvalReport run_all(const PipelineConfig& config);

/// Dataset rows with their partition, as written by featurize/split.
struct PartitionedDataset {
    std::vector<LabeledInstance> train, val, test;
};
PartitionedDataset load_partitioned(const std::filesystem::path& output_dir);

}  // namespace jitdp
