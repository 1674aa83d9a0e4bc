#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "jitdp/mining.hpp"
#include "jitdp/szz.hpp"
#include "jitdp/types.hpp"

namespace jitdp {

enum class TextSource { hash_featurizer, external_embedding };

std::string_view to_string(TextSource source);

struct TextVector {
    VectorXd values;
    TextSource source = TextSource::hash_featurizer;

    int dim() const { return static_cast<int>(values.size()); }
};

/// Names of the numeric metrics, in feature-vector order.
inline constexpr std::array<std::string_view, kNumericalDim> kNumericalFeatures = {
    "ns", "nd", "nf", "entropy", "la", "ld", "lt", "ndev", "age", "nuc", "exp", "rexp", "sexp"};

enum class ChangeMix { pure_add = 0, pure_modify = 1, pure_delete = 2, mixed = 3 };

ChangeMix change_mix(const std::vector<FileChange>& files);

/// Monday = 0 ... Sunday = 6, in UTC.
int weekday_utc(std::int64_t unix_seconds);

/// One-hot of {fix: 2} + {weekday: 7} + {change mix: 4}.
VectorXd encode_categorical(bool fix, int weekday, ChangeMix mix);

/// A metrics row as read from disk; absent keys stay empty.
struct MetricRow {
    std::array<std::optional<double>, kNumericalDim> values;
    std::optional<bool> fix;
};

MetricRow metric_row(const ChangeMetrics& m);
MetricRow metric_row_from_json(const nlohmann::json& metrics);

/// A cleaned, joined commit before vectorisation.
struct RawInstance {
    std::string hash;
    std::string message;
    std::int64_t author_time = 0;
    ChangeMix mix = ChangeMix::mixed;
    bool fix = false;
    std::array<double, kNumericalDim> metrics{};
    int label = 0;
};

/// Joins records with metrics and labels, dropping merges, commits without
/// source files and commits with blank messages. Throws JoinMismatch when a
/// kept commit lacks a metrics row (or its FIX value) or a label. Missing
/// numeric metrics come back as NaN, for `impute_missing`.
std::vector<RawInstance> join_and_filter(const std::vector<CommitRecord>& records,
                                         const std::map<std::string, MetricRow>& metrics, const LabelSet& labels);

/// Replaces NaN metrics with the median of the column over the instances
/// in `training` (every instance when `training` is null). Columns with no
/// observed training value fall back to 0.
void impute_missing(std::vector<RawInstance>& rows, const std::unordered_set<std::string>* training = nullptr);

/// join_and_filter followed by impute_missing.
std::vector<RawInstance> clean(const std::vector<CommitRecord>& records, const std::map<std::string, MetricRow>& metrics,
                               const LabelSet& labels, const std::unordered_set<std::string>* training = nullptr);

std::vector<std::string> tokenize(std::string_view message);

/// Signed feature hashing of the message tokens into `dim` buckets,
/// L2-normalised. Stable across platforms for a fixed seed.
TextVector hash_featurize(std::string_view message, int dim, std::uint64_t seed = 0);

/// Reads an embedding JSONL file of {"hash", "dim", "vector"} lines.
std::map<std::string, TextVector> load_embeddings(const std::filesystem::path& path, int expected_dim);

struct SplitSpec {
    std::array<int, 3> ratios{8, 1, 1};
    std::uint64_t seed = 0;
    bool chronological = false;

    bool operator==(const SplitSpec&) const = default;
};

/// Parses "a:b:c" with three positive integers.
std::array<int, 3> parse_ratios(const std::string& text);
std::string format_ratios(const std::array<int, 3>& ratios);

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
};

/// Partitions positions 0..n-1. Sizes are floor(n*a/s), floor(n*b/s) and the
/// remainder. The random variant shuffles with a seeded Fisher-Yates; the
/// chronological one keeps input order. Throws TooFewInstances for n < 10.
SplitIndices split(std::size_t n, const SplitSpec& spec);

/// Uniform draw in [0, bound) from a 64-bit generator, by rejection.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound);

/// Per-feature z-scoring fitted on the training rows only.
struct Standardizer {
    std::array<double, kNumericalDim> mean{};
    std::array<double, kNumericalDim> stddev{};

    static Standardizer fit(const std::vector<std::array<double, kNumericalDim>>& rows);
    /// Constant columns (stddev 0) map to 0.
    VectorXd transform(const std::array<double, kNumericalDim>& row) const;

    nlohmann::ordered_json to_json() const;
    static Standardizer from_json(const nlohmann::json& j);
};

struct LabeledInstance {
    std::string hash;
    TextVector text;
    VectorXd cat;
    VectorXd num;
    int label = 0;
};

nlohmann::ordered_json instance_to_json(const LabeledInstance& inst);
LabeledInstance instance_from_json(const nlohmann::json& j);

}  // namespace jitdp
