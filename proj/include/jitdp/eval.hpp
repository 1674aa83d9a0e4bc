#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace jitdp {

/// Positive class is "defect-inducing" (label 1).
struct ConfusionMatrix {
    long tp = 0;
    long fp = 0;
    long fn = 0;
    long tn = 0;

    long total() const { return tp + fp + fn + tn; }
    bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> labels);

struct ClassMetrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Any 0/0 ratio is reported as 0. Throws EmptyMatrix for an all-zero matrix.
ClassMetrics metrics(const ConfusionMatrix& cm);

struct PrPoint {
    double threshold = 0.0;
    double recall = 0.0;
    double precision = 0.0;
};

/// One point per distinct score (ties form one threshold), highest score
/// first, so recall is non-decreasing.
std::vector<PrPoint> pr_curve(std::span<const double> scores, std::span<const int> labels);

/// Step-wise area: sum over thresholds of (R_i - R_{i-1}) * P_i.
/// Throws NoPositives when no label is 1.
double pr_auc(std::span<const double> scores, std::span<const int> labels);

struct EvalReport {
    ConfusionMatrix confusion;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double pr_auc = 0.0;
    std::vector<PrPoint> pr_points;
    /// Free-form provenance (model file, combine method, split) echoed into the JSON.
    nlohmann::ordered_json context = nlohmann::ordered_json::object();
};

/// With no positive label the PR curve is empty and pr_auc is 0.
EvalReport evaluate(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

nlohmann::ordered_json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

/// Writes the JSON report and a threshold,recall,precision CSV of the PR curve.
void write_report(const EvalReport& report, const std::filesystem::path& json_path,
                  const std::filesystem::path& csv_path);

}  // namespace jitdp
