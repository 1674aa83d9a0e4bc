#include "jitdp/eval.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>

#include "jitdp/error.hpp"
#include "jitdp/jsonl.hpp"

namespace jitdp {

namespace {

double ratio(long num, long den) { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }

std::string shortest(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

void check_lengths(std::size_t a, std::size_t b) {
    if (a != b) throw LengthMismatch("lengths differ: " + std::to_string(a) + " vs " + std::to_string(b));
}

}  // namespace

ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> labels) {
    check_lengths(preds.size(), labels.size());
    if (preds.empty()) throw LengthMismatch("confusion of zero instances");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        bool p = preds[i] == 1, l = labels[i] == 1;
        if (p && l) ++cm.tp;
        else if (p) ++cm.fp;
        else if (l) ++cm.fn;
        else ++cm.tn;
    }
    return cm;
}

ClassMetrics metrics(const ConfusionMatrix& cm) {
    if (cm.total() <= 0) throw EmptyMatrix("confusion matrix is empty");
    ClassMetrics m;
    m.precision = ratio(cm.tp, cm.tp + cm.fp);
    m.recall = ratio(cm.tp, cm.tp + cm.fn);
    m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    m.accuracy = ratio(cm.tp + cm.tn, cm.total());
    return m;
}

std::vector<PrPoint> pr_curve(std::span<const double> scores, std::span<const int> labels) {
    check_lengths(scores.size(), labels.size());
    const long positives = std::count(labels.begin(), labels.end(), 1);
    if (positives == 0) throw NoPositives("precision-recall needs at least one positive label");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::vector<PrPoint> points;
    long tp = 0, fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double threshold = scores[order[i]];
        for (; i < order.size() && scores[order[i]] == threshold; ++i) {
            if (labels[order[i]] == 1) ++tp;
            else ++fp;
        }
        points.push_back({threshold, ratio(tp, positives), ratio(tp, tp + fp)});
    }
    return points;
}

double pr_auc(std::span<const double> scores, std::span<const int> labels) {
    double area = 0.0, prev_recall = 0.0;
    for (const auto& pt : pr_curve(scores, labels)) {
        area += (pt.recall - prev_recall) * pt.precision;
        prev_recall = pt.recall;
    }
    return area;
}

EvalReport evaluate(std::span<const double> scores, std::span<const int> labels, double threshold) {
    check_lengths(scores.size(), labels.size());
    std::vector<int> preds(scores.size());
    std::transform(scores.begin(), scores.end(), preds.begin(), [&](double s) { return s >= threshold ? 1 : 0; });
    EvalReport r;
    r.confusion = confusion(preds, labels);
    auto m = metrics(r.confusion);
    r.accuracy = m.accuracy;
    r.precision = m.precision;
    r.recall = m.recall;
    r.f1 = m.f1;
    if (std::count(labels.begin(), labels.end(), 1) == 0) {
        r.context["pr_auc_note"] = "no positive labels; pr_auc reported as 0";
        return r;
    }
    r.pr_points = pr_curve(scores, labels);
    r.pr_auc = pr_auc(scores, labels);
    return r;
}

nlohmann::ordered_json report_to_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["confusion"] = {{"tp", r.confusion.tp}, {"fp", r.confusion.fp}, {"fn", r.confusion.fn}, {"tn", r.confusion.tn}};
    j["accuracy"] = r.accuracy;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["f1"] = r.f1;
    j["pr_auc"] = r.pr_auc;
    auto points = nlohmann::ordered_json::array();
    for (const auto& p : r.pr_points)
        points.push_back({{"threshold", p.threshold}, {"recall", p.recall}, {"precision", p.precision}});
    j["pr_points"] = std::move(points);
    j["context"] = r.context;
    return j;
}

EvalReport report_from_json(const nlohmann::json& j) {
    EvalReport r;
    try {
        const auto& cm = j.at("confusion");
        r.confusion = {cm.at("tp").get<long>(), cm.at("fp").get<long>(), cm.at("fn").get<long>(),
                       cm.at("tn").get<long>()};
        r.accuracy = j.at("accuracy").get<double>();
        r.precision = j.at("precision").get<double>();
        r.recall = j.at("recall").get<double>();
        r.f1 = j.at("f1").get<double>();
        r.pr_auc = j.at("pr_auc").get<double>();
        for (const auto& p : j.at("pr_points"))
            r.pr_points.push_back(
                {p.at("threshold").get<double>(), p.at("recall").get<double>(), p.at("precision").get<double>()});
        if (j.contains("context")) r.context = j.at("context");
    } catch (const nlohmann::json::exception& e) {
        throw CorruptFile(std::string("report: ") + e.what());
    }
    return r;
}

void write_report(const EvalReport& report, const std::filesystem::path& json_path,
                  const std::filesystem::path& csv_path) {
    write_json(json_path, report_to_json(report));
    std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
    if (!csv) throw IoError("cannot write " + csv_path.string());
    csv << "threshold,recall,precision\n";
    for (const auto& p : report.pr_points)
        csv << shortest(p.threshold) << ',' << shortest(p.recall) << ',' << shortest(p.precision) << '\n';
    if (!csv) throw IoError("short write to " + csv_path.string());
}

}  // namespace jitdp
