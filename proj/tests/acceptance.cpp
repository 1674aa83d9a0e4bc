// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "jitdp/error.hpp"
#include "jitdp/eval.hpp"
#include "jitdp/pipeline.hpp"
#include "repo_builder.hpp"
#include "synthetic_corpus.hpp"

using namespace jitdp;
using namespace jitdp::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---- 1. metrics against brute force --------------------------------------

double oracle_ratio(long num, long den) { return den == 0 ? 0.0 : double(num) / double(den); }

Outcome metric_oracle() {
    double worst = 0.0;
    int cases = 0, failures = 0;
    for (long tp = 0; tp <= 5; ++tp)
        for (long fp = 0; fp <= 5; ++fp)
            for (long fn = 0; fn <= 5; ++fn)
                for (long tn = 0; tn <= 5; ++tn) {
                    ++cases;
                    // Expand to explicit prediction/label pairs and count them back.
                    std::vector<int> preds, labels;
                    auto push = [&](long n, int p, int l) {
                        for (long i = 0; i < n; ++i) preds.push_back(p), labels.push_back(l);
                    };
                    push(tp, 1, 1), push(fp, 1, 0), push(fn, 0, 1), push(tn, 0, 0);
                    if (preds.empty()) {
                        try {
                            metrics({0, 0, 0, 0});
                            ++failures;
                        } catch (const EmptyMatrix&) {
                        }
                        continue;
                    }
                    long hit = 0, pred_pos = 0, actual_pos = 0, correct = 0;
                    for (std::size_t i = 0; i < preds.size(); ++i) {
                        hit += preds[i] == 1 && labels[i] == 1;
                        pred_pos += preds[i] == 1;
                        actual_pos += labels[i] == 1;
                        correct += preds[i] == labels[i];
                    }
                    double p = oracle_ratio(hit, pred_pos);
                    double r = oracle_ratio(hit, actual_pos);
                    double f = p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
                    double a = oracle_ratio(correct, static_cast<long>(preds.size()));

                    auto cm = confusion(preds, labels);
                    if (!(cm == ConfusionMatrix{tp, fp, fn, tn})) ++failures;
                    auto m = metrics(cm);
                    for (double d : {m.precision - p, m.recall - r, m.f1 - f, m.accuracy - a})
                        worst = std::max(worst, std::abs(d));
                }
    bool ok = failures == 0 && worst <= 1e-12;
    return {ok, std::to_string(cases) + " matrices (all-zero raises EmptyMatrix), max abs err " + fmt(worst) +
                    ", mismatches " + std::to_string(failures)};
}

// ---- 2. PR-AUC against threshold enumeration -----------------------------

double oracle_ap(const std::vector<double>& scores, const std::vector<int>& labels) {
    std::set<double, std::greater<>> thresholds(scores.begin(), scores.end());
    long positives = std::count(labels.begin(), labels.end(), 1);
    double area = 0.0, prev_recall = 0.0;
    for (double t : thresholds) {
        long tp = 0, predicted = 0;
        for (std::size_t i = 0; i < scores.size(); ++i)
            if (scores[i] >= t) {
                ++predicted;
                tp += labels[i] == 1;
            }
        double recall = double(tp) / double(positives);
        double precision = double(tp) / double(predicted);
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return area;
}

Outcome pr_auc_oracle() {
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    int no_positive_cases = 0, failures = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::size_t n = 1 + rng() % 8;
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = static_cast<double>(rng() % 6) / 5.0;  // coarse grid so ties occur
            labels[i] = static_cast<int>(rng() % 2);
        }
        if (std::count(labels.begin(), labels.end(), 1) == 0) {
            ++no_positive_cases;
            try {
                pr_auc(scores, labels);
                ++failures;
            } catch (const NoPositives&) {
            }
            continue;
        }
        worst = std::max(worst, std::abs(pr_auc(scores, labels) - oracle_ap(scores, labels)));
    }
    return {failures == 0 && worst <= 1e-9, "1000 instances (" + std::to_string(no_positive_cases) +
                                                 " without positives raise NoPositives), max abs err " + fmt(worst)};
}

// ---- 3. gradient check ----------------------------------------------------

Outcome gradient_checks() {
    double worst = 0.0;
    std::string where;
    for (auto method : {CombineMethod::unimodal_concat, CombineMethod::attention_sum, CombineMethod::gating_sum}) {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            FusionConfig cfg;
            cfg.method = method;
            cfg.text_dim = 16;
            cfg.hyper.d = 8;
            cfg.hyper.hidden = 8;
            cfg.hyper.seed = seed;
            auto model = init_model<double>(cfg);
            std::mt19937_64 rng(seed);
            std::normal_distribution<double> g(0.0, 0.1);
            for (std::size_t k = 0; k < model.tensors.size(); ++k)
                if (model.specs[k].bias)
                    model.tensors[k] = model.tensors[k].unaryExpr([&](double) { return g(rng); });
            auto data = random_instances(8, cfg.text_dim, 100 + seed);
            auto check = gradient_check(model, std::span<const LabeledInstance>(data), 1e-6);
            if (check.max_rel_error >= worst) {
                worst = check.max_rel_error;
                where = std::string(to_string(method)) + "/seed " + std::to_string(seed) + "/" + check.worst_tensor;
            }
        }
    }
    return {worst < 1e-4, "3 methods x 5 seeds, step 1e-6, max rel err " + fmt(worst) + " (" + where + ")"};
}

// ---- 4. SZZ fixtures --------------------------------------------------------

Outcome szz_fixtures() {
    std::vector<std::string> wrong;
    int count = 0;
    for (auto make : {linear_scenario, rename_scenario, whitespace_scenario, merge_scenario}) {
        auto s = make();
        ++count;
        TempDir dir;
        s.builder.build(dir.path());
        auto commits = mine_history(dir.path());
        auto repo = git::Repository::open(dir.path());
        auto links = trace_fixes(commits, repo, {}, FixMatcher{}, 1);
        std::set<std::string> expected, got;
        for (int m : s.inducing) expected.insert(s.builder.hash(m));
        bool found = false;
        for (const auto& l : links)
            if (l.fix_hash == s.builder.hash(s.fix)) {
                got = l.inducing_hashes;
                found = true;
            }
        if (!found || got != expected || links.size() != 1) wrong.push_back(s.name);
    }
    std::string detail = std::to_string(count) + " scripted repos (linear, rename, whitespace, merge)";
    if (!wrong.empty()) {
        detail += "; wrong:";
        for (const auto& w : wrong) detail += " " + w;
    }
    return {wrong.empty(), detail};
}

// ---- 5. change metrics -----------------------------------------------------

Outcome table_metrics() {
    TempDir dir;
    auto b = metrics_fixture();
    b.build(dir.path());
    auto commits = mine_history(dir.path());
    std::map<std::string, ChangeMetrics> got;
    for (auto& [h, m] : compute_all_metrics(commits)) got[h] = m;
    int mismatches = 0;
    double worst_real = 0.0;
    auto expected = metrics_fixture_expected();
    for (const auto& [mark, want] : expected) {
        auto it = got.find(b.hash(mark));
        if (it == got.end()) {
            ++mismatches;
            continue;
        }
        const auto& m = it->second;
        bool ints = m.ns == want.ns && m.nd == want.nd && m.nf == want.nf && m.la == want.la && m.ld == want.ld &&
                    m.lt == want.lt && m.fix == want.fix && m.ndev == want.ndev && m.nuc == want.nuc &&
                    m.exp == want.exp && m.sexp == want.sexp && m.age == want.age;
        double real = std::max(std::abs(m.entropy - want.entropy), std::abs(m.rexp - want.rexp));
        worst_real = std::max(worst_real, real);
        if (!ints || real > 1e-12) ++mismatches;
    }
    bool ok = mismatches == 0 && got.size() == expected.size() && commits.size() == 6;
    return {ok, std::to_string(commits.size()) + "-commit repo, " + std::to_string(expected.size()) +
                    " source commits checked, mismatches " + std::to_string(mismatches) +
                    ", max entropy/rexp err " + fmt(worst_real)};
}

// ---- 6. split contract -----------------------------------------------------

Outcome split_contract() {
    std::mt19937_64 rng(77);
    int failures = 0, trials = 300;
    for (int trial = 0; trial < trials; ++trial) {
        std::size_t n = 10 + rng() % (10000 - 10 + 1);
        SplitSpec spec;
        spec.seed = rng();
        auto s = split(n, spec);
        std::vector<int> seen(n, 0);
        for (auto* part : {&s.train, &s.val, &s.test})
            for (auto i : *part)
                if (i < n) ++seen[i];
        bool partition = std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
        bool sizes = s.train.size() == n * 8 / 10 && s.val.size() == n / 10 &&
                     s.test.size() == n - n * 8 / 10 - n / 10;
        auto again = split(n, spec);
        bool same = again.train == s.train && again.val == s.val && again.test == s.test;
        if (!(partition && sizes && same)) ++failures;
    }
    return {failures == 0, std::to_string(trials) + " random (n, seed) pairs, n in [10, 10000], violations " +
                               std::to_string(failures)};
}

// ---- 7 and 8. end-to-end on the synthetic corpus ---------------------------

PipelineConfig corpus_config(const fs::path& repo, const fs::path& out, std::uint64_t seed) {
    PipelineConfig cfg;
    cfg.repo_path = repo;
    cfg.output_dir = out;
    cfg.split.seed = seed;
    cfg.hyper.seed = seed;
    cfg.hyper.lr = 3e-3;
    cfg.hyper.batch = 16;
    cfg.hyper.epochs = 50;
    return cfg;
}

constexpr CombineMethod kMethods[] = {CombineMethod::unimodal_concat, CombineMethod::attention_sum,
                                      CombineMethod::gating_sum};

Outcome synthetic_end_to_end(const fs::path& work) {
    auto corpus = make_corpus();
    auto repo = work / "repo";
    corpus.builder.build(repo);

    // Fixed seed: the whole pipeline per combine method.
    std::string detail = "seed 0 F1:";
    bool all_high = true;
    for (auto method : kMethods) {
        auto cfg = corpus_config(repo, work / ("all-" + std::string(to_string(method))), 0);
        cfg.combine = method;
        double f1 = run_all(cfg).f1;
        all_high = all_high && f1 >= 0.95;
        detail += " " + std::string(to_string(method)) + "=" + fmt(f1);
    }

    // Five seeds: every fused method against text-only and tabular-only.
    auto shared = corpus_config(repo, work / "seeds", 0);
    run_mine(shared);
    run_label(shared);
    std::map<CombineMethod, int> wins;
    std::string per_seed;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto cfg = corpus_config(repo, work / "seeds", seed);
        run_featurize(cfg);
        run_split(cfg);
        auto score = [&](CombineMethod method, InputMask mask) {
            cfg.combine = method;
            cfg.inputs = mask;
            run_train(cfg);
            return run_evaluate(cfg).f1;
        };
        double text_only = score(CombineMethod::unimodal_concat, InputMask::text_only);
        double tabular_only = score(CombineMethod::unimodal_concat, InputMask::tabular_only);
        per_seed += " [" + std::to_string(seed) + ": text " + fmt(text_only) + ", tab " + fmt(tabular_only) + ", fused";
        for (auto method : kMethods) {
            double fused = score(method, InputMask::all);
            per_seed += " " + fmt(fused);
            if (fused >= text_only && fused >= tabular_only) ++wins[method];
        }
        per_seed += "]";
    }
    bool ablation_ok = true;
    detail += "; fused >= both ablations on";
    for (auto method : kMethods) {
        ablation_ok = ablation_ok && wins[method] >= 4;
        detail += " " + std::string(to_string(method)) + " " + std::to_string(wins[method]) + "/5";
    }
    detail += " seeds;" + per_seed;
    return {all_high && ablation_ok, detail};
}

Outcome reproducibility(const fs::path& work) {
    auto corpus = make_corpus();
    auto repo = work / "repo";
    corpus.builder.build(repo);
    std::vector<std::string> differing;
    for (auto method : kMethods) {
        std::string files[2][2];
        for (int run = 0; run < 2; ++run) {
            auto cfg = corpus_config(repo, work / ("run" + std::to_string(run)), 7);
            cfg.combine = method;
            run_all(cfg);
            files[run][0] = slurp(cfg.output_dir / artifacts::model);
            files[run][1] = slurp(cfg.output_dir / artifacts::report);
        }
        if (files[0][0].empty() || files[0][0] != files[1][0] || files[0][1] != files[1][1])
            differing.push_back(std::string(to_string(method)));
    }
    std::string detail = "model.json and report.json compared across two seed-7 runs for 3 methods";
    for (const auto& d : differing) detail += "; differs: " + d;
    return {differing.empty(), detail};
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::off);
    struct Criterion {
        int id;
        const char* name;
        double budget_seconds;
        std::function<Outcome()> run;
    };
    TempDir work("jitdp-acceptance");
    const std::vector<Criterion> criteria = {
        {1, "metrics match brute force", 1.0, metric_oracle},
        {2, "pr_auc matches threshold enumeration", 5.0, pr_auc_oracle},
        {3, "gradients match central differences", 30.0, gradient_checks},
        {4, "SZZ fixtures yield the planted inducing sets", 10.0, szz_fixtures},
        {5, "change metrics match hand-computed values", 5.0, table_metrics},
        {6, "split contract", 60.0, split_contract},
        {7, "synthetic corpus: F1 >= 0.95 and fusion beats ablations", 60.0,
         [&] { return synthetic_end_to_end(work.path() / "c7"); }},
        {8, "fixed seed reproduces model.json and report.json", 60.0,
         [&] { return reproducibility(work.path() / "c8"); }},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        Outcome outcome;
        auto start = std::chrono::steady_clock::now();
        try {
            outcome = c.run();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        bool in_time = seconds < c.budget_seconds;
        bool pass = outcome.pass && in_time;
        failed += !pass;
        std::printf("[%s] criterion %d: %s | %s | %.2f s (limit %.0f s)%s\n", pass ? "PASS" : "FAIL", c.id, c.name,
                    outcome.detail.c_str(), seconds, c.budget_seconds, in_time ? "" : " OVER TIME");
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
