#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/cfg/helpers.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "jitdp/error.hpp"
#include "jitdp/pipeline.hpp"

namespace {

struct Flags {
    std::string config;
    std::string repo;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::string ratios;
    std::string combine;
    std::string text;
    std::string embeddings;
    std::optional<int> jobs;
};

std::string keys_footer(const std::string& stage) {
    std::string text = "Config keys read by this stage:";
    for (const auto& k : jitdp::stage_config_keys(stage)) text += "\n  " + k;
    return text;
}

jitdp::PipelineConfig build_config(const Flags& flags) {
    std::map<std::string, std::string> settings;
    if (!flags.config.empty()) settings = jitdp::read_config_file(flags.config);
    if (!flags.repo.empty()) settings["repo.path"] = flags.repo;
    if (!flags.out.empty()) settings["output.dir"] = flags.out;
    if (flags.seed) {
        settings["split.seed"] = std::to_string(*flags.seed);
        settings["model.seed"] = std::to_string(*flags.seed);
    }
    if (!flags.ratios.empty()) settings["split.ratios"] = flags.ratios;
    if (!flags.combine.empty()) settings["model.combine"] = flags.combine;
    if (!flags.text.empty()) settings["text.source"] = flags.text;
    if (!flags.embeddings.empty()) settings["text.embeddings"] = flags.embeddings;
    if (flags.jobs) settings["run.jobs"] = std::to_string(*flags.jobs);
    jitdp::PipelineConfig config;
    jitdp::apply_settings(config, settings);
    return config;
}

void report_error(const std::string& code, const std::string& message, const std::string& stage) {
    nlohmann::json j{{"error", code}, {"message", message}, {"stage", stage}};
    std::cerr << j.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    auto logger = spdlog::stderr_color_mt("jitdp");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* level = std::getenv("JITDP_LOG")) spdlog::cfg::helpers::load_levels(level);

    CLI::App app{"Just-in-time defect prediction: mining, SZZ labelling, multimodal training and evaluation"};
    app.require_subcommand(1);
    Flags flags;
    app.add_option("--config", flags.config, "INI-style config file ([section] key = value)")->check(CLI::ExistingFile);
    app.add_option("--repo", flags.repo, "Path to the git repository to analyse");
    app.add_option("--out", flags.out, "Output directory for artifacts (default jitdp-out)");
    app.add_option("--seed", flags.seed, "Seed for the split and model initialisation");
    app.add_option("--ratios", flags.ratios, "Train:val:test ratios, e.g. 8:1:1");
    app.add_option("--combine", flags.combine, "Combine method")
        ->check(CLI::IsMember({"concat", "attention", "gating"}));
    app.add_option("--text", flags.text, "Text representation")->check(CLI::IsMember({"hash", "embeddings"}));
    app.add_option("--embeddings", flags.embeddings, "JSONL file of precomputed commit-message embeddings");
    app.add_option("--jobs", flags.jobs, "Parallel SZZ workers")->check(CLI::PositiveNumber);
    app.footer("Logging: set JITDP_LOG to trace, debug, info, warn (default), error or off.");

    const std::vector<std::pair<std::string, std::string>> stages = {
        {"mine", "Extract commit records and change metrics"},
        {"label", "Trace fixes back to defect-inducing commits"},
        {"featurize", "Build the labelled, standardised dataset"},
        {"split", "Partition the dataset into train/val/test"},
        {"train", "Train the fusion classifier"},
        {"evaluate", "Score the test split and write the report"},
        {"all", "Run every stage in order"},
    };
    for (const auto& [name, help] : stages) {
        auto* sub = app.add_subcommand(name, help);
        sub->fallthrough();
        sub->footer(keys_footer(name));
    }

    std::string stage = "cli";
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        stage = app.get_subcommands().front()->get_name();
        auto config = build_config(flags);
        if (stage == "mine") jitdp::run_mine(config);
        else if (stage == "label") jitdp::run_label(config);
        else if (stage == "featurize") jitdp::run_featurize(config);
        else if (stage == "split") jitdp::run_split(config);
        else if (stage == "train") jitdp::run_train(config);
        else if (stage == "evaluate") jitdp::run_evaluate(config);
        else jitdp::run_all(config);
    } catch (const jitdp::Error& e) {
        report_error(e.code(), e.what(), stage);
        return 1;
    } catch (const std::exception& e) {
        report_error("InternalError", e.what(), stage);
        return 2;
    }
    return 0;
}
