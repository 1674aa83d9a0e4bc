#include "jitdp/fusion.hpp"

#include "jitdp/jsonl.hpp"

namespace jitdp {

std::string_view to_string(CombineMethod method) {
    switch (method) {
        case CombineMethod::unimodal_concat: return "unimodal_concat";
        case CombineMethod::attention_sum: return "attention_sum";
        case CombineMethod::gating_sum: return "gating_sum";
    }
    return "unimodal_concat";
}

std::string_view to_string(InputMask mask) {
    switch (mask) {
        case InputMask::all: return "all";
        case InputMask::text_only: return "text_only";
        case InputMask::tabular_only: return "tabular_only";
    }
    return "all";
}

CombineMethod combine_method_from_string(std::string_view text) {
    if (text == "unimodal_concat" || text == "concat") return CombineMethod::unimodal_concat;
    if (text == "attention_sum" || text == "attention") return CombineMethod::attention_sum;
    if (text == "gating_sum" || text == "gating") return CombineMethod::gating_sum;
    throw ConfigError("unknown combine method '" + std::string(text) + "'");
}

InputMask input_mask_from_string(std::string_view text) {
    if (text == "all") return InputMask::all;
    if (text == "text_only" || text == "text") return InputMask::text_only;
    if (text == "tabular_only" || text == "tabular") return InputMask::tabular_only;
    throw ConfigError("unknown input mask '" + std::string(text) + "'");
}

int fused_dim(const FusionConfig& config) {
    if (config.method == CombineMethod::unimodal_concat)
        return config.text_dim + kCategoricalDim + kNumericalDim;
    return config.hyper.d;
}

std::vector<TensorSpec> parameter_layout(const FusionConfig& config) {
    const auto& hp = config.hyper;
    if (config.text_dim < 1 || hp.d < 1 || hp.hidden < 1 || hp.depth < 0)
        throw ConfigError("model dimensions must be positive");
    const int t = config.text_dim, d = hp.d;
    std::vector<TensorSpec> specs;
    switch (config.method) {
        case CombineMethod::unimodal_concat:
            break;
        case CombineMethod::attention_sum:
            specs = {{"W_t", d, t}, {"W_c", d, kCategoricalDim}, {"W_n", d, kNumericalDim}, {"W_q", d, t}};
            break;
        case CombineMethod::gating_sum:
            specs = {{"W_t", d, t},
                     {"W_c", d, kCategoricalDim},
                     {"W_n", d, kNumericalDim},
                     {"W_gc", d, t + kCategoricalDim},
                     {"b_gc", d, 1, true},
                     {"W_gn", d, t + kNumericalDim},
                     {"b_gn", d, 1, true}};
            break;
    }
    int in = fused_dim(config);
    for (int l = 1; l <= hp.depth; ++l) {
        specs.push_back({"W" + std::to_string(l), hp.hidden, in});
        specs.push_back({"b" + std::to_string(l), hp.hidden, 1, true});
        in = hp.hidden;
    }
    const std::string out = std::to_string(hp.depth + 1);
    specs.push_back({"w" + out, in, 1});
    specs.push_back({"b" + out, 1, 1, true});
    return specs;
}

nlohmann::ordered_json model_to_json(const FusionModel& model) {
    const auto& cfg = model.config;
    nlohmann::ordered_json j;
    j["format_version"] = kModelFormatVersion;
    j["combine_method"] = std::string(to_string(cfg.method));
    j["input_mask"] = std::string(to_string(cfg.mask));
    j["dims"] = {{"text", cfg.text_dim},
                 {"categorical", kCategoricalDim},
                 {"numerical", kNumericalDim},
                 {"d", cfg.hyper.d},
                 {"hidden", cfg.hyper.hidden},
                 {"depth", cfg.hyper.depth}};
    j["hyperparameters"] = {{"beta", cfg.hyper.beta},
                            {"lr", cfg.hyper.lr},
                            {"epochs", cfg.hyper.epochs},
                            {"batch", cfg.hyper.batch},
                            {"seed", cfg.hyper.seed},
                            {"threshold", cfg.hyper.threshold}};
    auto params = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < model.specs.size(); ++i) {
        const auto& w = model.tensors[i];
        std::vector<double> flat;
        flat.reserve(static_cast<std::size_t>(w.size()));
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) flat.push_back(w(r, c));
        params[model.specs[i].name] = {{"shape", {w.rows(), w.cols()}}, {"data", std::move(flat)}};
    }
    j["parameters"] = std::move(params);
    return j;
}

FusionModel model_from_json(const nlohmann::json& j) {
    try {
        if (!j.is_object() || !j.contains("format_version")) throw CorruptFile("model file lacks format_version");
        int version = j.at("format_version").get<int>();
        if (version != kModelFormatVersion)
            throw VersionMismatch("model format_version " + std::to_string(version) + ", this build reads " +
                                  std::to_string(kModelFormatVersion));
        FusionConfig cfg;
        cfg.method = combine_method_from_string(j.at("combine_method").get<std::string>());
        cfg.mask = input_mask_from_string(j.at("input_mask").get<std::string>());
        const auto& dims = j.at("dims");
        cfg.text_dim = dims.at("text").get<int>();
        if (dims.at("categorical").get<int>() != kCategoricalDim || dims.at("numerical").get<int>() != kNumericalDim)
            throw CorruptFile("model categorical/numerical widths differ from this build");
        cfg.hyper.d = dims.at("d").get<int>();
        cfg.hyper.hidden = dims.at("hidden").get<int>();
        cfg.hyper.depth = dims.at("depth").get<int>();
        const auto& hp = j.at("hyperparameters");
        cfg.hyper.beta = hp.at("beta").get<double>();
        cfg.hyper.lr = hp.at("lr").get<double>();
        cfg.hyper.epochs = hp.at("epochs").get<int>();
        cfg.hyper.batch = hp.at("batch").get<int>();
        cfg.hyper.seed = hp.at("seed").get<std::uint64_t>();
        cfg.hyper.threshold = hp.at("threshold").get<double>();

        auto model = zero_model<double>(cfg);
        const auto& params = j.at("parameters");
        if (params.size() != model.specs.size()) throw CorruptFile("model has an unexpected set of tensors");
        for (std::size_t i = 0; i < model.specs.size(); ++i) {
            const auto& spec = model.specs[i];
            const auto& entry = params.at(spec.name);
            auto shape = entry.at("shape").get<std::vector<int>>();
            auto data = entry.at("data").get<std::vector<double>>();
            if (shape != std::vector<int>{spec.rows, spec.cols} ||
                data.size() != static_cast<std::size_t>(spec.rows) * spec.cols)
                throw CorruptFile("tensor " + spec.name + " has the wrong shape");
            auto& w = model.tensors[i];
            std::size_t k = 0;
            for (Eigen::Index r = 0; r < w.rows(); ++r)
                for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = data[k++];
            if (!w.allFinite()) throw CorruptFile("tensor " + spec.name + " has non-finite values");
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw CorruptFile(std::string("model file: ") + e.what());
    } catch (const ConfigError& e) {
        throw CorruptFile(std::string("model file: ") + e.what());
    }
}

void save_model(const FusionModel& model, const std::filesystem::path& path) { write_json(path, model_to_json(model)); }

FusionModel load_model(const std::filesystem::path& path) { return model_from_json(read_json(path)); }

}  // namespace jitdp
