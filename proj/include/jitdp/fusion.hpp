#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "jitdp/dataset.hpp"
#include "jitdp/error.hpp"
#include "jitdp/types.hpp"

namespace jitdp {

enum class CombineMethod { unimodal_concat, attention_sum, gating_sum };

/// Which modalities reach the combining module; the others are zeroed.
/// Used for single-modality ablations.
enum class InputMask { all, text_only, tabular_only };

std::string_view to_string(CombineMethod method);
std::string_view to_string(InputMask mask);
/// Accepts the canonical names and the short CLI forms concat/attention/gating.
CombineMethod combine_method_from_string(std::string_view text);
InputMask input_mask_from_string(std::string_view text);

struct FusionHyper {
    int d = 64;        // common projection width
    int hidden = 32;   // head layer width
    int depth = 1;     // number of hidden head layers
    double beta = 1.0; // gate scale
    double lr = 1e-3;
    int epochs = 50;
    int batch = 32;
    std::uint64_t seed = 0;
    double threshold = 0.5;
};

struct FusionConfig {
    CombineMethod method = CombineMethod::gating_sum;
    InputMask mask = InputMask::all;
    int text_dim = 256;
    FusionHyper hyper;
};

/// Shape and initialisation fan of one parameter tensor.
struct TensorSpec {
    std::string name;
    int rows = 0;
    int cols = 0;
    bool bias = false;
};

/// Parameter tensors, in canonical order, for a configuration.
std::vector<TensorSpec> parameter_layout(const FusionConfig& config);

/// Width of the fused representation m.
int fused_dim(const FusionConfig& config);

template <typename Scalar>
struct BasicFusionModel {
    FusionConfig config;
    std::vector<TensorSpec> specs;
    std::vector<Matrix<Scalar>> tensors;

    /// Throws std::out_of_range for a tensor the method does not use.
    Matrix<Scalar>& tensor(std::string_view name) { return tensors[index_of(name)]; }
    const Matrix<Scalar>& tensor(std::string_view name) const { return tensors[index_of(name)]; }

    std::size_t index_of(std::string_view name) const {
        for (std::size_t i = 0; i < specs.size(); ++i)
            if (specs[i].name == name) return i;
        throw std::out_of_range("no parameter tensor named " + std::string(name));
    }
};

using FusionModel = BasicFusionModel<double>;

/// Zero-initialised model with the configuration's layout.
template <typename Scalar>
BasicFusionModel<Scalar> zero_model(const FusionConfig& config) {
    BasicFusionModel<Scalar> model;
    model.config = config;
    model.specs = parameter_layout(config);
    for (const auto& s : model.specs) model.tensors.push_back(Matrix<Scalar>::Zero(s.rows, s.cols));
    return model;
}

/// Weights uniform in (-s, s) with s = sqrt(6 / (fan_in + fan_out)) drawn
/// from the configured seed; biases zero.
template <typename Scalar>
BasicFusionModel<Scalar> init_model(const FusionConfig& config) {
    auto model = zero_model<Scalar>(config);
    std::mt19937_64 rng(config.hyper.seed);
    for (std::size_t i = 0; i < model.specs.size(); ++i) {
        const auto& s = model.specs[i];
        if (s.bias) continue;
        const double bound = std::sqrt(6.0 / (s.rows + s.cols));
        auto& w = model.tensors[i];
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) {
                double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
                w(r, c) = static_cast<Scalar>((2.0 * u - 1.0) * bound);
            }
    }
    return model;
}

/// The same parameters in another scalar type.
template <typename To, typename From>
BasicFusionModel<To> cast_model(const BasicFusionModel<From>& model) {
    BasicFusionModel<To> out;
    out.config = model.config;
    out.specs = model.specs;
    for (const auto& t : model.tensors) out.tensors.push_back(t.template cast<To>());
    return out;
}

/// Intermediate values of one forward pass, kept for backpropagation.
template <typename Scalar>
struct ForwardCache {
    Vector<Scalar> t, c, n;
    // attention_sum
    Vector<Scalar> k[3];
    Vector<Scalar> q;
    Vector<Scalar> attn;
    // gating_sum
    Vector<Scalar> t_proj, u_c, u_n, v_c, v_n, h;
    Scalar alpha = 0, t_norm = 0, h_norm = 0;
    bool alpha_clamped = false;
    // head
    Vector<Scalar> m;
    std::vector<Vector<Scalar>> pre, act;
    Scalar logit = 0;
    Scalar p = 0;
};

namespace detail {

template <typename Scalar>
Scalar sigmoid(Scalar x) {
    if (x >= 0) return Scalar(1) / (Scalar(1) + std::exp(-x));
    Scalar e = std::exp(x);
    return e / (Scalar(1) + e);
}

// -[y log p + (1-y) log(1-p)] written in terms of the logit.
template <typename Scalar>
Scalar bce_from_logit(Scalar logit, int label) {
    return std::max(logit, Scalar(0)) - logit * Scalar(label) + std::log1p(std::exp(-std::abs(logit)));
}

template <typename Scalar>
void check_dims(const BasicFusionModel<Scalar>& model, Eigen::Index t, Eigen::Index c, Eigen::Index n) {
    if (t != model.config.text_dim || c != kCategoricalDim || n != kNumericalDim)
        throw DimMismatch("model expects text/cat/num widths " + std::to_string(model.config.text_dim) + "/" +
                          std::to_string(kCategoricalDim) + "/" + std::to_string(kNumericalDim) + ", got " +
                          std::to_string(t) + "/" + std::to_string(c) + "/" + std::to_string(n));
}

template <typename Scalar, typename T, typename C, typename N>
void load_inputs(const BasicFusionModel<Scalar>& model, const T& text, const C& cat, const N& num,
                 ForwardCache<Scalar>& cache) {
    check_dims(model, text.size(), cat.size(), num.size());
    const auto mask = model.config.mask;
    if (mask == InputMask::tabular_only) cache.t = Vector<Scalar>::Zero(text.size());
    else cache.t = text.template cast<Scalar>();
    if (mask == InputMask::text_only) {
        cache.c = Vector<Scalar>::Zero(cat.size());
        cache.n = Vector<Scalar>::Zero(num.size());
    } else {
        cache.c = cat.template cast<Scalar>();
        cache.n = num.template cast<Scalar>();
    }
}

template <typename Scalar>
void combine_cached(const BasicFusionModel<Scalar>& model, ForwardCache<Scalar>& cache) {
    const auto& cfg = model.config;
    switch (cfg.method) {
        case CombineMethod::unimodal_concat: {
            cache.m.resize(cache.t.size() + cache.c.size() + cache.n.size());
            cache.m << cache.t, cache.c, cache.n;
            return;
        }
        case CombineMethod::attention_sum: {
            const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(cfg.hyper.d));
            cache.k[0].noalias() = model.tensor("W_t") * cache.t;
            cache.k[1].noalias() = model.tensor("W_c") * cache.c;
            cache.k[2].noalias() = model.tensor("W_n") * cache.n;
            cache.q.noalias() = model.tensor("W_q") * cache.t;
            Vector<Scalar> scores(3);
            for (int i = 0; i < 3; ++i) scores(i) = cache.q.dot(cache.k[i]) * scale;
            cache.attn = (scores.array() - scores.maxCoeff()).exp().matrix();
            cache.attn /= cache.attn.sum();
            cache.m = cache.attn(0) * cache.k[0] + cache.attn(1) * cache.k[1] + cache.attn(2) * cache.k[2];
            return;
        }
        case CombineMethod::gating_sum: {
            const auto& wgc = model.tensor("W_gc");
            const auto& wgn = model.tensor("W_gn");
            const Eigen::Index td = cache.t.size();
            cache.t_proj.noalias() = model.tensor("W_t") * cache.t;
            // W_g[t; x] split into its text and modality column blocks
            cache.u_c.noalias() = wgc.leftCols(td) * cache.t;
            cache.u_c.noalias() += wgc.rightCols(kCategoricalDim) * cache.c;
            cache.u_c += model.tensor("b_gc");
            cache.u_n.noalias() = wgn.leftCols(td) * cache.t;
            cache.u_n.noalias() += wgn.rightCols(kNumericalDim) * cache.n;
            cache.u_n += model.tensor("b_gn");
            cache.v_c.noalias() = model.tensor("W_c") * cache.c;
            cache.v_n.noalias() = model.tensor("W_n") * cache.n;
            cache.h = cache.u_c.cwiseMax(Scalar(0)).cwiseProduct(cache.v_c) +
                      cache.u_n.cwiseMax(Scalar(0)).cwiseProduct(cache.v_n);
            cache.t_norm = cache.t_proj.norm();
            cache.h_norm = cache.h.norm();
            if (cache.h_norm == Scalar(0)) {
                cache.alpha = 0;
                cache.alpha_clamped = true;
            } else {
                Scalar ratio = static_cast<Scalar>(cfg.hyper.beta) * cache.t_norm / cache.h_norm;
                cache.alpha_clamped = ratio >= Scalar(1);
                cache.alpha = std::min(ratio, Scalar(1));
            }
            cache.m = cache.t_proj + cache.alpha * cache.h;
            return;
        }
    }
}

template <typename Scalar>
void head_forward(const BasicFusionModel<Scalar>& model, ForwardCache<Scalar>& cache) {
    const int depth = model.config.hyper.depth;
    cache.pre.resize(depth);
    cache.act.resize(depth);
    const Vector<Scalar>* input = &cache.m;
    for (int l = 0; l < depth; ++l) {
        const std::string idx = std::to_string(l + 1);
        cache.pre[l].noalias() = model.tensor("W" + idx) * *input;
        cache.pre[l] += model.tensor("b" + idx);
        cache.act[l] = cache.pre[l].cwiseMax(Scalar(0));
        input = &cache.act[l];
    }
    const std::string out = std::to_string(depth + 1);
    cache.logit = model.tensor("w" + out).col(0).dot(*input) + model.tensor("b" + out)(0, 0);
    cache.p = sigmoid(cache.logit);
}

}  // namespace detail

/// The fused representation m for one instance.
template <typename Scalar, typename T, typename C, typename N>
Vector<Scalar> combine(const BasicFusionModel<Scalar>& model, const T& text, const C& cat, const N& num) {
    ForwardCache<Scalar> cache;
    detail::load_inputs(model, text, cat, num, cache);
    detail::combine_cached(model, cache);
    return cache.m;
}

template <typename Scalar, typename T, typename C, typename N>
ForwardCache<Scalar> forward(const BasicFusionModel<Scalar>& model, const T& text, const C& cat, const N& num) {
    ForwardCache<Scalar> cache;
    detail::load_inputs(model, text, cat, num, cache);
    detail::combine_cached(model, cache);
    detail::head_forward(model, cache);
    return cache;
}

/// Probability that the change is defect-inducing.
template <typename Scalar>
Scalar predict(const BasicFusionModel<Scalar>& model, const LabeledInstance& inst) {
    return forward(model, inst.text.values, inst.cat, inst.num).p;
}

template <typename Scalar>
int classify(const BasicFusionModel<Scalar>& model, Scalar p) {
    return p >= static_cast<Scalar>(model.config.hyper.threshold) ? 1 : 0;
}

/// Accumulates d(loss)/d(parameters) of one instance, scaled by `weight`,
/// into `grads` (laid out like `model.tensors`).
template <typename Scalar>
void backward(const BasicFusionModel<Scalar>& model, const ForwardCache<Scalar>& cache, int label, Scalar weight,
              std::vector<Matrix<Scalar>>& grads) {
    auto grad = [&](std::string_view name) -> Matrix<Scalar>& { return grads[model.index_of(name)]; };
    const auto& cfg = model.config;
    const int depth = cfg.hyper.depth;

    Scalar d_logit = (cache.p - Scalar(label)) * weight;
    const std::string out = std::to_string(depth + 1);
    const Vector<Scalar>& last = depth > 0 ? cache.act[depth - 1] : cache.m;
    grad("w" + out).col(0) += d_logit * last;
    grad("b" + out)(0, 0) += d_logit;
    Vector<Scalar> d_input = d_logit * model.tensor("w" + out).col(0);
    for (int l = depth - 1; l >= 0; --l) {
        const std::string idx = std::to_string(l + 1);
        Vector<Scalar> dz = d_input.cwiseProduct((cache.pre[l].array() > Scalar(0)).template cast<Scalar>().matrix());
        const Vector<Scalar>& in = l > 0 ? cache.act[l - 1] : cache.m;
        grad("W" + idx).noalias() += dz * in.transpose();
        grad("b" + idx) += dz;
        d_input.noalias() = model.tensor("W" + idx).transpose() * dz;
    }
    const Vector<Scalar>& dm = d_input;

    switch (cfg.method) {
        case CombineMethod::unimodal_concat:
            return;
        case CombineMethod::attention_sum: {
            const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(cfg.hyper.d));
            Vector<Scalar> dk[3];
            Vector<Scalar> d_attn(3);
            for (int i = 0; i < 3; ++i) {
                dk[i] = cache.attn(i) * dm;
                d_attn(i) = dm.dot(cache.k[i]);
            }
            const Scalar mean = cache.attn.dot(d_attn);
            Vector<Scalar> dq = Vector<Scalar>::Zero(cache.q.size());
            for (int i = 0; i < 3; ++i) {
                Scalar ds = cache.attn(i) * (d_attn(i) - mean) * scale;
                dq += ds * cache.k[i];
                dk[i] += ds * cache.q;
            }
            grad("W_t").noalias() += dk[0] * cache.t.transpose();
            grad("W_c").noalias() += dk[1] * cache.c.transpose();
            grad("W_n").noalias() += dk[2] * cache.n.transpose();
            grad("W_q").noalias() += dq * cache.t.transpose();
            return;
        }
        case CombineMethod::gating_sum: {
            Vector<Scalar> d_tproj = dm;
            Vector<Scalar> dh = cache.alpha * dm;
            if (!cache.alpha_clamped) {
                // alpha = beta |t'| / |h| on the unclamped branch
                const Scalar d_alpha = dm.dot(cache.h);
                const Scalar beta = static_cast<Scalar>(cfg.hyper.beta);
                if (cache.t_norm > Scalar(0))
                    d_tproj += d_alpha * beta / (cache.t_norm * cache.h_norm) * cache.t_proj;
                dh -= d_alpha * beta * cache.t_norm / (cache.h_norm * cache.h_norm * cache.h_norm) * cache.h;
            }
            grad("W_t").noalias() += d_tproj * cache.t.transpose();

            auto gate_branch = [&](const Vector<Scalar>& u, const Vector<Scalar>& v, const Vector<Scalar>& x,
                                   std::string_view w_name, std::string_view wg_name, std::string_view bg_name) {
                Vector<Scalar> g = u.cwiseMax(Scalar(0));
                grad(w_name).noalias() += dh.cwiseProduct(g) * x.transpose();
                Vector<Scalar> du =
                    dh.cwiseProduct(v).cwiseProduct((u.array() > Scalar(0)).template cast<Scalar>().matrix());
                auto& wg = grad(wg_name);
                const Eigen::Index td = cache.t.size();
                wg.leftCols(td).noalias() += du * cache.t.transpose();
                wg.rightCols(x.size()).noalias() += du * x.transpose();
                grad(bg_name) += du;
            };
            gate_branch(cache.u_c, cache.v_c, cache.c, "W_c", "W_gc", "b_gc");
            gate_branch(cache.u_n, cache.v_n, cache.n, "W_n", "W_gn", "b_gn");
            return;
        }
    }
}

template <typename Scalar>
std::vector<Matrix<Scalar>> zero_gradients(const BasicFusionModel<Scalar>& model) {
    std::vector<Matrix<Scalar>> grads;
    grads.reserve(model.tensors.size());
    for (const auto& t : model.tensors) grads.push_back(Matrix<Scalar>::Zero(t.rows(), t.cols()));
    return grads;
}

/// Mean binary cross-entropy over `batch`.
template <typename Scalar>
Scalar mean_loss(const BasicFusionModel<Scalar>& model, std::span<const LabeledInstance> batch) {
    Scalar total = 0;
    for (const auto& inst : batch) {
        auto cache = forward(model, inst.text.values, inst.cat, inst.num);
        total += detail::bce_from_logit(cache.logit, inst.label);
    }
    return batch.empty() ? Scalar(0) : total / static_cast<Scalar>(batch.size());
}

/// Mean loss over `batch` and its exact gradient.
template <typename Scalar>
Scalar loss_and_gradient(const BasicFusionModel<Scalar>& model, std::span<const LabeledInstance> batch,
                         std::vector<Matrix<Scalar>>& grads) {
    grads = zero_gradients(model);
    if (batch.empty()) return Scalar(0);
    const Scalar weight = Scalar(1) / static_cast<Scalar>(batch.size());
    Scalar total = 0;
    for (const auto& inst : batch) {
        auto cache = forward(model, inst.text.values, inst.cat, inst.num);
        total += detail::bce_from_logit(cache.logit, inst.label);
        backward(model, cache, inst.label, weight, grads);
    }
    return total * weight;
}

template <typename Scalar>
struct TrainReport {
    std::vector<double> train_loss;  // full training-set loss after each epoch
    std::vector<double> val_f1;
    std::vector<double> val_loss;
    int best_epoch = 0;              // 1-based; 0 when no epoch ran
    BasicFusionModel<Scalar> model;  // parameters of the best epoch
};

/// F1 of thresholded predictions, 0/0 treated as 0.
template <typename Scalar>
double f1_score(const BasicFusionModel<Scalar>& model, std::span<const LabeledInstance> data) {
    long tp = 0, fp = 0, fn = 0;
    for (const auto& inst : data) {
        int pred = classify(model, predict(model, inst));
        tp += pred == 1 && inst.label == 1;
        fp += pred == 1 && inst.label == 0;
        fn += pred == 0 && inst.label == 1;
    }
    return tp == 0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn);
}

/// Mini-batch Adam on mean binary cross-entropy. Returns the parameters of
/// the epoch with the best validation F1; ties go to the lower validation
/// loss, then to the earlier epoch.
template <typename Scalar>
TrainReport<Scalar> train(BasicFusionModel<Scalar> model, std::span<const LabeledInstance> train_set,
                          std::span<const LabeledInstance> val_set) {
    if (train_set.empty() || val_set.empty()) throw std::invalid_argument("train: empty split");
    const auto& hp = model.config.hyper;
    if (hp.batch < 1 || hp.epochs < 0) throw ConfigError("train: batch must be >= 1 and epochs >= 0");
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;

    auto first_moment = zero_gradients(model);
    auto second_moment = zero_gradients(model);
    std::vector<Matrix<Scalar>> grads;
    std::vector<LabeledInstance> batch;
    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    TrainReport<Scalar> report;
    report.model = model;
    double best_f1 = -1.0, best_loss = 0.0;
    long step = 0;
    for (int epoch = 1; epoch <= hp.epochs; ++epoch) {
        std::mt19937_64 rng(hp.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(epoch));
        for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[uniform_below(rng, i + 1)]);

        for (std::size_t start = 0; start < order.size(); start += hp.batch) {
            std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(hp.batch));
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(train_set[order[i]]);
            Scalar loss = loss_and_gradient<Scalar>(model, batch, grads);
            if (!std::isfinite(static_cast<double>(loss)))
                throw NonFiniteLoss("non-finite training loss at epoch " + std::to_string(epoch));
            ++step;
            const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
            for (std::size_t k = 0; k < model.tensors.size(); ++k) {
                first_moment[k] = Scalar(kBeta1) * first_moment[k] + Scalar(1 - kBeta1) * grads[k];
                second_moment[k] =
                    Scalar(kBeta2) * second_moment[k] + Scalar(1 - kBeta2) * grads[k].cwiseProduct(grads[k]);
                model.tensors[k].array() -=
                    Scalar(hp.lr) * (first_moment[k].array() / Scalar(c1)) /
                    ((second_moment[k].array() / Scalar(c2)).sqrt() + Scalar(kEps));
            }
        }

        double epoch_loss = static_cast<double>(mean_loss(model, train_set));
        if (!std::isfinite(epoch_loss))
            throw NonFiniteLoss("non-finite training loss at epoch " + std::to_string(epoch));
        double f1 = f1_score(model, val_set);
        double val_loss = static_cast<double>(mean_loss(model, val_set));
        report.train_loss.push_back(epoch_loss);
        report.val_f1.push_back(f1);
        report.val_loss.push_back(val_loss);
        if (f1 > best_f1 || (f1 == best_f1 && val_loss < best_loss)) {
            best_f1 = f1;
            best_loss = val_loss;
            report.best_epoch = epoch;
            report.model = model;
        }
    }
    return report;
}

inline constexpr int kModelFormatVersion = 1;

/// JSON header {format_version, combine_method, input_mask, dims,
/// hyperparameters} followed by named row-major parameter arrays.
nlohmann::ordered_json model_to_json(const FusionModel& model);
FusionModel model_from_json(const nlohmann::json& j);

void save_model(const FusionModel& model, const std::filesystem::path& path);
/// Throws CorruptFile for unparsable or inconsistent files and
/// VersionMismatch for an unknown format_version.
FusionModel load_model(const std::filesystem::path& path);

}  // namespace jitdp
