#include "hypobench/models/models.hpp"

#include <cmath>

#include "hypobench/autodiff/ops.hpp"
#include "hypobench/common/errors.hpp"

namespace hypobench::models {

using namespace ad;

std::string_view architecture_tag(Architecture a) {
    switch (a) {
        case Architecture::kBiLstm: return "bilstm";
        case Architecture::kTcn: return "tcn";
        case Architecture::kMedformer: return "medformer";
        case Architecture::kStTransformer: return "sttransformer";
    }
    return "?";
}

std::string_view architecture_name(Architecture a) {
    switch (a) {
        case Architecture::kBiLstm: return "BiLSTM";
        case Architecture::kTcn: return "TCN";
        case Architecture::kMedformer: return "Medformer";
        case Architecture::kStTransformer: return "ST-Transformer";
    }
    return "?";
}

Architecture parse_architecture(std::string_view tag) {
    for (Architecture a : kAllArchitectures) {
        if (architecture_tag(a) == tag) return a;
    }
    throw ConfigError("unknown architecture '" + std::string(tag) +
                      "' (expected bilstm, tcn, medformer or sttransformer)");
}

// --- Model base -------------------------------------------------------------------

std::vector<Tensor> Model::parameter_tensors() const {
    std::vector<Tensor> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.tensor);
    return out;
}

std::size_t Model::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.tensor.numel();
    return n;
}

Tensor Model::add_parameter(std::string name, Shape shape, double bound, Rng& rng) {
    std::vector<double> v(shape_numel(shape), 0.0);
    if (bound > 0.0) {
        for (auto& x : v) x = rng.uniform(-bound, bound);
    }
    Tensor t = Tensor::from(std::move(shape), std::move(v), true);
    params_.push_back({std::move(name), t});
    return t;
}

void Model::check_input(const Tensor& x) const {
    if (x.rank() != 3 || x.dim(1) != window_ || x.dim(2) != features_) {
        throw ShapeError(std::string(architecture_tag(architecture_)) + ": expected input [batch, " +
                         std::to_string(window_) + ", " + std::to_string(features_) + "], got " +
                         shape_str(x.shape()));
    }
}

namespace {

double fan_in_bound(std::size_t fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); }

void check_dropout(double rate, const char* who) {
    if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError(std::string(who) + ": dropout must lie in [0, 1)");
}

Tensor head_probabilities(const Tensor& features, const Tensor& w, const Tensor& b) {
    const Tensor logits = linear(features, w, b);
    return sigmoid(reshape(logits, {logits.dim(0)}));
}

EncoderLayer make_encoder_layer(const std::string& prefix, std::size_t width, std::size_t ffn, Rng& rng,
                                auto&& add) {
    const double b = fan_in_bound(width);
    EncoderLayer l;
    l.wq = add(prefix + ".wq", Shape{width, width}, b, rng);
    l.bq = add(prefix + ".bq", Shape{width}, 0.0, rng);
    l.wk = add(prefix + ".wk", Shape{width, width}, b, rng);
    l.bk = add(prefix + ".bk", Shape{width}, 0.0, rng);
    l.wv = add(prefix + ".wv", Shape{width, width}, b, rng);
    l.bv = add(prefix + ".bv", Shape{width}, 0.0, rng);
    l.wo = add(prefix + ".wo", Shape{width, width}, b, rng);
    l.bo = add(prefix + ".bo", Shape{width}, 0.0, rng);
    if (ffn > 0) {
        l.w1 = add(prefix + ".w1", Shape{width, ffn}, b, rng);
        l.b1 = add(prefix + ".b1", Shape{ffn}, 0.0, rng);
        l.w2 = add(prefix + ".w2", Shape{ffn, width}, fan_in_bound(ffn), rng);
        l.b2 = add(prefix + ".b2", Shape{width}, 0.0, rng);
    }
    return l;
}

}  // namespace

// --- shared blocks ----------------------------------------------------------------

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) { return affine(x, w, b); }

Tensor multi_head_attention(const Tensor& x, const EncoderLayer& l, std::size_t heads, const Tensor& bias) {
    if (heads == 0 || x.dim(2) % heads != 0) throw ConfigError("attention: heads must divide the model width");
    const Tensor ctx = attention(linear(x, l.wq, l.bq), linear(x, l.wk, l.bk), linear(x, l.wv, l.bv), heads, bias);
    return linear(ctx, l.wo, l.bo);
}

Tensor encoder_layer(const Tensor& x, const EncoderLayer& l, std::size_t heads, const Tensor& bias, double rate,
                     bool training, Rng& rng) {
    Tensor h = add(x, dropout(multi_head_attention(x, l, heads, bias), rate, training, rng));
    if (!l.w1.defined()) return h;
    const Tensor f = linear(relu(linear(h, l.w1, l.b1)), l.w2, l.b2);
    return add(h, dropout(f, rate, training, rng));
}

Tensor causal_mask(std::size_t n) {
    std::vector<double> m(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) m[i * n + j] = kMaskedLogit;
    }
    return Tensor::from({n, n}, std::move(m));
}

// --- BiLSTM -----------------------------------------------------------------------

BiLstm::BiLstm(const BiLstmConfig& config, std::size_t window, std::size_t features, Rng& rng)
    : Model(Architecture::kBiLstm, window, features), config_(config) {
    if (config.hidden == 0 || config.layers == 0) throw ConfigError("bilstm: hidden and layers must be positive");
    check_dropout(config.dropout, "bilstm");
    const std::size_t h = config.hidden;
    auto make = [&](const std::string& prefix, std::size_t in) {
        Direction d;
        d.wx = add_parameter(prefix + ".wx", {in, 4 * h}, fan_in_bound(in), rng);
        d.wh = add_parameter(prefix + ".wh", {h, 4 * h}, fan_in_bound(h), rng);
        d.b = add_parameter(prefix + ".b", {4 * h}, 0.0, rng);
        auto b = d.b.mutable_values();
        for (std::size_t i = h; i < 2 * h; ++i) b[i] = config.forget_bias;
        return d;
    };
    for (std::size_t layer = 0; layer < config.layers; ++layer) {
        const std::size_t in = layer == 0 ? features : 2 * h;
        forward_.push_back(make("l" + std::to_string(layer) + ".fwd", in));
        backward_.push_back(make("l" + std::to_string(layer) + ".bwd", in));
    }
    head_w_ = add_parameter("head.w", {2 * h, 1}, fan_in_bound(2 * h), rng);
    head_b_ = add_parameter("head.b", {1}, 0.0, rng);
}

Tensor BiLstm::run(const Tensor& x, const Direction& dir, bool reverse, std::vector<Tensor>& states) const {
    const std::size_t steps = x.dim(1), h = config_.hidden;
    const Tensor projected = affine(x, dir.wx, dir.b);  // [B, T, 4H]
    states.assign(steps, Tensor());
    Tensor hidden, cell;
    for (std::size_t k = 0; k < steps; ++k) {
        const std::size_t t = reverse ? steps - 1 - k : k;
        Tensor gates = select(projected, 1, t);
        if (hidden.defined()) gates = add(gates, matmul(hidden, dir.wh));
        const Tensor i = sigmoid(slice(gates, 1, 0, h));
        const Tensor f = sigmoid(slice(gates, 1, h, 2 * h));
        const Tensor g = tanh(slice(gates, 1, 2 * h, 3 * h));
        const Tensor o = sigmoid(slice(gates, 1, 3 * h, 4 * h));
        cell = cell.defined() ? add(mul(f, cell), mul(i, g)) : mul(i, g);
        hidden = mul(o, tanh(cell));
        states[t] = hidden;
    }
    return hidden;
}

Tensor BiLstm::forward(const Tensor& x, bool training, Rng& rng) {
    check_input(x);
    Tensor input = x;
    Tensor last_fwd, last_bwd;
    for (std::size_t layer = 0; layer < config_.layers; ++layer) {
        if (layer > 0) input = dropout(input, config_.dropout, training, rng);
        std::vector<Tensor> fwd_states, bwd_states;
        last_fwd = run(input, forward_[layer], false, fwd_states);
        last_bwd = run(input, backward_[layer], true, bwd_states);
        if (layer + 1 < config_.layers) {
            input = concat({stack(fwd_states, 1), stack(bwd_states, 1)}, 2);
        }
    }
    return head_probabilities(concat({last_fwd, last_bwd}, 1), head_w_, head_b_);
}

// --- TCN --------------------------------------------------------------------------

Tcn::Tcn(const TcnConfig& config, std::size_t window, std::size_t features, Rng& rng)
    : Model(Architecture::kTcn, window, features), config_(config) {
    if (config.channels == 0 || config.kernel == 0 || config.dilations.empty()) {
        throw ConfigError("tcn: channels, kernel and dilations must be non-empty");
    }
    check_dropout(config.dropout, "tcn");
    std::size_t in = features;
    for (std::size_t l = 0; l < config.dilations.size(); ++l) {
        if (config.dilations[l] == 0) throw ConfigError("tcn: dilations must be at least 1");
        const std::string p = "conv" + std::to_string(l);
        kernels_.push_back(
            add_parameter(p + ".w", {config.kernel, in, config.channels}, fan_in_bound(config.kernel * in), rng));
        biases_.push_back(add_parameter(p + ".b", {config.channels}, 0.0, rng));
        in = config.channels;
    }
    head_w_ = add_parameter("head.w", {config.channels, 1}, fan_in_bound(config.channels), rng);
    head_b_ = add_parameter("head.b", {1}, 0.0, rng);
}

std::size_t Tcn::receptive_field() const {
    std::size_t r = 1;
    for (std::size_t d : config_.dilations) r += (config_.kernel - 1) * d;
    return r;
}

std::vector<Tensor> Tcn::layer_outputs(const Tensor& x, bool training, Rng& rng) const {
    check_input(x);
    std::vector<Tensor> out;
    Tensor h = x;
    for (std::size_t l = 0; l < kernels_.size(); ++l) {
        h = relu(add(causal_dilated_conv1d(h, kernels_[l], config_.dilations[l]), biases_[l]));
        h = dropout(h, config_.dropout, training, rng);
        out.push_back(h);
    }
    return out;
}

Tensor Tcn::forward(const Tensor& x, bool training, Rng& rng) {
    const Tensor last = layer_outputs(x, training, rng).back();
    return head_probabilities(select(last, 1, window() - 1), head_w_, head_b_);
}

// --- Medformer --------------------------------------------------------------------

Medformer::Medformer(const MedformerConfig& config, std::size_t window, std::size_t features, Rng& rng)
    : Model(Architecture::kMedformer, window, features), config_(config) {
    if (config.patch_lengths.empty()) throw ConfigError("medformer: no patch lengths, so no valid patches");
    if (config.width == 0 || config.heads == 0 || config.width % config.heads != 0) {
        throw ConfigError("medformer: heads must divide the model width");
    }
    if (config.layers == 0) throw ConfigError("medformer: layers must be positive");
    check_dropout(config.dropout, "medformer");
    const std::size_t d = config.width;
    for (std::size_t s = 0; s < config.patch_lengths.size(); ++s) {
        const std::size_t p = config.patch_lengths[s];
        if (p == 0 || p > window) {
            throw ConfigError("medformer: patch length " + std::to_string(p) + " yields no valid patches for window " +
                              std::to_string(window));
        }
        const std::size_t patches = (window + p - 1) / p;
        const std::string prefix = "scale" + std::to_string(s);
        embed_w_.push_back(add_parameter(prefix + ".embed.w", {p * features, d}, fan_in_bound(p * features), rng));
        embed_b_.push_back(add_parameter(prefix + ".embed.b", {d}, 0.0, rng));
        positions_.push_back(add_parameter(prefix + ".pos", {patches, d}, fan_in_bound(d), rng));
    }
    auto adder = [this](std::string name, Shape shape, double bound, Rng& r) {
        return add_parameter(std::move(name), std::move(shape), bound, r);
    };
    for (std::size_t l = 0; l < config.layers; ++l) {
        layers_.push_back(make_encoder_layer("enc" + std::to_string(l), d, config.ffn, rng, adder));
    }
    scale_score_ = add_parameter("scale_score", {d, 1}, fan_in_bound(d), rng);
    head_w_ = add_parameter("head.w", {d, 1}, fan_in_bound(d), rng);
    head_b_ = add_parameter("head.b", {1}, 0.0, rng);
}

Tensor Medformer::encode_scale(const Tensor& x, std::size_t s, bool training, Rng& rng) const {
    check_input(x);
    const std::size_t batch = x.dim(0), p = config_.patch_lengths.at(s);
    const std::size_t patches = (window() + p - 1) / p;
    Tensor padded = x;
    if (patches * p > window()) {
        padded = concat({x, Tensor::zeros({batch, patches * p - window(), features()})}, 1);
    }
    Tensor h = add(linear(reshape(padded, {batch, patches, p * features()}), embed_w_[s], embed_b_[s]),
                   positions_[s]);
    const Tensor mask = config_.causal_mask ? causal_mask(patches) : Tensor();
    for (const auto& layer : layers_) h = encoder_layer(h, layer, config_.heads, mask, config_.dropout, training, rng);
    return h;
}

Tensor Medformer::forward(const Tensor& x, bool training, Rng& rng) {
    const std::size_t batch = x.dim(0), scales = config_.patch_lengths.size();
    std::vector<Tensor> summaries;
    for (std::size_t s = 0; s < scales; ++s) summaries.push_back(mean_pool(encode_scale(x, s, training, rng), 1));
    const Tensor stacked = stack(summaries, 1);  // [B, S, D]
    const Tensor weights = softmax(reshape(matmul(stacked, scale_score_), {batch, scales}));
    const Tensor pooled = scale(mean_pool(mul(stacked, reshape(weights, {batch, scales, 1})), 1),
                                static_cast<double>(scales));
    return head_probabilities(pooled, head_w_, head_b_);
}

// --- ST-Transformer ---------------------------------------------------------------

StTransformer::StTransformer(const StTransformerConfig& config, std::size_t window, std::size_t features, Rng& rng)
    : Model(Architecture::kStTransformer, window, features), config_(config) {
    if (config.width == 0 || config.heads == 0 || config.width % config.heads != 0) {
        throw ConfigError("sttransformer: heads (" + std::to_string(config.heads) + ") must divide the model width (" +
                          std::to_string(config.width) + ")");
    }
    if (config.layers == 0) throw ConfigError("sttransformer: layers must be positive");
    check_dropout(config.dropout, "sttransformer");
    const std::size_t d = config.width;
    embed_w_ = add_parameter("embed.w", {features, d}, 1.0, rng);
    embed_b_ = add_parameter("embed.b", {features, d}, 0.0, rng);
    auto adder = [this](std::string name, Shape shape, double bound, Rng& r) {
        return add_parameter(std::move(name), std::move(shape), bound, r);
    };
    for (std::size_t l = 0; l < config.layers; ++l) {
        const std::string prefix = "enc" + std::to_string(l);
        layers_.push_back(make_encoder_layer(prefix, d, config.ffn, rng, adder));
        spatial_.push_back(add_parameter(prefix + ".a_spatial", {features, features}, 0.0, rng));
        temporal_.push_back(add_parameter(prefix + ".a_temporal", {window, window}, 0.0, rng));
    }
    head_w_ = add_parameter("head.w", {d, 1}, fan_in_bound(d), rng);
    head_b_ = add_parameter("head.b", {1}, 0.0, rng);
}

Tensor StTransformer::encode(const Tensor& x, bool training, Rng& rng) const {
    check_input(x);
    const std::size_t batch = x.dim(0), t = window(), f = features(), d = config_.width;
    Tensor h = add(mul(reshape(x, {batch, t, f, 1}), embed_w_), embed_b_);  // [B, T, F, D]
    h = reshape(h, {batch, t * f, d});
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const Tensor bias =
            reshape(add(reshape(temporal_[l], {t, 1, t, 1}), reshape(spatial_[l], {1, f, 1, f})), {t * f, t * f});
        h = encoder_layer(h, layers_[l], config_.heads, bias, config_.dropout, training, rng);
    }
    return h;
}

Tensor StTransformer::forward(const Tensor& x, bool training, Rng& rng) {
    return head_probabilities(mean_pool(encode(x, training, rng), 1), head_w_, head_b_);
}

// --- factory ----------------------------------------------------------------------

std::unique_ptr<Model> make_model(const ModelConfig& config, std::size_t window, std::size_t features,
                                  std::uint64_t seed) {
    if (window == 0 || features == 0) throw ConfigError("model: window and features must be positive");
    Rng rng(seed, 0x1417);
    switch (config.architecture) {
        case Architecture::kBiLstm: return std::make_unique<BiLstm>(config.bilstm, window, features, rng);
        case Architecture::kTcn: return std::make_unique<Tcn>(config.tcn, window, features, rng);
        case Architecture::kMedformer: return std::make_unique<Medformer>(config.medformer, window, features, rng);
        case Architecture::kStTransformer:
            return std::make_unique<StTransformer>(config.sttransformer, window, features, rng);
    }
    throw ConfigError("model: unknown architecture");
}

}  // namespace hypobench::models
