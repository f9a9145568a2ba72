#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "hypobench/autodiff/tensor.hpp"
#include "hypobench/common/rng.hpp"

namespace hypobench::models {

using ad::NamedTensor;
using ad::Tensor;

enum class Architecture { kBiLstm, kTcn, kMedformer, kStTransformer };

/// Canonical lower-case tags: bilstm, tcn, medformer, sttransformer.
std::string_view architecture_tag(Architecture a);
/// Display names used in reports.
std::string_view architecture_name(Architecture a);
/// Throws ConfigError on an unknown tag.
Architecture parse_architecture(std::string_view tag);
inline constexpr Architecture kAllArchitectures[] = {Architecture::kBiLstm, Architecture::kMedformer,
                                                     Architecture::kStTransformer, Architecture::kTcn};

struct BiLstmConfig {
    std::size_t hidden = 120;
    std::size_t layers = 2;
    double dropout = 0.3;
    double forget_bias = 1.0;
};

struct TcnConfig {
    std::size_t channels = 64;
    std::size_t kernel = 3;
    std::vector<std::size_t> dilations{1, 2, 4};
    double dropout = 0.0;
};

struct MedformerConfig {
    std::size_t width = 64;
    std::size_t heads = 4;
    std::size_t layers = 2;
    std::size_t ffn = 128;
    std::vector<std::size_t> patch_lengths{1, 7};
    bool causal_mask = true;
    double dropout = 0.0;
};

/// ffn = 0 leaves out the feed-forward sublayer, so each layer is the
/// biased attention block alone.
struct StTransformerConfig {
    std::size_t width = 64;
    std::size_t heads = 16;
    std::size_t layers = 3;
    std::size_t ffn = 0;
    double dropout = 0.0;
};

struct ModelConfig {
    Architecture architecture = Architecture::kBiLstm;
    BiLstmConfig bilstm;
    TcnConfig tcn;
    MedformerConfig medformer;
    StTransformerConfig sttransformer;
};

/// Sequence classifier: x [batch, window, features] -> probabilities [batch].
class Model {
   public:
    virtual ~Model() = default;

    virtual Tensor forward(const Tensor& x, bool training, Rng& rng) = 0;

    Architecture architecture() const { return architecture_; }
    std::size_t window() const { return window_; }
    std::size_t features() const { return features_; }

    const std::vector<NamedTensor>& parameters() const { return params_; }
    std::vector<NamedTensor>& parameters() { return params_; }
    std::vector<Tensor> parameter_tensors() const;
    std::size_t parameter_count() const;

   protected:
    Model(Architecture a, std::size_t window, std::size_t features)
        : architecture_(a), window_(window), features_(features) {}

    /// Uniform in +-bound; bound 0 gives zeros.
    Tensor add_parameter(std::string name, ad::Shape shape, double bound, Rng& rng);
    /// Throws ShapeError unless x is [batch, window, features].
    void check_input(const Tensor& x) const;

   private:
    Architecture architecture_;
    std::size_t window_;
    std::size_t features_;
    std::vector<NamedTensor> params_;
};

/// Throws ConfigError when the config cannot build a model for this input.
std::unique_ptr<Model> make_model(const ModelConfig& config, std::size_t window, std::size_t features,
                                  std::uint64_t seed);

/// Parameters per layer and direction: Wx [in, 4H], Wh [H, 4H], b [4H] with
/// gate blocks ordered input, forget, candidate, output. The head reads the
/// forward state at the last step and the backward state at the first step.
class BiLstm : public Model {
   public:
    BiLstm(const BiLstmConfig& config, std::size_t window, std::size_t features, Rng& rng);
    Tensor forward(const Tensor& x, bool training, Rng& rng) override;
    /// Width of each layer's concatenated output, 2 * hidden.
    std::size_t state_width() const { return 2 * config_.hidden; }

   private:
    struct Direction {
        Tensor wx, wh, b;
    };
    Tensor run(const Tensor& x, const Direction& dir, bool reverse, std::vector<Tensor>& states) const;

    BiLstmConfig config_;
    std::vector<Direction> forward_, backward_;
    Tensor head_w_, head_b_;
};

/// Stack of relu(causal_conv(h) + b) layers; the head reads the last step.
class Tcn : public Model {
   public:
    Tcn(const TcnConfig& config, std::size_t window, std::size_t features, Rng& rng);
    Tensor forward(const Tensor& x, bool training, Rng& rng) override;
    /// Output of every conv layer, [batch, window, channels] each.
    std::vector<Tensor> layer_outputs(const Tensor& x, bool training, Rng& rng) const;
    std::size_t receptive_field() const;

   private:
    TcnConfig config_;
    std::vector<Tensor> kernels_, biases_;
    Tensor head_w_, head_b_;
};

/// Weights of one residual self-attention encoder layer without
/// normalization: h = x + attn(x); y = h + W2 relu(W1 h + b1) + b2, or y = h
/// when the layer has no feed-forward weights.
struct EncoderLayer {
    Tensor wq, bq, wk, bk, wv, bv, wo, bo;
    Tensor w1, b1, w2, b2;
};

/// Multi-scale patch transformer. Each scale cuts the window into patches
/// (right-padded with zeros), embeds them jointly over features, adds learned
/// positions and runs the shared encoder with an optional causal mask. Scale
/// summaries (mean over patches) are combined with softmax weights from a
/// learned scoring vector.
class Medformer : public Model {
   public:
    Medformer(const MedformerConfig& config, std::size_t window, std::size_t features, Rng& rng);
    Tensor forward(const Tensor& x, bool training, Rng& rng) override;
    /// Encoder output for one scale, [batch, patches, width].
    Tensor encode_scale(const Tensor& x, std::size_t scale, bool training, Rng& rng) const;
    std::size_t scales() const { return config_.patch_lengths.size(); }

   private:
    MedformerConfig config_;
    std::vector<Tensor> embed_w_, embed_b_, positions_;
    std::vector<EncoderLayer> layers_;
    Tensor scale_score_, head_w_, head_b_;
};

/// Transformer over all window*features tokens. Token (t, f) is
/// x[t, f] * We[f] + be[f]; each layer adds A_spatial[f, f'] + A_temporal[t, t']
/// to the attention logits of every head. The head reads the mean over
/// all tokens.
class StTransformer : public Model {
   public:
    StTransformer(const StTransformerConfig& config, std::size_t window, std::size_t features, Rng& rng);
    Tensor forward(const Tensor& x, bool training, Rng& rng) override;
    /// Token representations after the encoder, [batch, window*features, width].
    Tensor encode(const Tensor& x, bool training, Rng& rng) const;

   private:
    StTransformerConfig config_;
    Tensor embed_w_, embed_b_;
    std::vector<EncoderLayer> layers_;
    std::vector<Tensor> spatial_, temporal_;
    Tensor head_w_, head_b_;
};

/// Shared building blocks, exposed for tests.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor multi_head_attention(const Tensor& x, const EncoderLayer& layer, std::size_t heads, const Tensor& bias);
Tensor encoder_layer(const Tensor& x, const EncoderLayer& layer, std::size_t heads, const Tensor& bias,
                     double dropout, bool training, Rng& rng);
/// [n, n] additive mask: 0 on and below the diagonal, kMaskedLogit above.
Tensor causal_mask(std::size_t n);

}  // namespace hypobench::models
