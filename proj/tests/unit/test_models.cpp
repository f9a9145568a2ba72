#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "hypobench/autodiff/adam.hpp"
#include "hypobench/autodiff/ops.hpp"
#include "hypobench/common/errors.hpp"
#include "hypobench/models/models.hpp"

using namespace hypobench;
using namespace hypobench::models;
using ad::Tensor;

namespace {

constexpr std::size_t kWindow = 7;
constexpr std::size_t kFeatures = 7;

Tensor random_input(std::size_t batch, std::uint64_t seed, std::size_t window = kWindow,
                    std::size_t features = kFeatures) {
    Rng rng(seed);
    std::vector<double> v(batch * window * features);
    for (auto& x : v) x = rng.uniform(-0.5, 1.5);
    return Tensor::from({batch, window, features}, std::move(v));
}

ModelConfig config_for(Architecture a) {
    ModelConfig c;
    c.architecture = a;
    return c;
}

std::vector<double> eval(Model& m, const Tensor& x) {
    ad::NoGradGuard guard;
    Rng rng(0);
    const Tensor p = m.forward(x, false, rng);
    return {p.values().begin(), p.values().end()};
}

const Tensor& param(const Model& m, const std::string& name) {
    for (const auto& p : m.parameters()) {
        if (p.name == name) return p.tensor;
    }
    FAIL("no parameter " << name);
    static Tensor none;
    return none;
}

// Plain row-major matrices for the loop-nest references below.
using Mat = std::vector<std::vector<double>>;

Mat to_mat(std::span<const double> v, std::size_t rows, std::size_t cols) {
    Mat m(rows, std::vector<double>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) m[i][j] = v[i * cols + j];
    }
    return m;
}

Mat affine_ref(const Mat& x, const Tensor& w, const Tensor& b) {
    const std::size_t in = w.dim(0), out = w.dim(1);
    Mat y(x.size(), std::vector<double>(out));
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = 0; j < out; ++j) {
            double s = b.at(j);
            for (std::size_t k = 0; k < in; ++k) s += x[i][k] * w.at(k * out + j);
            y[i][j] = s;
        }
    }
    return y;
}

// One encoder layer on one sample, n tokens x d, with an optional n x n
// logit bias.
Mat encoder_ref(const Mat& x, const Model& m, const std::string& prefix, std::size_t heads, const Mat* bias) {
    const std::size_t n = x.size(), d = x[0].size(), dh = d / heads;
    const Mat q = affine_ref(x, param(m, prefix + ".wq"), param(m, prefix + ".bq"));
    const Mat k = affine_ref(x, param(m, prefix + ".wk"), param(m, prefix + ".bk"));
    const Mat v = affine_ref(x, param(m, prefix + ".wv"), param(m, prefix + ".bv"));
    Mat ctx(n, std::vector<double>(d, 0.0));
    for (std::size_t h = 0; h < heads; ++h) {
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> s(n);
            double peak = -1e300;
            for (std::size_t j = 0; j < n; ++j) {
                double dot = 0.0;
                for (std::size_t c = 0; c < dh; ++c) dot += q[i][h * dh + c] * k[j][h * dh + c];
                s[j] = dot / std::sqrt(static_cast<double>(dh)) + (bias ? (*bias)[i][j] : 0.0);
                peak = std::max(peak, s[j]);
            }
            double total = 0.0;
            for (auto& e : s) total += (e = std::exp(e - peak));
            for (std::size_t j = 0; j < n; ++j) {
                for (std::size_t c = 0; c < dh; ++c) ctx[i][h * dh + c] += s[j] / total * v[j][h * dh + c];
            }
        }
    }
    const Mat attn = affine_ref(ctx, param(m, prefix + ".wo"), param(m, prefix + ".bo"));
    Mat h1 = x;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) h1[i][j] += attn[i][j];
    }
    bool has_ffn = false;
    for (const auto& p : m.parameters()) has_ffn = has_ffn || p.name == prefix + ".w1";
    if (!has_ffn) return h1;
    Mat hidden = affine_ref(h1, param(m, prefix + ".w1"), param(m, prefix + ".b1"));
    for (auto& row : hidden) {
        for (auto& e : row) e = std::max(e, 0.0);
    }
    const Mat f = affine_ref(hidden, param(m, prefix + ".w2"), param(m, prefix + ".b2"));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) h1[i][j] += f[i][j];
    }
    return h1;
}

double head_ref(const Mat& tokens, const Model& m) {
    const std::size_t d = tokens[0].size();
    const Tensor& w = param(m, "head.w");
    double logit = param(m, "head.b").at(0);
    for (std::size_t j = 0; j < d; ++j) {
        double mean = 0.0;
        for (const auto& row : tokens) mean += row[j];
        logit += mean / static_cast<double>(tokens.size()) * w.at(j);
    }
    return 1.0 / (1.0 + std::exp(-logit));
}

std::size_t encoder_params(std::size_t d, std::size_t ffn) {
    return 4 * (d * d + d) + (ffn ? d * ffn + ffn + ffn * d + d : 0);
}

}  // namespace

TEST_CASE("every architecture maps [batch, T, F] to probabilities in (0, 1)") {
    for (Architecture a : kAllArchitectures) {
        CAPTURE(architecture_tag(a));
        auto m = make_model(config_for(a), kWindow, kFeatures, 3);
        const auto p = eval(*m, random_input(2, 11));
        REQUIRE(p.size() == 2);
        for (double v : p) {
            CHECK(v > 0.0);
            CHECK(v < 1.0);
        }
    }
}

TEST_CASE("parameter counts follow the closed forms") {
    const std::size_t f = kFeatures, t = kWindow;
    const std::size_t h = 120;
    const std::size_t lstm = 2 * (f * 4 * h + h * 4 * h + 4 * h) + 2 * (2 * h * 4 * h + h * 4 * h + 4 * h) + 2 * h + 1;
    CHECK(lstm == 469681);
    CHECK(make_model(config_for(Architecture::kBiLstm), t, f, 1)->parameter_count() == lstm);

    const std::size_t c = 64;
    const std::size_t tcn = (3 * f * c + c) + 2 * (3 * c * c + c) + c + 1;
    CHECK(tcn == 26177);
    CHECK(make_model(config_for(Architecture::kTcn), t, f, 1)->parameter_count() == tcn);

    const std::size_t d = 64;
    const std::size_t med = (f * d + d + t * d) + (t * f * d + d + 1 * d) + 2 * encoder_params(d, 128) + d + d + 1;
    CHECK(med == 70785);
    CHECK(make_model(config_for(Architecture::kMedformer), t, f, 1)->parameter_count() == med);

    for (std::size_t ffn : {std::size_t{0}, std::size_t{128}}) {
        auto cfg = config_for(Architecture::kStTransformer);
        cfg.sttransformer.ffn = ffn;
        const std::size_t st = 2 * f * d + 3 * (encoder_params(d, ffn) + f * f + t * t) + d + 1;
        CHECK(make_model(cfg, t, f, 1)->parameter_count() == st);
    }
}

TEST_CASE("bilstm layers emit 240-wide concatenated states") {
    Rng rng(1);
    BiLstm m(BiLstmConfig{}, kWindow, kFeatures, rng);
    CHECK(m.state_width() == 240);
    CHECK(param(m, "l1.fwd.wx").dim(0) == 240);
    CHECK(param(m, "head.w").dim(0) == 240);
}

TEST_CASE("bilstm: reversed input with swapped direction weights gives the same output") {
    BiLstmConfig cfg;
    cfg.layers = 1;
    cfg.hidden = 9;
    Rng r1(5), r2(6);
    BiLstm a(cfg, kWindow, kFeatures, r1);
    BiLstm b(cfg, kWindow, kFeatures, r2);
    for (const char* part : {"wx", "wh", "b"}) {
        const std::string fwd = std::string("l0.fwd.") + part, bwd = std::string("l0.bwd.") + part;
        auto dst_f = const_cast<Tensor&>(param(b, fwd)).mutable_values();
        auto dst_b = const_cast<Tensor&>(param(b, bwd)).mutable_values();
        std::copy(param(a, bwd).values().begin(), param(a, bwd).values().end(), dst_f.begin());
        std::copy(param(a, fwd).values().begin(), param(a, fwd).values().end(), dst_b.begin());
    }
    auto hw = const_cast<Tensor&>(param(b, "head.w")).mutable_values();
    for (std::size_t i = 0; i < cfg.hidden; ++i) {
        hw[i] = param(a, "head.w").at(cfg.hidden + i);
        hw[cfg.hidden + i] = param(a, "head.w").at(i);
    }
    const_cast<Tensor&>(param(b, "head.b")).mutable_values()[0] = param(a, "head.b").at(0);

    const Tensor x = random_input(3, 21);
    std::vector<double> rev(x.numel());
    for (std::size_t s = 0; s < 3; ++s) {
        for (std::size_t t = 0; t < kWindow; ++t) {
            for (std::size_t f = 0; f < kFeatures; ++f) {
                rev[(s * kWindow + t) * kFeatures + f] = x.at((s * kWindow + (kWindow - 1 - t)) * kFeatures + f);
            }
        }
    }
    const auto pa = eval(a, x);
    const auto pb = eval(b, Tensor::from(x.shape(), rev));
    for (std::size_t i = 0; i < 3; ++i) CHECK(pb[i] == doctest::Approx(pa[i]).epsilon(1e-12));
}

TEST_CASE("tcn receptive field covers the window") {
    Rng rng(1);
    Tcn m(TcnConfig{}, kWindow, kFeatures, rng);
    CHECK(m.receptive_field() == 15);
    CHECK(m.receptive_field() >= kWindow);
}

TEST_CASE("tcn layer outputs before t are unchanged by a perturbation at t") {
    Rng init(2), unused(0);
    Tcn m(TcnConfig{}, kWindow, kFeatures, init);
    ad::NoGradGuard guard;
    for (std::size_t t = 0; t < kWindow; ++t) {
        const Tensor x = random_input(2, 30 + t);
        std::vector<double> bumped(x.values().begin(), x.values().end());
        for (std::size_t s = 0; s < 2; ++s) {
            for (std::size_t f = 0; f < kFeatures; ++f) bumped[(s * kWindow + t) * kFeatures + f] += 0.75;
        }
        const auto base = m.layer_outputs(x, false, unused);
        const auto moved = m.layer_outputs(Tensor::from(x.shape(), bumped), false, unused);
        for (std::size_t l = 0; l < base.size(); ++l) {
            const std::size_t c = base[l].dim(2);
            bool same_before = true, changed_at = false;
            for (std::size_t s = 0; s < 2; ++s) {
                for (std::size_t u = 0; u < kWindow; ++u) {
                    for (std::size_t k = 0; k < c; ++k) {
                        const std::size_t i = (s * kWindow + u) * c + k;
                        if (u < t) same_before = same_before && base[l].at(i) == moved[l].at(i);
                        if (u == t) changed_at = changed_at || base[l].at(i) != moved[l].at(i);
                    }
                }
            }
            CHECK(same_before);
            if (l == 0) CHECK(changed_at);
        }
    }
}

TEST_CASE("medformer causal mask: the last step never reaches earlier positions") {
    Rng init(3), unused(0);
    Medformer m(MedformerConfig{}, kWindow, kFeatures, init);
    ad::NoGradGuard guard;
    const Tensor x = random_input(2, 41);
    std::vector<double> bumped(x.values().begin(), x.values().end());
    for (std::size_t s = 0; s < 2; ++s) {
        for (std::size_t f = 0; f < kFeatures; ++f) bumped[(s * kWindow + kWindow - 1) * kFeatures + f] -= 1.3;
    }
    const Tensor base = m.encode_scale(x, 0, false, unused);
    const Tensor moved = m.encode_scale(Tensor::from(x.shape(), bumped), 0, false, unused);
    const std::size_t d = base.dim(2);
    for (std::size_t s = 0; s < 2; ++s) {
        for (std::size_t p = 0; p + 1 < kWindow; ++p) {
            for (std::size_t k = 0; k < d; ++k) {
                const std::size_t i = (s * kWindow + p) * d + k;
                REQUIRE(base.at(i) == moved.at(i));
            }
        }
        CHECK(base.at((s * kWindow + kWindow - 1) * d) != moved.at((s * kWindow + kWindow - 1) * d));
    }
}

TEST_CASE("single-scale unmasked medformer equals a plain encoder built from loops") {
    MedformerConfig cfg;
    cfg.patch_lengths = {1};
    cfg.causal_mask = false;
    Rng init(4);
    Medformer m(cfg, kWindow, kFeatures, init);
    const Tensor x = random_input(3, 51);
    const auto got = eval(m, x);
    for (std::size_t s = 0; s < 3; ++s) {
        const Mat xs = to_mat(x.values().subspan(s * kWindow * kFeatures, kWindow * kFeatures), kWindow, kFeatures);
        Mat h = affine_ref(xs, param(m, "scale0.embed.w"), param(m, "scale0.embed.b"));
        const Tensor& pos = param(m, "scale0.pos");
        for (std::size_t t = 0; t < kWindow; ++t) {
            for (std::size_t j = 0; j < cfg.width; ++j) h[t][j] += pos.at(t * cfg.width + j);
        }
        for (std::size_t l = 0; l < cfg.layers; ++l) h = encoder_ref(h, m, "enc" + std::to_string(l), cfg.heads, nullptr);
        CHECK(std::abs(got[s] - head_ref(h, m)) < 1e-6);
    }
}

TEST_CASE("st-transformer equals loop attention with and without the additive biases") {
    for (bool zero_bias : {true, false}) {
        CAPTURE(zero_bias);
        StTransformerConfig cfg;
        cfg.ffn = zero_bias ? 0 : 32;
        Rng init(5);
        StTransformer m(cfg, kWindow, kFeatures, init);
        if (!zero_bias) {
            Rng r(77);
            for (auto& p : m.parameters()) {
                if (p.name.find(".a_") == std::string::npos) continue;
                for (auto& v : p.tensor.mutable_values()) v = r.uniform(-2.0, 2.0);
            }
        }
        const Tensor x = random_input(2, 61);
        const auto got = eval(m, x);
        const std::size_t n = kWindow * kFeatures;
        for (std::size_t s = 0; s < 2; ++s) {
            Mat h(n, std::vector<double>(cfg.width));
            const Tensor& we = param(m, "embed.w");
            const Tensor& be = param(m, "embed.b");
            for (std::size_t t = 0; t < kWindow; ++t) {
                for (std::size_t f = 0; f < kFeatures; ++f) {
                    const double v = x.at((s * kWindow + t) * kFeatures + f);
                    for (std::size_t j = 0; j < cfg.width; ++j) {
                        h[t * kFeatures + f][j] = v * we.at(f * cfg.width + j) + be.at(f * cfg.width + j);
                    }
                }
            }
            for (std::size_t l = 0; l < cfg.layers; ++l) {
                const std::string prefix = "enc" + std::to_string(l);
                Mat bias(n, std::vector<double>(n));
                const Tensor& at = param(m, prefix + ".a_temporal");
                const Tensor& as = param(m, prefix + ".a_spatial");
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t j = 0; j < n; ++j) {
                        bias[i][j] = at.at((i / kFeatures) * kWindow + j / kFeatures) +
                                     as.at((i % kFeatures) * kFeatures + j % kFeatures);
                    }
                }
                h = encoder_ref(h, m, prefix, cfg.heads, zero_bias ? nullptr : &bias);
            }
            CHECK(std::abs(got[s] - head_ref(h, m)) < 1e-6);
        }
    }
}

TEST_CASE("permuting the batch permutes the outputs") {
    const std::vector<std::size_t> perm{3, 0, 4, 1, 2};
    for (Architecture a : kAllArchitectures) {
        CAPTURE(architecture_tag(a));
        auto m = make_model(config_for(a), kWindow, kFeatures, 8);
        const Tensor x = random_input(5, 71);
        std::vector<double> shuffled(x.numel());
        const std::size_t w = kWindow * kFeatures;
        for (std::size_t i = 0; i < 5; ++i) {
            std::copy_n(x.values().begin() + static_cast<long>(perm[i] * w), w, shuffled.begin() + static_cast<long>(i * w));
        }
        const auto base = eval(*m, x);
        const auto moved = eval(*m, Tensor::from(x.shape(), shuffled));
        for (std::size_t i = 0; i < 5; ++i) CHECK(moved[i] == doctest::Approx(base[perm[i]]).epsilon(1e-12));
    }
}

TEST_CASE("one adam step on one sample rarely increases its loss") {
    for (Architecture a : kAllArchitectures) {
        CAPTURE(architecture_tag(a));
        int passed = 0;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            auto m = make_model(config_for(a), kWindow, kFeatures, seed);
            const Tensor x = random_input(1, 1000 + seed);
            const std::vector<double> label{static_cast<double>(seed % 2)};
            auto params = m->parameter_tensors();
            Rng rng(seed);
            const double before = ad::binary_cross_entropy(m->forward(x, false, rng), label).item();
            ad::zero_grads(params);
            ad::backward(ad::binary_cross_entropy(m->forward(x, false, rng), label));
            ad::AdamState state;
            ad::adam_step(params, state);
            ad::NoGradGuard guard;
            const double after = ad::binary_cross_entropy(m->forward(x, false, rng), label).item();
            ad::Tape::current().clear();
            passed += after <= before;
        }
        CHECK(passed >= 95);
    }
}

TEST_CASE("with dropout off the forward pass is deterministic") {
    for (Architecture a : kAllArchitectures) {
        CAPTURE(architecture_tag(a));
        auto cfg = config_for(a);
        cfg.bilstm.dropout = 0.0;
        auto m = make_model(cfg, kWindow, kFeatures, 9);
        const Tensor x = random_input(4, 81);
        ad::NoGradGuard guard;
        Rng r1(1), r2(2);
        const Tensor p1 = m->forward(x, true, r1);
        const Tensor p2 = m->forward(x, true, r2);
        const auto e = eval(*m, x);
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(p1.at(i) == p2.at(i));
            CHECK(p1.at(i) == e[i]);
        }
    }
}

TEST_CASE("bilstm dropout is active only in training") {
    auto m = make_model(config_for(Architecture::kBiLstm), kWindow, kFeatures, 9);
    const Tensor x = random_input(4, 82);
    ad::NoGradGuard guard;
    Rng r1(1), r2(2);
    const Tensor p1 = m->forward(x, true, r1);
    const Tensor p2 = m->forward(x, true, r2);
    bool differs = false;
    for (std::size_t i = 0; i < 4; ++i) differs = differs || p1.at(i) != p2.at(i);
    CHECK(differs);
    CHECK(eval(*m, x) == eval(*m, x));
}

TEST_CASE("same seed builds identical parameters") {
    for (Architecture a : kAllArchitectures) {
        auto m1 = make_model(config_for(a), kWindow, kFeatures, 12);
        auto m2 = make_model(config_for(a), kWindow, kFeatures, 12);
        auto m3 = make_model(config_for(a), kWindow, kFeatures, 13);
        bool same = true, differs = false;
        for (std::size_t i = 0; i < m1->parameters().size(); ++i) {
            const auto v1 = m1->parameters()[i].tensor.values();
            const auto v2 = m2->parameters()[i].tensor.values();
            const auto v3 = m3->parameters()[i].tensor.values();
            same = same && std::equal(v1.begin(), v1.end(), v2.begin());
            differs = differs || !std::equal(v1.begin(), v1.end(), v3.begin());
        }
        CHECK(same);
        CHECK(differs);
    }
}

TEST_CASE("invalid model configs and inputs are rejected") {
    auto st = config_for(Architecture::kStTransformer);
    st.sttransformer.heads = 5;
    CHECK_THROWS_AS(make_model(st, kWindow, kFeatures, 1), ConfigError);

    auto med = config_for(Architecture::kMedformer);
    med.medformer.patch_lengths = {};
    CHECK_THROWS_AS(make_model(med, kWindow, kFeatures, 1), ConfigError);
    med.medformer.patch_lengths = {8};
    CHECK_THROWS_AS(make_model(med, kWindow, kFeatures, 1), ConfigError);

    auto tcn = config_for(Architecture::kTcn);
    tcn.tcn.dilations = {1, 0};
    CHECK_THROWS_AS(make_model(tcn, kWindow, kFeatures, 1), ConfigError);

    auto lstm = config_for(Architecture::kBiLstm);
    lstm.bilstm.dropout = 1.0;
    CHECK_THROWS_AS(make_model(lstm, kWindow, kFeatures, 1), ConfigError);

    CHECK_THROWS_AS(parse_architecture("gru"), ConfigError);
    CHECK(parse_architecture("tcn") == Architecture::kTcn);

    auto m = make_model(config_for(Architecture::kTcn), kWindow, kFeatures, 1);
    Rng rng(0);
    CHECK_THROWS_AS(m->forward(random_input(2, 1, kWindow, kFeatures + 1), false, rng), ShapeError);
    CHECK_THROWS_AS(m->forward(random_input(2, 1, kWindow - 1, kFeatures), false, rng), ShapeError);
}
