#include "hypobench/resample/resample.hpp"

#include <algorithm>
#include <cmath>

#include "hypobench/common/errors.hpp"
#include "hypobench/common/omp.hpp"

namespace hypobench::resample {

std::size_t smote_count(std::size_t majority, std::size_t minority, double target_ratio) {
    const double wanted = target_ratio * static_cast<double>(majority);
    const double nearest = std::round(wanted);
    const double target =
        std::abs(wanted - nearest) <= 1e-9 * std::max(1.0, nearest) ? nearest : std::ceil(wanted);
    const auto t = static_cast<std::size_t>(target);
    return t > minority ? t - minority : 0;
}

std::vector<std::vector<std::size_t>> nearest_neighbors(const std::vector<double>& x, std::size_t width,
                                                        const std::vector<std::size_t>& rows, std::size_t k) {
    const std::size_t n = rows.size();
    std::vector<std::vector<std::size_t>> out(n);
#pragma omp parallel for schedule(dynamic, 16)
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = x.data() + rows[i] * width;
        std::vector<std::pair<double, std::size_t>> dist;
        dist.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double* xj = x.data() + rows[j] * width;
            double d = 0.0;
            for (std::size_t c = 0; c < width; ++c) {
                const double diff = xi[c] - xj[c];
                d += diff * diff;
            }
            dist.emplace_back(d, j);
        }
        const std::size_t take = std::min(k, dist.size());
        std::partial_sort(dist.begin(), dist.begin() + static_cast<long>(take), dist.end());
        out[i].reserve(take);
        for (std::size_t t = 0; t < take; ++t) out[i].push_back(dist[t].second);
    }
    return out;
}

SmoteResult smote(const prep::SequenceDataset& ds, const SmoteConfig& config) {
    if (config.k_neighbors == 0) throw ConfigError("smote: k_neighbors must be at least 1");
    if (!(config.target_ratio > 0.0 && config.target_ratio <= 1.0)) {
        throw ConfigError("smote: target_ratio must lie in (0, 1]");
    }
    SmoteResult out;
    out.dataset = ds;
    const std::size_t pos = ds.positives();
    const std::size_t neg = ds.size() - pos;
    const int minority_label = pos <= neg ? 1 : 0;
    const std::size_t minority = std::min(pos, neg);
    const std::size_t majority = std::max(pos, neg);
    const std::size_t count = smote_count(majority, minority, config.target_ratio);
    if (count == 0) return out;
    if (minority <= config.k_neighbors) {
        throw ResampleError("smote: minority class has " + std::to_string(minority) + " samples, need more than k = " +
                            std::to_string(config.k_neighbors));
    }

    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.y[i] == minority_label) rows.push_back(i);
    }
    const std::size_t width = ds.sample_width();
    const auto neighbors = nearest_neighbors(ds.x, width, rows, config.k_neighbors);

    Rng rng(config.rng_seed, 0x5307E);
    auto& res = out.dataset;
    res.x.reserve(res.x.size() + count * width);
    out.draws.reserve(count);
    for (std::size_t s = 0; s < count; ++s) {
        const std::size_t b = rng.below(rows.size());
        const std::size_t nn = neighbors[b][rng.below(config.k_neighbors)];
        const double mu = rng.uniform();
        const double* xb = ds.x.data() + rows[b] * width;
        const double* xn = ds.x.data() + rows[nn] * width;
        for (std::size_t c = 0; c < width; ++c) res.x.push_back(xb[c] + mu * (xn[c] - xb[c]));
        res.y.push_back(minority_label);
        auto meta = ds.meta[rows[b]];
        meta.synthetic = true;
        res.meta.push_back(meta);
        out.draws.push_back({rows[b], rows[nn], mu});
    }
    return out;
}

std::vector<double> batch_weights(const std::vector<int>& y) {
    std::size_t counts[2] = {0, 0};
    for (int label : y) {
        if (label != 0 && label != 1) throw WeightingError("batch_weights: labels must be 0 or 1");
        ++counts[label];
    }
    if (counts[0] == 0 || counts[1] == 0) throw WeightingError("batch_weights: both classes must be present");
    std::vector<double> w(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) w[i] = 1.0 / static_cast<double>(counts[y[i]]);
    return w;
}

std::vector<std::size_t> sample_indices(const std::vector<double>& weights, std::size_t count, Rng& rng) {
    if (weights.empty()) throw WeightingError("sample_indices: no weights");
    std::vector<double> cumulative(weights.size());
    double total = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) throw WeightingError("sample_indices: bad weight");
        total += weights[i];
        cumulative[i] = total;
    }
    if (!(total > 0.0)) throw WeightingError("sample_indices: weights sum to zero");
    std::vector<std::size_t> out(count);
    for (auto& idx : out) {
        const double u = rng.uniform() * total;
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        idx = std::min(static_cast<std::size_t>(it - cumulative.begin()), weights.size() - 1);
    }
    return out;
}

std::vector<std::vector<std::size_t>> sample_batches(const std::vector<double>& weights, std::size_t batch_size,
                                                     std::size_t count, std::uint64_t seed) {
    if (batch_size == 0) throw ConfigError("sample_batches: batch_size must be at least 1");
    Rng rng(seed, 0xBA7C4);
    const auto drawn = sample_indices(weights, count, rng);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t i = 0; i < drawn.size(); i += batch_size) {
        batches.emplace_back(drawn.begin() + static_cast<long>(i),
                             drawn.begin() + static_cast<long>(std::min(drawn.size(), i + batch_size)));
    }
    return batches;
}

}  // namespace hypobench::resample
