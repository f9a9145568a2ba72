#include "hypobench/training/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "hypobench/autodiff/adam.hpp"
#include "hypobench/autodiff/ops.hpp"
#include "hypobench/common/errors.hpp"
#include "hypobench/common/io.hpp"

namespace hypobench::training {

namespace {

using ad::Tensor;

// Random streams derived from the training seed.
constexpr std::uint64_t kSmoteStream = 0x5307E;
constexpr std::uint64_t kOrderStream = 0x0BDE5;
constexpr std::uint64_t kDropoutStream = 0xD809;

Tensor gather_rows(const prep::SequenceDataset& ds, const std::size_t* rows, std::size_t count) {
    const std::size_t width = ds.sample_width();
    std::vector<double> x(count * width);
    for (std::size_t i = 0; i < count; ++i) {
        std::copy_n(ds.x.begin() + static_cast<long>(rows[i] * width), width, x.begin() + static_cast<long>(i * width));
    }
    return Tensor::from({count, ds.window, ds.features}, std::move(x));
}

std::vector<std::vector<std::size_t>> epoch_batches(const prep::SequenceDataset& ds, const TrainConfig& config,
                                                    const std::vector<double>& weights, std::size_t epoch) {
    const std::uint64_t epoch_seed = splitmix64(config.seed ^ splitmix64(epoch));
    if (config.use_weighted_sampling) return resample::sample_batches(weights, config.batch_size, ds.size(), epoch_seed);
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(epoch_seed, kOrderStream);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t i = 0; i < order.size(); i += config.batch_size) {
        batches.emplace_back(order.begin() + static_cast<long>(i),
                             order.begin() + static_cast<long>(std::min(order.size(), i + config.batch_size)));
    }
    return batches;
}

}  // namespace

void validate(const TrainConfig& c) {
    if (c.epochs == 0) throw ConfigError("train: epochs must be at least 1");
    if (c.batch_size == 0) throw ConfigError("train: batch_size must be at least 1");
    if (c.micro_batch == 0) throw ConfigError("train: micro_batch must be at least 1");
    if (!(c.lr > 0.0) || !std::isfinite(c.lr)) throw ConfigError("train: lr must be positive and finite");
}

TrainResult train(const models::ModelConfig& model_config, const prep::SequenceDataset& input,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
    validate(config);
    const std::size_t positives = input.positives();
    if (positives == 0 || positives == input.size()) {
        throw TrainingError("train: training data must contain both classes (" + std::to_string(positives) + " of " +
                            std::to_string(input.size()) + " positive)");
    }

    TrainResult result;
    prep::SequenceDataset resampled;
    const prep::SequenceDataset* ds = &input;
    if (config.use_smote) {
        auto smote_config = config.smote;
        smote_config.rng_seed = splitmix64(config.seed ^ kSmoteStream);
        resampled = resample::smote(input, smote_config).dataset;
        ds = &resampled;
        result.log.smote_added = resampled.size() - input.size();
    }
    result.log.train_samples = ds->size();

    result.model = models::make_model(model_config, ds->window, ds->features, config.seed);
    models::Model& model = *result.model;
    std::vector<Tensor> params = model.parameter_tensors();
    ad::AdamState adam;
    adam.config.lr = config.lr;
    Rng dropout_rng(config.seed, kDropoutStream);
    const std::vector<double> weights =
        config.use_weighted_sampling ? resample::batch_weights(ds->y) : std::vector<double>{};

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        EpochLog log;
        log.epoch = epoch;
        double loss_sum = 0.0;
        const auto batches = epoch_batches(*ds, config, weights, epoch);
        for (std::size_t b = 0; b < batches.size(); ++b) {
            const auto& rows = batches[b];
            ad::zero_grads(params);
            double batch_loss = 0.0;
            for (std::size_t begin = 0; begin < rows.size(); begin += config.micro_batch) {
                const std::size_t count = std::min(config.micro_batch, rows.size() - begin);
                std::vector<double> labels(count);
                for (std::size_t i = 0; i < count; ++i) {
                    labels[i] = ds->y[rows[begin + i]];
                    log.positives += static_cast<std::size_t>(ds->y[rows[begin + i]]);
                }
                const double share = static_cast<double>(count) / static_cast<double>(rows.size());
                try {
                    const Tensor probs = model.forward(gather_rows(*ds, rows.data() + begin, count), true, dropout_rng);
                    const Tensor loss = ad::binary_cross_entropy(probs, labels);
                    if (!std::isfinite(loss.item())) throw NumericError("loss is " + std::to_string(loss.item()));
                    batch_loss += share * loss.item();
                    ad::backward(ad::scale(loss, share));
                } catch (const NumericError& e) {
                    ad::Tape::current().clear();
                    throw NumericError("train: non-finite value in epoch " + std::to_string(epoch) + ", batch " +
                                       std::to_string(b + 1) + ": " + e.what());
                }
            }
            ad::adam_step(params, adam);
            log.batch_losses.push_back(batch_loss);
            log.batch_sizes.push_back(rows.size());
            log.samples += rows.size();
            loss_sum += batch_loss;
        }
        log.loss = loss_sum / static_cast<double>(batches.size());
        log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (on_epoch) on_epoch(log);
        result.log.epochs.push_back(std::move(log));
    }
    ad::zero_grads(params);
    return result;
}

std::vector<double> predict_proba(models::Model& model, const prep::SequenceDataset& ds, std::size_t chunk) {
    if (ds.window != model.window() || ds.features != model.features()) {
        throw ContractError("predict_proba: model expects window " + std::to_string(model.window()) + " and " +
                            std::to_string(model.features()) + " features, dataset has window " +
                            std::to_string(ds.window) + " and " + std::to_string(ds.features) + " features");
    }
    if (ds.x.size() != ds.size() * ds.sample_width()) {
        throw ContractError("predict_proba: dataset holds " + std::to_string(ds.x.size()) + " values for " +
                            std::to_string(ds.size()) + " samples");
    }
    chunk = std::max<std::size_t>(chunk, 1);
    ad::NoGradGuard no_grad;
    Rng unused(0);
    std::vector<double> out;
    out.reserve(ds.size());
    std::vector<std::size_t> rows(chunk);
    for (std::size_t begin = 0; begin < ds.size(); begin += chunk) {
        const std::size_t count = std::min(chunk, ds.size() - begin);
        std::iota(rows.begin(), rows.begin() + static_cast<long>(count), begin);
        const Tensor probs = model.forward(gather_rows(ds, rows.data(), count), false, unused);
        for (double p : probs.values()) out.push_back(std::clamp(p, kMinProbability, kMaxProbability));
    }
    return out;
}

std::string train_log_to_csv(const TrainLog& log) {
    std::ostringstream out;
    out << "epoch,loss,seconds\n";
    for (const auto& e : log.epochs) {
        out << e.epoch << ',' << format_double(e.loss) << ',' << format_double(e.seconds) << '\n';
    }
    return out.str();
}

}  // namespace hypobench::training
