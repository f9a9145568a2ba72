#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "hypobench/models/models.hpp"
#include "hypobench/preprocess/preprocess.hpp"
#include "hypobench/resample/resample.hpp"

namespace hypobench::training {

struct TrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 1024;
    double lr = 1e-3;
    std::uint64_t seed = 7;
    bool use_smote = false;
    bool use_weighted_sampling = true;
    /// k and target ratio; the seed is derived from `seed`.
    resample::SmoteConfig smote;
    /// Rows per forward/backward pass. A batch is processed in chunks of this
    /// size and their gradients summed before the single Adam step, which
    /// gives the same update as one pass over the whole batch.
    std::size_t micro_batch = 64;
};

/// Throws ConfigError on zero epochs, batch size, micro batch or a
/// non-positive learning rate.
void validate(const TrainConfig& config);

struct EpochLog {
    std::size_t epoch = 0;  // 1-based
    /// Arithmetic mean of the batch losses. Each batch loss is the mean
    /// cross-entropy over that batch's rows.
    double loss = 0.0;
    double seconds = 0.0;
    std::size_t samples = 0;
    std::size_t positives = 0;
    std::vector<double> batch_losses;
    std::vector<std::size_t> batch_sizes;
};

struct TrainLog {
    std::vector<EpochLog> epochs;
    std::size_t train_samples = 0;
    std::size_t smote_added = 0;
};

struct TrainResult {
    std::unique_ptr<models::Model> model;
    TrainLog log;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Builds the model from `seed`, optionally oversamples once with SMOTE, then
/// runs exactly `epochs` epochs of Adam on binary cross-entropy. Each epoch
/// draws as many samples as the (resampled) training set holds: with
/// replacement under class-balancing weights, or as a seeded permutation
/// otherwise. The last short batch is kept. Throws TrainingError on
/// single-class data and NumericError naming the epoch and batch when a loss
/// is not finite.
TrainResult train(const models::ModelConfig& model_config, const prep::SequenceDataset& ds,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Smallest and largest value predict_proba returns.
inline constexpr double kMinProbability = 0x1p-1022;
inline constexpr double kMaxProbability = 1.0 - 0x1p-53;

/// Eval-mode probabilities in dataset order, clamped into
/// [kMinProbability, kMaxProbability] so that a saturated sigmoid still
/// reports a value strictly inside (0, 1). Throws ContractError when the
/// window or feature count differs from the model's.
std::vector<double> predict_proba(models::Model& model, const prep::SequenceDataset& ds,
                                  std::size_t chunk = 256);

/// `epoch,loss,seconds` with one row per epoch.
std::string train_log_to_csv(const TrainLog& log);

}  // namespace hypobench::training
