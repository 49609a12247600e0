#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"

#include "hyforest/features.hpp"
#include "hyforest/mlp.hpp"
#include "hyforest/model.hpp"
#include "hyforest/physics.hpp"

namespace hyforest {

struct TrainConfig {
    ModelVariant variant = ModelVariant::C;
    int epochs = 200;
    int batch_size = 256;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    double neg_penalty_weight = 0.1;
    std::array<double, 3> split_ratios{0.6, 0.2, 0.2};
    std::vector<int> hidden_layers{64, 64};
    int profile_order = kDefaultProfileOrder;
    /// Standardize inputs with statistics from the training split.
    bool normalize_features = true;
    int threads = 1;

    void validate() const;
    std::vector<int> layer_dims() const;
};

void to_json(nlohmann::json& j, const TrainConfig& cfg);
void from_json(const nlohmann::json& j, TrainConfig& cfg);

struct LossReport {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;  ///< NaN when the validation split is empty
    double wall_time = 0.0;  ///< seconds since training start
};

struct DatasetSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
};

/// Seeded permutation of [0, n) cut by ratios (floor for train and val, remainder to test).
DatasetSplit split(std::size_t n, const std::array<double, 3>& ratios, std::uint64_t seed);

/// Splits unique pixel ids, then maps every sample to its pixel's partition.
DatasetSplit split_by_pixel(std::span<const TrainSample> samples,
                            const std::array<double, 3>& ratios, std::uint64_t seed);

/// |gamma| predicted at (h_ref, kz) with the network's profile.
double predict_coherence(const Model& model, const TrainSample& sample, const ForwardConfig& fwd);

struct LossValue {
    double value = 0.0;
    double coherence_term = 0.0;
    double penalty_term = 0.0;
    MlpGradients gradients;
};

/// Mean squared coherence mismatch plus lambda_neg times the mean squared negative part of the
/// raw profile at the quadrature nodes. The batch holds raw features; `model.normalizer` is applied.
LossValue loss(const Model& model, std::span<const TrainSample> batch, const TrainConfig& cfg,
               const ForwardConfig& fwd, bool with_gradients = true);

struct TrainResult {
    Model best;
    Model final;
    std::vector<LossReport> history;
    int best_epoch = 0;
    DatasetSplit split;
};

/// Adam on minibatches; deterministic for a given seed regardless of thread count.
/// Returns the parameters with the lowest validation loss (training loss if no validation split).
TrainResult train(std::span<const TrainSample> dataset, const TrainConfig& cfg,
                  const ForwardConfig& fwd = {});

}  // namespace hyforest
