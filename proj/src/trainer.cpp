#include "hyforest/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "hyforest/error.hpp"
#include "hyforest/parallel.hpp"

namespace hyforest {

void TrainConfig::validate() const {
    if (epochs < 1) {
        throw ValidationError("train.epochs must be >= 1");
    }
    if (batch_size < 1) {
        throw ValidationError("train.batch_size must be >= 1");
    }
    if (!(learning_rate > 0.0)) {
        throw ValidationError("train.learning_rate must be > 0");
    }
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
        throw ValidationError("train.adam_beta1/adam_beta2 must lie in [0, 1)");
    }
    if (!(adam_eps > 0.0)) {
        throw ValidationError("train.adam_eps must be > 0");
    }
    if (!(neg_penalty_weight >= 0.0)) {
        throw ValidationError("train.neg_penalty_weight must be >= 0");
    }
    if (profile_order < 1) {
        throw ValidationError("train.profile_order must be >= 1");
    }
    for (int w : hidden_layers) {
        if (w < 1) {
            throw ValidationError("train.hidden_layers widths must be >= 1");
        }
    }
    double sum = 0.0;
    for (double r : split_ratios) {
        if (!(r >= 0.0)) {
            throw ValidationError("train.split_ratios must be nonnegative");
        }
        sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ValidationError("train.split_ratios must sum to 1");
    }
}

std::vector<int> TrainConfig::layer_dims() const {
    std::vector<int> dims{feature_width(variant)};
    dims.insert(dims.end(), hidden_layers.begin(), hidden_layers.end());
    dims.push_back(profile_order);
    return dims;
}

void to_json(nlohmann::json& j, const TrainConfig& cfg) {
    j = nlohmann::json{{"variant", to_string(cfg.variant)},
                       {"epochs", cfg.epochs},
                       {"batch_size", cfg.batch_size},
                       {"learning_rate", cfg.learning_rate},
                       {"adam_beta1", cfg.adam_beta1},
                       {"adam_beta2", cfg.adam_beta2},
                       {"adam_eps", cfg.adam_eps},
                       {"seed", cfg.seed},
                       {"neg_penalty_weight", cfg.neg_penalty_weight},
                       {"split_ratios", cfg.split_ratios},
                       {"hidden_layers", cfg.hidden_layers},
                       {"profile_order", cfg.profile_order},
                       {"normalize_features", cfg.normalize_features}};
}

void from_json(const nlohmann::json& j, TrainConfig& cfg) {
    if (j.contains("variant")) {
        cfg.variant = parse_variant(j.at("variant").get<std::string>());
    }
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) {
            j.at(key).get_to(field);
        }
    };
    get("epochs", cfg.epochs);
    get("batch_size", cfg.batch_size);
    get("learning_rate", cfg.learning_rate);
    get("adam_beta1", cfg.adam_beta1);
    get("adam_beta2", cfg.adam_beta2);
    get("adam_eps", cfg.adam_eps);
    get("seed", cfg.seed);
    get("neg_penalty_weight", cfg.neg_penalty_weight);
    get("split_ratios", cfg.split_ratios);
    get("hidden_layers", cfg.hidden_layers);
    get("profile_order", cfg.profile_order);
    get("normalize_features", cfg.normalize_features);
}

DatasetSplit split(std::size_t n, const std::array<double, 3>& ratios, std::uint64_t seed) {
    double sum = 0.0;
    for (double r : ratios) {
        if (!(r >= 0.0)) {
            throw ValidationError("split ratios must be nonnegative");
        }
        sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ValidationError("split ratios must sum to 1");
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);

    std::array<std::size_t, 3> sizes{};
    const double nd = static_cast<double>(n);
    sizes[0] = static_cast<std::size_t>(std::floor(ratios[0] * nd + 1e-9));
    sizes[1] = std::min(n - sizes[0], static_cast<std::size_t>(std::floor(ratios[1] * nd + 1e-9)));
    const std::size_t rest = n - sizes[0] - sizes[1];
    // Remainder goes to the last partition with a positive share.
    int sink = 2;
    while (sink > 0 && ratios[static_cast<std::size_t>(sink)] == 0.0) {
        --sink;
    }
    sizes[static_cast<std::size_t>(sink)] += rest;
    static constexpr const char* kNames[] = {"train", "validation", "test"};
    for (std::size_t k = 0; k < 3; ++k) {
        if (ratios[k] > 0.0 && sizes[k] == 0) {
            throw ValidationError(std::string("empty ") + kNames[k] + " partition for " +
                                  std::to_string(n) + " items");
        }
    }
    DatasetSplit out;
    auto it = perm.begin();
    out.train.assign(it, it + static_cast<std::ptrdiff_t>(sizes[0]));
    it += static_cast<std::ptrdiff_t>(sizes[0]);
    out.val.assign(it, it + static_cast<std::ptrdiff_t>(sizes[1]));
    it += static_cast<std::ptrdiff_t>(sizes[1]);
    out.test.assign(it, perm.end());
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.val.begin(), out.val.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

DatasetSplit split_by_pixel(std::span<const TrainSample> samples,
                            const std::array<double, 3>& ratios, std::uint64_t seed) {
    std::map<std::int64_t, std::size_t> pixel_slot;
    for (const auto& s : samples) {
        pixel_slot.emplace(s.pixel_id, 0);
    }
    std::size_t k = 0;
    for (auto& [pixel, slot] : pixel_slot) {
        slot = k++;
    }
    const auto parts = split(pixel_slot.size(), ratios, seed);
    std::vector<int> owner(pixel_slot.size(), 0);
    for (auto i : parts.val) {
        owner[i] = 1;
    }
    for (auto i : parts.test) {
        owner[i] = 2;
    }
    DatasetSplit out;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        switch (owner[pixel_slot.at(samples[i].pixel_id)]) {
            case 0: out.train.push_back(i); break;
            case 1: out.val.push_back(i); break;
            default: out.test.push_back(i); break;
        }
    }
    return out;
}

double predict_coherence(const Model& model, const TrainSample& sample, const ForwardConfig& fwd) {
    const auto coeffs = model.predict_coefficients(sample.features);
    return coherence_mag_and_grads(coeffs, sample.h_ref, sample.kz, fwd).magnitude;
}

LossValue loss(const Model& model, std::span<const TrainSample> batch, const TrainConfig& cfg,
               const ForwardConfig& fwd, bool with_gradients) {
    if (batch.empty()) {
        throw ValidationError("loss requires a non-empty batch");
    }
    fwd.validate();
    const int width = model.params.input_dim();
    const auto b_count = static_cast<Eigen::Index>(batch.size());
    Eigen::MatrixXd x(width, b_count);
    for (Eigen::Index b = 0; b < b_count; ++b) {
        const auto& s = batch[static_cast<std::size_t>(b)];
        if (s.features.size() != width) {
            throw DimensionError("sample has " + std::to_string(s.features.size()) +
                                 " features, model expects " + std::to_string(width));
        }
        const auto xn = model.normalizer.apply(s.features.to_vector());
        for (int k = 0; k < width; ++k) {
            x(k, b) = xn[static_cast<std::size_t>(k)];
        }
    }
    ForwardCache cache;
    const Eigen::MatrixXd coeffs = forward_batch(model.params, x, with_gradients ? &cache : nullptr);
    const int order = model.params.output_dim();
    const auto& table = legendre_node_table(fwd.quad_nodes, order);
    const int m = fwd.quad_nodes;
    const double inv_b = 1.0 / static_cast<double>(b_count);
    const double lambda = cfg.neg_penalty_weight;

    std::vector<double> coherence_sq(static_cast<std::size_t>(b_count));
    std::vector<double> penalty(static_cast<std::size_t>(b_count));
    Eigen::MatrixXd d_out = Eigen::MatrixXd::Zero(order, b_count);

    parallel_for(static_cast<std::size_t>(b_count), cfg.threads, [&](std::size_t ub) {
        const auto b = static_cast<Eigen::Index>(ub);
        const auto& s = batch[ub];
        const std::span<const double> a(coeffs.col(b).data(), static_cast<std::size_t>(order));
        const auto profile = sample_profile(a, fwd);
        const auto g = coherence_mag_and_grads(profile, table, order, s.h_ref, s.kz, fwd);
        const double r = g.magnitude - s.coh_obs_mag;
        coherence_sq[ub] = r * r;
        double pen = 0.0;
        std::vector<double> d_pen(static_cast<std::size_t>(order), 0.0);
        for (int j = 0; j < m; ++j) {
            const double neg = std::min(profile.raw[static_cast<std::size_t>(j)], 0.0);
            if (neg == 0.0) {
                continue;
            }
            pen += neg * neg;
            const double* row = table.data() + static_cast<std::size_t>(j * order);
            for (int n = 0; n < order; ++n) {
                d_pen[static_cast<std::size_t>(n)] += 2.0 * neg * row[n];
            }
        }
        penalty[ub] = pen / m;
        if (with_gradients) {
            for (int n = 0; n < order; ++n) {
                const auto un = static_cast<std::size_t>(n);
                d_out(n, b) = inv_b * (2.0 * r * g.d_coeffs[un] + lambda * d_pen[un] / m);
            }
        }
    });

    LossValue out;
    for (std::size_t b = 0; b < coherence_sq.size(); ++b) {
        out.coherence_term += coherence_sq[b];
        out.penalty_term += penalty[b];
    }
    out.coherence_term *= inv_b;
    out.penalty_term *= inv_b;
    out.value = out.coherence_term + lambda * out.penalty_term;
    if (with_gradients) {
        out.gradients = backward_batch(model.params, cache, d_out);
    }
    return out;
}

TrainResult train(std::span<const TrainSample> dataset, const TrainConfig& cfg,
                  const ForwardConfig& fwd) {
    cfg.validate();
    fwd.validate();
    if (dataset.empty()) {
        throw ValidationError("training dataset is empty");
    }
    const int width = feature_width(cfg.variant);
    for (const auto& s : dataset) {
        if (s.features.size() != width) {
            throw DimensionError("variant " + to_string(cfg.variant) + " expects " +
                                 std::to_string(width) + " features, sample has " +
                                 std::to_string(s.features.size()));
        }
        s.validate();
    }
    const auto start = std::chrono::steady_clock::now();

    TrainResult result;
    result.split = split_by_pixel(dataset, cfg.split_ratios, cfg.seed);
    std::vector<TrainSample> train_set;
    std::vector<TrainSample> val_set;
    for (auto i : result.split.train) {
        train_set.push_back(dataset[i]);
    }
    for (auto i : result.split.val) {
        val_set.push_back(dataset[i]);
    }

    Model model;
    model.variant = cfg.variant;
    model.seed = cfg.seed;
    const auto dims = cfg.layer_dims();
    model.params = init_params(dims, cfg.seed);
    if (cfg.normalize_features) {
        std::vector<std::vector<double>> rows;
        rows.reserve(train_set.size());
        for (const auto& s : train_set) {
            rows.push_back(s.features.to_vector());
        }
        model.normalizer = FeatureNormalizer::fit(rows, feature_names(cfg.variant));
    } else {
        model.normalizer = FeatureNormalizer::identity(width);
        model.normalizer.names = feature_names(cfg.variant);
    }

    AdamOptimizer optimizer(model.params, {cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2,
                                           cfg.adam_eps});
    std::mt19937_64 shuffle_rng(cfg.seed ^ 0x5deece66dULL);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<TrainSample> batch;
    batch.reserve(static_cast<std::size_t>(cfg.batch_size));

    double best = std::numeric_limits<double>::infinity();
    result.best = model;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double epoch_sum = 0.0;
        for (std::size_t begin = 0; begin < order.size();
             begin += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
            batch.clear();
            for (std::size_t k = begin; k < end; ++k) {
                batch.push_back(train_set[order[k]]);
            }
            auto lv = loss(model, batch, cfg, fwd, true);
            if (!std::isfinite(lv.value)) {
                throw DivergenceError("training loss became non-finite at epoch " +
                                      std::to_string(epoch));
            }
            epoch_sum += lv.value * static_cast<double>(batch.size());
            optimizer.step(model.params, lv.gradients);
        }
        LossReport report;
        report.epoch = epoch;
        report.train_loss = epoch_sum / static_cast<double>(train_set.size());
        report.val_loss = val_set.empty() ? std::numeric_limits<double>::quiet_NaN()
                                          : loss(model, val_set, cfg, fwd, false).value;
        if (!val_set.empty() && !std::isfinite(report.val_loss)) {
            throw DivergenceError("validation loss became non-finite at epoch " +
                                  std::to_string(epoch));
        }
        report.wall_time =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        result.history.push_back(report);
        const double score = val_set.empty() ? report.train_loss : report.val_loss;
        if (score < best) {
            best = score;
            result.best = model;
            result.best_epoch = epoch;
        }
    }
    result.final = std::move(model);
    return result;
}

}  // namespace hyforest
