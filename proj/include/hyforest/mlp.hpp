#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hyforest/error.hpp"
#include "hyforest/legendre.hpp"

namespace hyforest {

enum class Activation { Tanh, Identity };

/// Fully connected network; weights[l] maps layer l (dims[l]) to layer l+1 (dims[l+1]).
struct MlpParams {
    std::vector<int> layer_dims;
    Activation hidden_activation = Activation::Tanh;
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    int input_dim() const { return layer_dims.front(); }
    int output_dim() const { return layer_dims.back(); }
    int num_layers() const { return static_cast<int>(weights.size()); }
    std::size_t parameter_count() const;
    void validate() const;
};

class StaleCacheError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Glorot-uniform weights, zero biases, fully determined by `seed`.
MlpParams init_params(std::span<const int> layer_dims, std::uint64_t seed,
                      Activation hidden_activation = Activation::Tanh);

/// Activations retained by a forward pass; columns are batch entries.
struct ForwardCache {
    std::vector<Eigen::MatrixXd> inputs;           ///< input to each layer
    std::vector<Eigen::MatrixXd> pre_activations;  ///< W x + b of each layer
    std::uint64_t params_fingerprint = 0;
};

/// Batched forward pass: x is input_dim x batch, result is output_dim x batch.
Eigen::MatrixXd forward_batch(const MlpParams& params, const Eigen::MatrixXd& x,
                              ForwardCache* cache = nullptr);

struct ForwardResult {
    ProfileCoefficients coeffs;
    ForwardCache cache;
};

ForwardResult forward(const MlpParams& params, std::span<const double> x);

/// Parameter-shaped gradient (or moment) storage.
struct MlpGradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    static MlpGradients zeros_like(const MlpParams& params);
    std::vector<double> flatten() const;
};

/// Gradients of a scalar loss given d loss / d outputs (output_dim x batch).
MlpGradients backward_batch(const MlpParams& params, const ForwardCache& cache,
                            const Eigen::MatrixXd& d_outputs);

MlpGradients backward(const MlpParams& params, const ForwardCache& cache,
                      std::span<const double> d_loss_d_coeffs);

/// Flat parameter view in the same order as MlpGradients::flatten (weights column-major, then bias, per layer).
std::vector<double> flatten_params(const MlpParams& params);
void unflatten_params(MlpParams& params, std::span<const double> flat);

std::uint64_t fingerprint(const MlpParams& params);

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class AdamOptimizer {
public:
    AdamOptimizer(const MlpParams& params, AdamConfig cfg);

    void step(MlpParams& params, const MlpGradients& grads);
    long steps() const noexcept { return t_; }

private:
    AdamConfig cfg_;
    MlpGradients m_;
    MlpGradients v_;
    long t_ = 0;
};

/// Per-feature standardization fit on a training split.
struct FeatureNormalizer {
    std::vector<std::string> names;
    std::vector<double> mean;
    std::vector<double> stddev;

    /// Rejects fewer than two samples and constant columns (the error names the feature).
    static FeatureNormalizer fit(const std::vector<std::vector<double>>& samples,
                                 std::vector<std::string> names = {});
    static FeatureNormalizer identity(int width);

    int width() const { return static_cast<int>(mean.size()); }
    std::vector<double> apply(std::span<const double> x) const;
    std::vector<double> invert(std::span<const double> x_hat) const;
};

}  // namespace hyforest
