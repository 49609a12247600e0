#include "hyforest/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

namespace hyforest {

namespace {

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

void check_cache(const MlpParams& params, const ForwardCache& cache) {
    if (cache.inputs.size() != params.weights.size() ||
        cache.params_fingerprint != fingerprint(params)) {
        throw StaleCacheError("forward cache does not belong to the current parameters");
    }
}

}  // namespace

std::size_t MlpParams::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
    }
    return n;
}

void MlpParams::validate() const {
    if (layer_dims.size() < 2) {
        throw ValidationError("network needs at least one hidden or output layer");
    }
    for (int d : layer_dims) {
        if (d < 1) {
            throw ValidationError("layer widths must be >= 1");
        }
    }
    if (weights.size() != layer_dims.size() - 1 || biases.size() != weights.size()) {
        throw DimensionError("layer count does not match layer_dims");
    }
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (weights[l].rows() != layer_dims[l + 1] || weights[l].cols() != layer_dims[l] ||
            biases[l].size() != layer_dims[l + 1]) {
            throw DimensionError("layer " + std::to_string(l) + " shape inconsistent with layer_dims");
        }
    }
}

std::uint64_t fingerprint(const MlpParams& params) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (int d : params.layer_dims) {
        h = fnv1a(h, &d, sizeof d);
    }
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        h = fnv1a(h, params.weights[l].data(),
                  static_cast<std::size_t>(params.weights[l].size()) * sizeof(double));
        h = fnv1a(h, params.biases[l].data(),
                  static_cast<std::size_t>(params.biases[l].size()) * sizeof(double));
    }
    return h;
}

MlpParams init_params(std::span<const int> layer_dims, std::uint64_t seed,
                      Activation hidden_activation) {
    MlpParams p;
    p.layer_dims.assign(layer_dims.begin(), layer_dims.end());
    p.hidden_activation = hidden_activation;
    if (p.layer_dims.size() < 2) {
        throw ValidationError("network needs at least one hidden or output layer");
    }
    for (int d : p.layer_dims) {
        if (d < 1) {
            throw ValidationError("layer widths must be >= 1");
        }
    }
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < p.layer_dims.size(); ++l) {
        const int fan_in = p.layer_dims[l];
        const int fan_out = p.layer_dims[l + 1];
        const double scale = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-scale, scale);
        Eigen::MatrixXd w(fan_out, fan_in);
        for (Eigen::Index c = 0; c < w.cols(); ++c) {
            for (Eigen::Index r = 0; r < w.rows(); ++r) {
                w(r, c) = dist(rng);
            }
        }
        p.weights.push_back(std::move(w));
        p.biases.push_back(Eigen::VectorXd::Zero(fan_out));
    }
    return p;
}

Eigen::MatrixXd forward_batch(const MlpParams& params, const Eigen::MatrixXd& x,
                              ForwardCache* cache) {
    if (x.rows() != params.input_dim()) {
        throw DimensionError("input has " + std::to_string(x.rows()) + " features, network expects " +
                             std::to_string(params.input_dim()));
    }
    if (cache) {
        cache->inputs.clear();
        cache->pre_activations.clear();
        cache->params_fingerprint = fingerprint(params);
    }
    Eigen::MatrixXd a = x;
    const int layers = params.num_layers();
    for (int l = 0; l < layers; ++l) {
        const auto& w = params.weights[static_cast<std::size_t>(l)];
        const auto& b = params.biases[static_cast<std::size_t>(l)];
        Eigen::MatrixXd z = w * a;
        z.colwise() += b;
        if (cache) {
            cache->inputs.push_back(a);
            cache->pre_activations.push_back(z);
        }
        const bool hidden = l + 1 < layers;
        if (hidden && params.hidden_activation == Activation::Tanh) {
            a = z.array().tanh().matrix();
        } else {
            a = std::move(z);
        }
    }
    return a;
}

ForwardResult forward(const MlpParams& params, std::span<const double> x) {
    const Eigen::Map<const Eigen::VectorXd> in(x.data(), static_cast<Eigen::Index>(x.size()));
    ForwardCache cache;
    Eigen::MatrixXd out = forward_batch(params, Eigen::MatrixXd(in), &cache);
    std::vector<double> values(out.data(), out.data() + out.size());
    return {ProfileCoefficients(std::move(values)), std::move(cache)};
}

MlpGradients MlpGradients::zeros_like(const MlpParams& params) {
    MlpGradients g;
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        g.weights.push_back(Eigen::MatrixXd::Zero(params.weights[l].rows(), params.weights[l].cols()));
        g.biases.push_back(Eigen::VectorXd::Zero(params.biases[l].size()));
    }
    return g;
}

std::vector<double> MlpGradients::flatten() const {
    std::vector<double> flat;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        flat.insert(flat.end(), weights[l].data(), weights[l].data() + weights[l].size());
        flat.insert(flat.end(), biases[l].data(), biases[l].data() + biases[l].size());
    }
    return flat;
}

MlpGradients backward_batch(const MlpParams& params, const ForwardCache& cache,
                            const Eigen::MatrixXd& d_outputs) {
    check_cache(params, cache);
    const int layers = params.num_layers();
    const Eigen::Index batch = cache.inputs.front().cols();
    if (d_outputs.rows() != params.output_dim() || d_outputs.cols() != batch) {
        throw DimensionError("upstream gradient shape does not match network output");
    }
    MlpGradients g;
    g.weights.resize(static_cast<std::size_t>(layers));
    g.biases.resize(static_cast<std::size_t>(layers));
    Eigen::MatrixXd delta = d_outputs;  // d loss / d pre-activation of the current layer
    for (int l = layers - 1; l >= 0; --l) {
        const auto ul = static_cast<std::size_t>(l);
        g.weights[ul] = delta * cache.inputs[ul].transpose();
        g.biases[ul] = delta.rowwise().sum();
        if (l == 0) {
            break;
        }
        Eigen::MatrixXd d_input = params.weights[ul].transpose() * delta;
        if (params.hidden_activation == Activation::Tanh) {
            // inputs[l] = tanh(pre_activations[l-1])
            const auto& a = cache.inputs[ul].array();
            delta = (d_input.array() * (1.0 - a * a)).matrix();
        } else {
            delta = std::move(d_input);
        }
    }
    return g;
}

MlpGradients backward(const MlpParams& params, const ForwardCache& cache,
                      std::span<const double> d_loss_d_coeffs) {
    const Eigen::Map<const Eigen::VectorXd> d(d_loss_d_coeffs.data(),
                                              static_cast<Eigen::Index>(d_loss_d_coeffs.size()));
    return backward_batch(params, cache, Eigen::MatrixXd(d));
}

std::vector<double> flatten_params(const MlpParams& params) {
    std::vector<double> flat;
    flat.reserve(params.parameter_count());
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        const auto& w = params.weights[l];
        const auto& b = params.biases[l];
        flat.insert(flat.end(), w.data(), w.data() + w.size());
        flat.insert(flat.end(), b.data(), b.data() + b.size());
    }
    return flat;
}

void unflatten_params(MlpParams& params, std::span<const double> flat) {
    if (flat.size() != params.parameter_count()) {
        throw DimensionError("flat parameter vector has wrong length");
    }
    std::size_t k = 0;
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        auto& w = params.weights[l];
        auto& b = params.biases[l];
        std::memcpy(w.data(), flat.data() + k, static_cast<std::size_t>(w.size()) * sizeof(double));
        k += static_cast<std::size_t>(w.size());
        std::memcpy(b.data(), flat.data() + k, static_cast<std::size_t>(b.size()) * sizeof(double));
        k += static_cast<std::size_t>(b.size());
    }
}

AdamOptimizer::AdamOptimizer(const MlpParams& params, AdamConfig cfg)
    : cfg_(cfg), m_(MlpGradients::zeros_like(params)), v_(MlpGradients::zeros_like(params)) {
    if (!(cfg_.learning_rate > 0.0)) {
        throw ValidationError("learning rate must be > 0");
    }
}

void AdamOptimizer::step(MlpParams& params, const MlpGradients& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
        m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
        v = (cfg_.beta2 * v.array() + (1.0 - cfg_.beta2) * g.array().square()).matrix();
        param.array() -= cfg_.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg_.eps);
    };
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        update(params.weights[l], m_.weights[l], v_.weights[l], grads.weights[l]);
        update(params.biases[l], m_.biases[l], v_.biases[l], grads.biases[l]);
    }
}

FeatureNormalizer FeatureNormalizer::fit(const std::vector<std::vector<double>>& samples,
                                         std::vector<std::string> names) {
    if (samples.size() < 2) {
        throw ValidationError("normalizer needs at least two samples");
    }
    const std::size_t width = samples.front().size();
    if (names.empty()) {
        for (std::size_t k = 0; k < width; ++k) {
            names.push_back("feature_" + std::to_string(k));
        }
    }
    if (names.size() != width) {
        throw DimensionError("normalizer feature names do not match sample width");
    }
    FeatureNormalizer norm;
    norm.names = std::move(names);
    norm.mean.assign(width, 0.0);
    norm.stddev.assign(width, 0.0);
    for (const auto& s : samples) {
        if (s.size() != width) {
            throw DimensionError("samples have inconsistent feature counts");
        }
        for (std::size_t k = 0; k < width; ++k) {
            norm.mean[k] += s[k];
        }
    }
    const double n = static_cast<double>(samples.size());
    for (auto& m : norm.mean) {
        m /= n;
    }
    for (const auto& s : samples) {
        for (std::size_t k = 0; k < width; ++k) {
            const double d = s[k] - norm.mean[k];
            norm.stddev[k] += d * d;
        }
    }
    for (std::size_t k = 0; k < width; ++k) {
        norm.stddev[k] = std::sqrt(norm.stddev[k] / n);
        if (!(norm.stddev[k] > 1e-12 * std::max(1.0, std::abs(norm.mean[k])))) {
            throw ValidationError("constant feature '" + norm.names[k] + "' cannot be normalized");
        }
    }
    return norm;
}

FeatureNormalizer FeatureNormalizer::identity(int width) {
    FeatureNormalizer norm;
    for (int k = 0; k < width; ++k) {
        norm.names.push_back("feature_" + std::to_string(k));
    }
    norm.mean.assign(static_cast<std::size_t>(width), 0.0);
    norm.stddev.assign(static_cast<std::size_t>(width), 1.0);
    return norm;
}

std::vector<double> FeatureNormalizer::apply(std::span<const double> x) const {
    if (x.size() != mean.size()) {
        throw DimensionError("feature vector width does not match normalizer");
    }
    std::vector<double> out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        out[k] = (x[k] - mean[k]) / stddev[k];
    }
    return out;
}

std::vector<double> FeatureNormalizer::invert(std::span<const double> x_hat) const {
    if (x_hat.size() != mean.size()) {
        throw DimensionError("feature vector width does not match normalizer");
    }
    std::vector<double> out(x_hat.size());
    for (std::size_t k = 0; k < x_hat.size(); ++k) {
        out[k] = x_hat[k] * stddev[k] + mean[k];
    }
    return out;
}

}  // namespace hyforest
