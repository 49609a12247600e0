#include "hyforest/model.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "hyforest/error.hpp"

namespace hyforest {

namespace {

constexpr const char* kModelFormat = "hyforest-model";
constexpr int kModelVersion = 1;

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row.push_back(m(r, c));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, int rows, int cols) {
    if (!j.is_array() || static_cast<int>(j.size()) != rows) {
        throw ManifestError("model weight matrix has wrong row count");
    }
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<int>(row.size()) != cols) {
            throw ManifestError("model weight matrix has wrong column count");
        }
        for (int c = 0; c < cols; ++c) {
            m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
        }
    }
    return m;
}

}  // namespace

ProfileCoefficients Model::predict_coefficients(const FeatureVector& features) const {
    if (features.size() != params.input_dim()) {
        throw DimensionError("model variant " + to_string(variant) + " expects " +
                             std::to_string(params.input_dim()) + " features, got " +
                             std::to_string(features.size()));
    }
    const auto x = normalizer.apply(features.to_vector());
    return forward(params, x).coeffs;
}

void Model::validate() const {
    params.validate();
    if (params.input_dim() != feature_width(variant)) {
        throw DimensionError("network input width does not match variant " + to_string(variant));
    }
    if (normalizer.width() != params.input_dim()) {
        throw DimensionError("normalizer width does not match network input");
    }
}

void save_model(const Model& model, const std::filesystem::path& path) {
    model.validate();
    nlohmann::ordered_json j;
    j["format"] = kModelFormat;
    j["version"] = kModelVersion;
    j["variant"] = to_string(model.variant);
    j["seed"] = model.seed;
    j["input_width"] = model.params.input_dim();
    j["layer_dims"] = model.params.layer_dims;
    j["hidden_activation"] =
        model.params.hidden_activation == Activation::Tanh ? "tanh" : "identity";
    nlohmann::ordered_json layers = nlohmann::ordered_json::array();
    for (std::size_t l = 0; l < model.params.weights.size(); ++l) {
        nlohmann::ordered_json layer;
        layer["weights"] = matrix_to_json(model.params.weights[l]);
        layer["biases"] = std::vector<double>(model.params.biases[l].data(),
                                              model.params.biases[l].data() +
                                                  model.params.biases[l].size());
        layers.push_back(std::move(layer));
    }
    j["layers"] = std::move(layers);
    j["normalizer"] = {{"names", model.normalizer.names},
                       {"mean", model.normalizer.mean},
                       {"std", model.normalizer.stddev}};
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write model file " + path.string());
    }
    out << j.dump(1) << '\n';
    if (!out) {
        throw IoError("failed writing model file " + path.string());
    }
}

Model load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open model file " + path.string());
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ManifestError("malformed model file " + path.string() + ": " + e.what());
    }
    try {
        if (j.at("format") != kModelFormat || j.at("version").get<int>() != kModelVersion) {
            throw ManifestError("unsupported model format in " + path.string());
        }
        Model m;
        m.variant = parse_variant(j.at("variant").get<std::string>());
        m.seed = j.at("seed").get<std::uint64_t>();
        m.params.layer_dims = j.at("layer_dims").get<std::vector<int>>();
        const auto act = j.at("hidden_activation").get<std::string>();
        m.params.hidden_activation = act == "identity" ? Activation::Identity : Activation::Tanh;
        const auto& layers = j.at("layers");
        const auto& dims = m.params.layer_dims;
        if (dims.size() < 2 || layers.size() != dims.size() - 1) {
            throw ManifestError("model layer list inconsistent with layer_dims");
        }
        for (std::size_t l = 0; l < layers.size(); ++l) {
            m.params.weights.push_back(matrix_from_json(layers[l].at("weights"), dims[l + 1], dims[l]));
            const auto b = layers[l].at("biases").get<std::vector<double>>();
            if (static_cast<int>(b.size()) != dims[l + 1]) {
                throw ManifestError("model bias vector has wrong length");
            }
            m.params.biases.push_back(Eigen::Map<const Eigen::VectorXd>(b.data(), dims[l + 1]));
        }
        const auto& norm = j.at("normalizer");
        m.normalizer.names = norm.at("names").get<std::vector<std::string>>();
        m.normalizer.mean = norm.at("mean").get<std::vector<double>>();
        m.normalizer.stddev = norm.at("std").get<std::vector<double>>();
        m.validate();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ManifestError("malformed model file " + path.string() + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ManifestError("inconsistent model file " + path.string() + ": " + e.what());
    }
}

}  // namespace hyforest
