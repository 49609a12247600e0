#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hyforest/error.hpp"
#include "hyforest/inverter.hpp"
#include "hyforest/metrics.hpp"
#include "hyforest/model.hpp"
#include "hyforest/physics.hpp"
#include "hyforest/raster.hpp"
#include "hyforest/run_config.hpp"
#include "hyforest/simulator.hpp"
#include "hyforest/trainer.hpp"

namespace py = pybind11;
using namespace hyforest;

namespace {

nlohmann::json parse(const std::string& text) {
    try {
        return text.empty() ? nlohmann::json::object() : nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad json: ") + e.what());
    }
}

template <class T>
T from_text(const std::string& text) {
    try {
        T value{};
        from_json(parse(text), value);
        return value;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(e.what());
    }
}

py::array_t<float> band_array(const SceneBundle& b, const std::string& name) {
    const auto& band = b.band(name);
    py::array_t<float> out({b.grid().rows, b.grid().cols});
    std::copy(band.data.begin(), band.data.end(), out.mutable_data());
    return out;
}

std::vector<float> flat(const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
    return {a.data(), a.data() + a.size()};
}

py::dict result_dict(const InversionResult& r) {
    py::dict d;
    d["h_v"] = r.h_v ? py::cast(*r.h_v) : py::none();
    d["residual"] = r.residual;
    d["flags"] = r.flags;
    d["coeffs"] = std::vector<double>(r.coeffs.values().begin(), r.coeffs.values().end());
    return d;
}

FeatureVector make_features(double kz, double coh, double theta0, double theta_loc, double alpha,
                            std::optional<std::array<double, 4>> bands) {
    FeatureVector f;
    f.kz = kz;
    f.coh_mag = coh;
    f.theta0 = theta0;
    f.theta_loc = theta_loc;
    f.alpha = alpha;
    f.bands = bands;
    return f;
}

}  // namespace

PYBIND11_MODULE(_hyforest, m) {
    m.doc() = "Structure-aware forest height inversion from single-baseline InSAR coherence";

    static py::exception<Error> base(m, "HyforestError");
    static py::exception<ValidationError> validation(m, "ValidationError", PyExc_ValueError);
    static py::exception<IoError> io(m, "IoError", PyExc_OSError);
    static py::exception<NumericError> numeric(m, "NumericError", PyExc_ArithmeticError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) {
                std::rethrow_exception(p);
            }
        } catch (const ValidationError& e) {
            py::set_error(validation, e.what());
        } catch (const IoError& e) {
            py::set_error(io, e.what());
        } catch (const NumericError& e) {
            py::set_error(numeric, e.what());
        } catch (const Error& e) {
            py::set_error(base, e.what());
        }
    });

    m.def("height_of_ambiguity", &height_of_ambiguity, py::arg("kz"));
    m.def(
        "vertical_wavenumber",
        [](double hoa, double theta0_deg, double slope_rad) {
            const auto g = AcquisitionGeometry::from_height_of_ambiguity(hoa, theta0_deg * M_PI / 180.0);
            return vertical_wavenumber(g, slope_rad);
        },
        py::arg("hoa"), py::arg("theta0_deg"), py::arg("slope") = 0.0,
        "kz (rad/m) of the acquisition with flat-terrain height of ambiguity `hoa` on a range slope (rad).");
    m.def(
        "volume_coherence",
        [](const std::vector<double>& coeffs, double h_v, double kz, int quad_nodes) {
            ForwardConfig fwd;
            fwd.quad_nodes = quad_nodes;
            return volume_coherence(ProfileCoefficients(coeffs), h_v, kz, fwd);
        },
        py::arg("coeffs"), py::arg("h_v"), py::arg("kz"), py::arg("quad_nodes") = 64);
    m.def(
        "invert_profile",
        [](const std::vector<double>& coeffs, double kz, double coh, const std::string& inversion) {
            return result_dict(invert_profile(ProfileCoefficients(coeffs), kz, coh,
                                              from_text<InversionConfig>(inversion), ForwardConfig{}));
        },
        py::arg("coeffs"), py::arg("kz"), py::arg("coh"), py::arg("inversion") = "");

    py::class_<SceneBundle>(m, "SceneBundle")
        .def(py::init([](int rows, int cols, double pixel_size) {
                 GridDef g;
                 g.rows = rows;
                 g.cols = cols;
                 g.pixel_size = pixel_size;
                 g.validate();
                 return SceneBundle(g);
             }),
             py::arg("rows"), py::arg("cols"), py::arg("pixel_size") = 20.0)
        .def_property_readonly("rows", [](const SceneBundle& b) { return b.grid().rows; })
        .def_property_readonly("cols", [](const SceneBundle& b) { return b.grid().cols; })
        .def_property_readonly("nodata", [](const SceneBundle& b) { return b.grid().nodata; })
        .def_property_readonly("acquisition_count", &SceneBundle::acquisition_count)
        .def_property_readonly("attributes", [](const SceneBundle& b) { return b.attributes.dump(); })
        .def("band_names",
             [](const SceneBundle& b) {
                 std::vector<std::string> names;
                 for (const auto& band : b.bands()) {
                     names.push_back(band.name);
                 }
                 return names;
             })
        .def("has_band", &SceneBundle::has_band)
        .def("band", &band_array, py::arg("name"), "Copy of a band as a (rows, cols) float32 array.")
        .def(
            "add_band",
            [](SceneBundle& b, std::string name, std::string units,
               const py::array_t<float, py::array::c_style | py::array::forcecast>& data) {
                b.add_band(std::move(name), std::move(units), flat(data));
            },
            py::arg("name"), py::arg("units"), py::arg("data"))
        .def(
            "set_band",
            [](SceneBundle& b, const std::string& name,
               const py::array_t<float, py::array::c_style | py::array::forcecast>& data) {
                auto values = flat(data);
                auto& band = b.band(name);
                if (values.size() != band.data.size()) {
                    throw DimensionError("band " + name + " expects " + std::to_string(band.data.size()) + " values");
                }
                band.data = std::move(values);
            },
            py::arg("name"), py::arg("data"))
        .def("write", [](const SceneBundle& b, const std::filesystem::path& dir) { write_bundle(b, dir); });

    m.def("read_bundle", &read_bundle, py::arg("path"));
    m.def(
        "select_acquisitions",
        [](const SceneBundle& b, const std::vector<int>& acqs) { return select_acquisitions(b, acqs); },
        py::arg("bundle"), py::arg("acquisitions"));

    m.def(
        "generate_scene",
        [](const std::string& spec, int threads) {
            return generate_scene(from_text<SceneSpec>(spec), ForwardConfig{}, threads);
        },
        py::arg("spec") = "", py::arg("threads") = 1, py::call_guard<py::gil_scoped_release>());
    m.def(
        "generate_ambiguity_benchmark",
        [](const std::string& spec, int n_pairs) {
            auto bench = generate_ambiguity_benchmark(from_text<SceneSpec>(spec), n_pairs);
            py::list pairs;
            for (const auto& p : bench.pairs) {
                py::dict d;
                d["a"] = py::make_tuple(p.a_row, p.a_col);
                d["b"] = py::make_tuple(p.b_row, p.b_col);
                d["matched_kz"] = p.matched_kz;
                d["acquisition"] = p.acquisition;
                d["h_a"] = p.h_a;
                d["h_b"] = p.h_b;
                pairs.append(d);
            }
            return py::make_tuple(std::move(bench.bundle), pairs);
        },
        py::arg("spec") = "", py::arg("n_pairs"));

    py::class_<Model>(m, "Model")
        .def_property_readonly("variant", [](const Model& md) { return to_string(md.variant); })
        .def_property_readonly("input_width", [](const Model& md) { return feature_width(md.variant); })
        .def(
            "predict_coefficients",
            [](const Model& md, double kz, double coh, double theta0, double theta_loc, double alpha,
               std::optional<std::array<double, 4>> bands) {
                const auto c = md.predict_coefficients(make_features(kz, coh, theta0, theta_loc, alpha, bands));
                return std::vector<double>(c.values().begin(), c.values().end());
            },
            py::arg("kz"), py::arg("coh"), py::arg("theta0"), py::arg("theta_loc"), py::arg("alpha"),
            py::arg("bands") = std::nullopt)
        .def("save", [](const Model& md, const std::filesystem::path& p) { save_model(md, p); });
    m.def("load_model", &load_model, py::arg("path"));

    m.def(
        "train",
        [](const std::vector<SceneBundle>& scenes, const std::string& config) {
            const auto cfg = from_text<TrainConfig>(config);
            std::vector<TrainSample> samples;
            for (const auto& s : scenes) {
                std::vector<int> acqs(static_cast<std::size_t>(s.acquisition_count()));
                for (std::size_t k = 0; k < acqs.size(); ++k) {
                    acqs[k] = static_cast<int>(k);
                }
                auto part = assemble_samples(s, acqs, cfg.variant);
                samples.insert(samples.end(), part.begin(), part.end());
            }
            const auto r = [&] {
                py::gil_scoped_release release;
                return train(samples, cfg);
            }();
            py::list history;
            for (const auto& h : r.history) {
                history.append(py::make_tuple(h.epoch, h.train_loss, h.val_loss));
            }
            py::dict out;
            out["best"] = r.best;
            out["final"] = r.final;
            out["best_epoch"] = r.best_epoch;
            out["history"] = history;
            out["samples"] = samples.size();
            return out;
        },
        py::arg("scenes"), py::arg("config") = "",
        "Trains on every acquisition of the given bundles; returns best/final models and the loss history.");

    m.def(
        "invert_scene",
        [](const Model& md, const SceneBundle& b, int acq, const std::string& inversion, int threads) {
            return invert_scene(md, b, acq, from_text<InversionConfig>(inversion), ForwardConfig{}, threads);
        },
        py::arg("model"), py::arg("scene"), py::arg("acq") = 0, py::arg("inversion") = "", py::arg("threads") = 1,
        py::call_guard<py::gil_scoped_release>());
    m.def(
        "invert_scene_oracle",
        [](const SceneBundle& b, int acq, const std::string& inversion, int threads) {
            return invert_scene_oracle(b, acq, from_text<InversionConfig>(inversion), ForwardConfig{}, threads);
        },
        py::arg("scene"), py::arg("acq") = 0, py::arg("inversion") = "", py::arg("threads") = 1,
        py::call_guard<py::gil_scoped_release>());

    m.def("rmse", [](const std::vector<double>& e, const std::vector<double>& r) { return rmse(e, r); });
    m.def("mae", [](const std::vector<double>& e, const std::vector<double>& r) { return mae(e, r); });
    m.def("r2", [](const std::vector<double>& e, const std::vector<double>& r) { return r2(e, r); });
}
