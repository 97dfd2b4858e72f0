#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "shapr/classifiers.hpp"
#include "shapr/cli.hpp"
#include "shapr/dataset.hpp"
#include "shapr/error.hpp"
#include "shapr/eval.hpp"
#include "shapr/gpr.hpp"
#include "shapr/simulator.hpp"
#include "shapr/spectrum.hpp"

namespace py = pybind11;
using namespace shapr;

namespace {

ml::Rows to_rows(const Eigen::MatrixXd& X) {
    ml::Rows rows;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const Eigen::RowVectorXd r = X.row(i);
        rows.emplace_back(r.data(), r.data() + r.size());
    }
    return rows;
}

template <class M>
std::vector<std::string> predict_rows(const M& model, const Eigen::MatrixXd& X) {
    std::vector<std::string> out;
    for (const auto& r : to_rows(X)) out.emplace_back(model.predict(r));
    return out;
}

Eigen::MatrixXd feature_matrix(const Dataset& d) {
    Eigen::MatrixXd F(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.feature_count()));
    for (std::size_t i = 0; i < d.size(); ++i)
        for (std::size_t j = 0; j < d.feature_count(); ++j)
            F(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d.samples[i].features.values[j];
    return F;
}

}  // namespace

PYBIND11_MODULE(_shapr, m) {
    m.doc() = "RF body-shadowing spectrum sensing: featurizer, simulator and models";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<IngestError>(m, "IngestError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    m.def(
        "band_average_power",
        [](py::bytes raw) {
            const std::string s = raw;
            IqFrame f;
            f.bytes.assign(s.begin(), s.end());
            return band_average_power(f);
        },
        py::arg("iq"), "Average power in dB of interleaved unsigned 8-bit I/Q bytes.");

    m.def("band_count", [](std::int64_t start, std::int64_t stop, std::int64_t step) {
        return BandPlan{start, stop, step}.band_count();
    }, py::arg("start_hz") = 300'000'000, py::arg("stop_hz") = 420'000'000, py::arg("step_hz") = 1'200'000);

    py::class_<Dataset>(m, "Dataset")
        .def_property_readonly("size", &Dataset::size)
        .def_property_readonly("feature_count", &Dataset::feature_count)
        .def_readonly("sensor_ids", &Dataset::sensor_ids)
        .def_readonly("bands_per_sensor", &Dataset::bands_per_sensor)
        .def_property_readonly("sample_ids", [](const Dataset& d) {
            std::vector<std::string> v;
            for (const auto& s : d.samples) v.push_back(s.sample_id);
            return v;
        })
        .def_property_readonly("labels", [](const Dataset& d) {
            std::vector<std::string> v;
            for (const auto& s : d.samples) v.push_back(s.label);
            return v;
        })
        .def_property_readonly("coords", [](const Dataset& d) -> std::optional<Eigen::MatrixXd> {
            Eigen::MatrixXd C(static_cast<Eigen::Index>(d.size()), 2);
            for (std::size_t i = 0; i < d.size(); ++i) {
                if (!d.samples[i].coords) return std::nullopt;
                C(static_cast<Eigen::Index>(i), 0) = d.samples[i].coords->x;
                C(static_cast<Eigen::Index>(i), 1) = d.samples[i].coords->y;
            }
            return C;
        })
        .def_property_readonly("features", &feature_matrix)
        .def("restrict_sensors", &Dataset::restrict_sensors, py::arg("count"))
        .def("to_csv", &dataset_to_csv)
        .def_static("from_csv", [](const std::string& text) { return dataset_from_csv(text); }, py::arg("text"))
        .def("__len__", &Dataset::size);

    m.def(
        "simulate",
        [](const std::string& task, std::size_t categories, std::size_t per_category, std::uint64_t seed, double noise) {
            const Task t = parse_task(task);
            return generate_dataset(preset_setup(t, seed, noise), t, categories, per_category, seed);
        },
        py::arg("task"), py::arg("categories"), py::arg("per_category") = 20, py::arg("seed") = 42,
        py::arg("noise_db") = 1.0);

    py::class_<SplitManifest>(m, "Split")
        .def_readonly("train_ids", &SplitManifest::train_ids)
        .def_readonly("test_ids", &SplitManifest::test_ids)
        .def("to_text", &manifest_to_text);
    m.def("stratified_split", &stratified_split, py::arg("dataset"), py::arg("train_fraction") = 0.7,
          py::arg("seed") = 42);
    m.def("location_holdout_split", &location_holdout_split, py::arg("dataset"), py::arg("holdout") = 3,
          py::arg("seed") = 42);

    m.def(
        "run_experiment",
        [](const Dataset& d, const SplitManifest& split, const std::string& model, std::uint64_t seed) {
            const auto rep = eval::run_experiment(d, split, eval::parse_model_kind(model), {}, seed);
            py::dict out;
            out["n_train"] = rep.n_train;
            out["n_test"] = rep.rows.size();
            if (rep.confusion) out["accuracy"] = rep.accuracy();
            if (rep.mean_error_m) out["mean_error_m"] = *rep.mean_error_m;
            out["report_csv"] = rep.to_csv();
            return out;
        },
        py::arg("dataset"), py::arg("split"), py::arg("model"), py::arg("seed") = 42);

    m.def(
        "receiver_ablation",
        [](const Dataset& d, const SplitManifest& split, const std::string& model, std::vector<std::size_t> counts,
           std::uint64_t seed) {
            std::vector<std::pair<std::size_t, double>> out;
            for (const auto& p : eval::receiver_ablation(d, split, eval::parse_model_kind(model), counts, {}, seed).points)
                out.emplace_back(p.sensors, p.accuracy);
            return out;
        },
        py::arg("dataset"), py::arg("split"), py::arg("model"), py::arg("sensor_counts"), py::arg("seed") = 42);

    py::class_<ml::KnnModel>(m, "KNN")
        .def_static("fit", [](const Eigen::MatrixXd& X, const std::vector<std::string>& y, std::size_t k,
                              bool normalize) { return ml::KnnModel::fit(to_rows(X), y, k, normalize); },
                    py::arg("X"), py::arg("y"), py::arg("k") = ml::KnnModel::kDefaultK, py::arg("normalize") = true)
        .def("predict", &predict_rows<ml::KnnModel>, py::arg("X"));

    py::class_<ml::RandomForest>(m, "RandomForest")
        .def_static("fit", [](const Eigen::MatrixXd& X, const std::vector<std::string>& y, std::size_t trees,
                              std::uint64_t seed) {
            ml::ForestParams p;
            p.trees = trees;
            return ml::RandomForest::fit(to_rows(X), y, p, seed);
        }, py::arg("X"), py::arg("y"), py::arg("trees") = 100, py::arg("seed") = 42)
        .def("predict", &predict_rows<ml::RandomForest>, py::arg("X"));

    py::class_<gpr::Model>(m, "GaussianProcess")
        .def_static("fit", [](const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, double sigma, double length_scale,
                              double jitter, bool center) {
            return gpr::Model::fit(X, Y, {sigma, length_scale, jitter}, std::nullopt,
                                   center ? gpr::PriorMean::training_mean : gpr::PriorMean::zero);
        }, py::arg("X"), py::arg("Y"), py::arg("sigma") = 1.0, py::arg("length_scale") = 1.0,
           py::arg("jitter") = 1e-6, py::arg("center") = true)
        .def("predict", [](const gpr::Model& g, const Eigen::MatrixXd& Q) { return g.predict_mean(Q); }, py::arg("X"));

    m.def("log_marginal_likelihood", [](const Eigen::MatrixXd& X, const Eigen::MatrixXd& Yc, double sigma,
                                        double length_scale, double jitter) {
        return gpr::log_marginal_likelihood(X, Yc, {sigma, length_scale, jitter});
    }, py::arg("X"), py::arg("Y_centered"), py::arg("sigma"), py::arg("length_scale"), py::arg("jitter") = 0.0);

    m.def("fit_mle", [](const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
        const auto f = gpr::fit_mle(X, Y);
        return py::make_tuple(f.hp.sigma, f.hp.length_scale, f.hp.jitter, f.lml);
    }, py::arg("X"), py::arg("Y"), "Returns (sigma, length_scale, jitter, log marginal likelihood).");

    m.def(
        "cli",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "shapr");
            std::vector<const char*> argv;
            for (const auto& a : args) argv.push_back(a.c_str());
            std::ostringstream out, err;
            const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command line tool in-process; returns (exit code, stdout, stderr).");
}
