// Python bindings. Tensors cross the boundary as 3-d numpy arrays indexed
// [i1, i2, i3]; matrices as 2-d arrays.

#include "esnt/classify.hpp"
#include "esnt/data.hpp"
#include "esnt/esn.hpp"
#include "esnt/harness.hpp"
#include "esnt/numlin.hpp"
#include "esnt/tucker.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace esnt;

namespace {

using FArray = py::array_t<double, py::array::f_style | py::array::forcecast>;

Tensor3 to_tensor(const FArray& a)
{
    if (a.ndim() != 3) throw std::invalid_argument("expected a 3-d array");
    const Dims3 d{a.shape(0), a.shape(1), a.shape(2)};
    return Tensor3(d, std::vector<double>(a.data(), a.data() + a.size()));
}

py::array_t<double> to_numpy(const Tensor3& t)
{
    const Dims3& d = t.dims();
    const auto s = static_cast<py::ssize_t>(sizeof(double));
    py::array_t<double> out({d.i1, d.i2, d.i3}, {s, s * d.i1, s * d.i1 * d.i2});
    std::copy(t.values().begin(), t.values().end(), out.mutable_data());
    return out;
}

Mode to_mode(int m)
{
    if (m < 1 || m > 3) throw std::invalid_argument("mode must be 1, 2 or 3");
    return static_cast<Mode>(m);
}

py::dict dataset_dict(const data::Dataset& d)
{
    py::list inputs;
    py::list labels;
    py::list pointwise;
    py::list ids;
    for (const auto& s : d.samples) {
        inputs.append(s.input);
        labels.append(s.label);
        pointwise.append(s.pointwise_labels);
        ids.append(s.id);
    }
    py::dict out;
    out["inputs"] = inputs;
    out["labels"] = labels;
    out["pointwise_labels"] = pointwise;
    out["ids"] = ids;
    out["classes"] = d.classes;
    out["name"] = d.name;
    return out;
}

}  // namespace

PYBIND11_MODULE(_esnt, m)
{
    m.doc() = "Echo state network classification with output weights or Tucker-2 tensor decompositions";

    py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
    py::register_exception<SingularSystemError>(m, "SingularSystemError", PyExc_ArithmeticError);
    py::register_exception<data::FormatError>(m, "FormatError", PyExc_ValueError);

    // tensor core
    m.def("mode_product", [](const FArray& t, const Matrix& b, int mode) {
        return to_numpy(mode_product(to_tensor(t), b, to_mode(mode)));
    }, py::arg("t"), py::arg("m"), py::arg("mode"));
    m.def("unfold", [](const FArray& t, int mode) { return unfold(to_tensor(t), to_mode(mode)); },
          py::arg("t"), py::arg("mode"));
    m.def("fold", [](const Matrix& a, int mode, std::array<Index, 3> dims) {
        return to_numpy(fold(a, to_mode(mode), Dims3{dims[0], dims[1], dims[2]}));
    }, py::arg("m"), py::arg("mode"), py::arg("dims"));
    m.def("inner", [](const FArray& a, const FArray& b) { return inner(to_tensor(a), to_tensor(b)); });
    m.def("fro_norm", [](const FArray& a) { return fro_norm(to_tensor(a)); });

    // numerics
    m.def("truncated_svd", [](const Matrix& a, Index r) {
        const SvdResult s = truncated_svd(a, r);
        return py::make_tuple(s.left_vectors, s.singular_values);
    }, py::arg("m"), py::arg("r"), "Returns (left_vectors, singular_values).");
    m.def("ridge_solve", &ridge_solve, py::arg("x"), py::arg("y"), py::arg("lam"));

    // reservoir
    py::enum_<Activation>(m, "Activation")
        .value("tanh", Activation::Tanh)
        .value("sin", Activation::Sin)
        .value("identity", Activation::Identity);

    py::class_<Reservoir>(m, "Reservoir")
        .def(py::init([](Index nodes, Index inputs, double density, double scale_in, double spectral_radius,
                         double alpha, double beta, const std::string& activation, std::uint64_t seed) {
                 ReservoirParams p;
                 p.nodes = nodes;
                 p.inputs = inputs;
                 p.density = density;
                 p.scale_in = scale_in;
                 p.spectral_radius = spectral_radius;
                 p.alpha = alpha;
                 p.beta = beta;
                 p.activation = parse_activation(activation);
                 p.seed = seed;
                 return make_reservoir(p);
             }),
             py::arg("nodes"), py::arg("inputs"), py::arg("density") = 0.1, py::arg("scale_in") = 1.0,
             py::arg("spectral_radius") = 0.95, py::arg("alpha") = 1.0, py::arg("beta") = 0.0,
             py::arg("activation") = "tanh", py::arg("seed") = 0)
        .def_readonly("w_in", &Reservoir::w_in)
        .def_readonly("w_res", &Reservoir::w_res)
        .def_property_readonly("nodes", &Reservoir::nodes)
        .def_property_readonly("inputs", &Reservoir::inputs)
        .def("run", [](const Reservoir& r, const Matrix& input, std::optional<Vector> x0) { return run(r, input, x0); },
             py::arg("input"), py::arg("x0") = py::none());
    m.def("spectral_radius", &spectral_radius);
    m.def("stack_states", [](const std::vector<Matrix>& states) { return to_numpy(stack_states(states)); });

    // tucker
    py::class_<TuckerModel>(m, "TuckerModel")
        .def_readonly("u", &TuckerModel::u)
        .def_readonly("v", &TuckerModel::v)
        .def_property_readonly("core", [](const TuckerModel& t) { return to_numpy(t.core); })
        .def_readonly("slice_labels", &TuckerModel::slice_labels)
        .def_readonly("converged", &TuckerModel::converged)
        .def_readonly("iterations", &TuckerModel::iterations)
        .def("project", [](const TuckerModel& t, const Matrix& x) { return project_core(x, t); })
        .def("reconstruct", [](const TuckerModel& t) { return to_numpy(reconstruct(t)); })
        .def("save", [](const TuckerModel& t, const std::filesystem::path& p) { save_model(t, p); })
        .def_static("load", [](const std::filesystem::path& p) { return load_model(p); });

    m.def("hooi", [](const FArray& x, Index j1, Index j2, const std::vector<int>& labels, double tol, int max_iters,
                     std::uint64_t seed) {
        HooiConfig cfg{{j1, j2}, tol, max_iters, seed};
        return hooi(to_tensor(x), cfg, labels);
    }, py::arg("x"), py::arg("j1"), py::arg("j2"), py::arg("labels"), py::arg("tol") = 1e-6,
          py::arg("max_iters") = 100, py::arg("seed") = 0);

    // classification
    py::class_<OutputWeights>(m, "OutputWeights")
        .def_readonly("w", &OutputWeights::w)
        .def_readonly("lam", &OutputWeights::lambda);
    py::class_<Prediction>(m, "Prediction")
        .def_readonly("label", &Prediction::label)
        .def_readonly("scores", &Prediction::scores)
        .def_readonly("tie", &Prediction::tie);

    m.def("train_output_weights", [](const FArray& x, const std::vector<int>& labels, int classes, double lam,
                                     const std::vector<int>& pointwise) {
        return train_output_weights(to_tensor(x), labels, classes, lam, pointwise);
    }, py::arg("x"), py::arg("labels"), py::arg("classes"), py::arg("lam"),
          py::arg("pointwise_labels") = std::vector<int>{});
    m.def("classify_pointwise", &classify_pointwise, py::arg("w"), py::arg("x"), py::arg("t"));
    m.def("classify_block", py::overload_cast<const OutputWeights&, const Matrix&>(&classify_block),
          py::arg("w"), py::arg("x"));
    m.def("classify_global_tensor", &classify_global_tensor, py::arg("x"), py::arg("model"));
    m.def("classify_perclass_tensor", [](const Matrix& x, const std::vector<TuckerModel>& models) {
        return classify_perclass_tensor(x, models);
    }, py::arg("x"), py::arg("models"));

    // data
    m.def("gen_sine_square", [](int patterns, int segments, int length, std::uint64_t seed) {
        return dataset_dict(data::gen_sine_square(patterns, segments, length, seed));
    }, py::arg("patterns"), py::arg("segments"), py::arg("segment_len") = 100, py::arg("seed") = 0);
    m.def("load_jv", [](const std::filesystem::path& train, const std::filesystem::path& test, Index steps,
                        bool bias_rows) {
        data::JvOptions opts;
        opts.resample_steps = steps;
        opts.append_bias_rows = bias_rows;
        auto [a, b] = data::load_jv(train, test, opts);
        return py::make_tuple(dataset_dict(a), dataset_dict(b));
    }, py::arg("train_path"), py::arg("test_path"), py::arg("resample_steps") = 24, py::arg("append_bias_rows") = true);
    m.def("resample_temporal", &data::resample_temporal, py::arg("m"), py::arg("steps"));

    // harness
    m.def("run_experiment", [](const std::string& config_json, const std::filesystem::path& base_dir,
                               bool full_paper, std::optional<std::uint64_t> seed) {
        harness::ExperimentConfig cfg = harness::parse_config(config_json, base_dir, full_paper);
        if (seed) cfg.master_seed = *seed;
        std::vector<harness::ResultRow> rows;
        {
            py::gil_scoped_release release;
            rows = harness::run_experiment(cfg);
        }
        std::ostringstream os;
        harness::write_rows_csv(rows, os);
        return os.str();
    }, py::arg("config_json"), py::arg("base_dir") = std::filesystem::path(), py::arg("full_paper") = false,
          py::arg("seed") = py::none(), "Runs a JSON config and returns the raw result CSV text.");
    m.def("summarize_csv", [](const std::string& rows_csv) {
        std::istringstream in(rows_csv);
        std::ostringstream out;
        harness::write_summary_csv(harness::read_rows_csv(in), out);
        return out.str();
    });
    m.def("template_config", [](const std::string& kind) {
        if (kind == "usps") return harness::template_config(harness::DatasetKind::Usps);
        if (kind == "jv") return harness::template_config(harness::DatasetKind::JapaneseVowels);
        if (kind == "sine_square") return harness::template_config(harness::DatasetKind::SineSquare);
        throw std::invalid_argument("kind must be sine_square, usps or jv");
    });
}
