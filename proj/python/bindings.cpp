// Python bindings for the connectivity layer, training and evaluation.
// Matrices cross the boundary as float64 C-contiguous numpy arrays.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "qbrain/checkpoint.hpp"
#include "qbrain/checks.hpp"
#include "qbrain/config.hpp"
#include "qbrain/data.hpp"
#include "qbrain/errors.hpp"
#include "qbrain/eval.hpp"
#include "qbrain/hilbert.hpp"
#include "qbrain/objective.hpp"
#include "qbrain/qlayer.hpp"
#include "qbrain/train.hpp"

namespace py = pybind11;
using namespace qbrain;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
    if (a.ndim() != 2) throw DimensionError("expected a 2-d array, got " + std::to_string(a.ndim()) + "-d");
    const auto r = static_cast<std::size_t>(a.shape(0)), c = static_cast<std::size_t>(a.shape(1));
    return Matrix(r, c, std::vector<double>(a.data(), a.data() + r * c));
}

Vector to_vector(const Array& a) {
    if (a.ndim() != 1) throw DimensionError("expected a 1-d array, got " + std::to_string(a.ndim()) + "-d");
    return Vector(a.data(), a.data() + a.shape(0));
}

Array from_matrix(const Matrix& m) {
    Array out({m.rows(), m.cols()});
    std::copy(m.data().begin(), m.data().end(), out.mutable_data());
    return out;
}

Array from_vector(const Vector& v) {
    Array out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())});
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

// Keyword settings go through the same key=value parser as config files.
RunConfig run_config(const py::dict& kw) {
    RunConfig cfg;
    for (const auto& [k, v] : kw) {
        const auto key = py::str(k).cast<std::string>();
        std::string value;
        if (py::isinstance<py::bool_>(v)) value = v.cast<bool>() ? "true" : "false";
        else value = py::str(v).cast<std::string>();
        apply_config_value(key, value, cfg);
    }
    return cfg;
}

AblationFlags flags_of(bool phase, bool controlling, bool projection) { return {phase, controlling, projection}; }

py::dict retrieval_dict(const RetrievalReport& r) {
    py::dict d;
    d["image_top1"] = r.image_top1;
    d["brain_top1"] = r.brain_top1;
    d["candidates"] = r.candidates;
    d["repeats"] = r.repeats;
    d["image_per_repeat"] = r.image_per_repeat;
    d["brain_per_repeat"] = r.brain_per_repeat;
    return d;
}

py::dict check_dict(const CheckReport& r) {
    py::dict d;
    d["passed"] = r.pass();
    d["max_error"] = r.max_error();
    d["seconds"] = r.seconds;
    py::dict cases;
    for (const auto& c : r.cases) cases[py::str(c.name)] = py::make_tuple(c.max_error, c.pass);
    d["cases"] = cases;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Quantum-inspired voxel connectivity encoder";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
    py::register_exception<DomainError>(m, "DomainError", base.ptr());
    py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
    py::register_exception<InvariantError>(m, "InvariantError", base.ptr());
    py::register_exception<RangeError>(m, "RangeError", base.ptr());
    py::register_exception<DataError>(m, "DataError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());
    py::register_exception<FormatError>(m, "FormatError", base.ptr());

    m.def("pair_connectivity", &pair_connectivity, py::arg("x_j"), py::arg("x_k"), py::arg("w"), py::arg("dtheta_k"));
    m.def("pair_connectivity_oracle", &hilbert::pair_connectivity_oracle, py::arg("x_j"), py::arg("x_k"),
          py::arg("theta0_k"), py::arg("theta1_k"), py::arg("theta0_j"), py::arg("theta1_j"), py::arg("w"));

    m.def(
        "layer_forward",
        [](const Array& x, const Array& theta0, const Array& theta1, const Array& w_prime, const Array& w_dprime,
           bool controlling, bool projection, bool phase) {
            const BlockParams p{to_vector(theta0), to_vector(theta1), to_matrix(w_prime), to_matrix(w_dprime)};
            return from_vector(layer_forward(VoxelVector(to_vector(x)), p, {controlling, projection, phase}));
        },
        py::arg("x"), py::arg("theta0"), py::arg("theta1"), py::arg("w_prime"), py::arg("w_dprime"),
        py::arg("controlling") = true, py::arg("projection") = true, py::arg("phase") = true,
        "f(x) = x + x*(W' x) + x*(W'' g), g = sqrt((1-x)x) cos(theta0 - theta1); x inside [1e-6, 1-1e-6]");

    m.def(
        "contrastive_loss",
        [](const Array& pred, const Array& target, double tau) {
            const ContrastiveResult r = contrastive_loss({to_matrix(pred), to_matrix(target), tau});
            return py::make_tuple(r.loss, from_matrix(r.grad_p));
        },
        py::arg("pred"), py::arg("target"), py::arg("tau") = 4e-3, "symmetric InfoNCE; returns (loss, d loss / d pred)");

    py::class_<Dataset>(m, "Dataset")
        .def(py::init([](const Array& voxels, const Array& embeddings) {
                 return Dataset{to_matrix(voxels), to_matrix(embeddings), std::nullopt};
             }),
             py::arg("voxels"), py::arg("embeddings"))
        .def_property_readonly("voxels", [](const Dataset& d) { return from_matrix(d.voxels); })
        .def_property_readonly("embeddings", [](const Dataset& d) { return from_matrix(d.embeddings); })
        .def_property_readonly("planted_edges", [](const Dataset& d) -> py::object {
            if (!d.planted) return py::none();
            return py::cast(d.planted->edges);
        })
        .def_property_readonly("samples", &Dataset::samples)
        .def("__len__", &Dataset::samples)
        .def("save", [](const Dataset& d, const std::filesystem::path& p) { write_dataset(d, p); }, py::arg("path"));
    m.def("load_dataset", &read_dataset, py::arg("path"));

    m.def(
        "gen_synthetic",
        [](const py::kwargs& kw) {
            const RunConfig cfg = run_config(kw);
            SyntheticSplits s = gen_synthetic(cfg.synth);
            return py::make_tuple(std::move(s.train), std::move(s.test));
        },
        "generate (train, test) splits; keywords as in config files (voxels, regions, seed, ...)");

    m.def("write_embeddings", [](const Array& e, const std::filesystem::path& p) { write_embeddings(to_matrix(e), p); },
          py::arg("embeddings"), py::arg("path"));
    m.def("read_embeddings", [](const std::filesystem::path& p) { return from_matrix(read_embeddings(p)); },
          py::arg("path"));

    py::class_<Checkpoint>(m, "Encoder")
        .def_readonly("config_echo", &Checkpoint::config_echo)
        .def_property_readonly("blocks", [](const Checkpoint& c) { return c.params.blocks.size(); })
        .def_property_readonly("voxels", [](const Checkpoint& c) { return c.params.voxels(); })
        .def_property_readonly("embed_dim", [](const Checkpoint& c) { return c.params.embed_dim(); })
        .def(
            "encode",
            [](const Checkpoint& c, const Dataset& d, std::uint32_t threads) {
                const TrainConfig tc = train_config_from_echo(c.config_echo);
                return from_matrix(embed_all(d, c.params, tc.flags, threads));
            },
            py::arg("data"), py::arg("threads") = 1, "unit-norm embeddings for every sample")
        .def(
            "w_prime", [](const Checkpoint& c, std::size_t b) { return from_matrix(c.params.blocks.at(b).w_prime); },
            py::arg("block"))
        .def(
            "w_dprime", [](const Checkpoint& c, std::size_t b) { return from_matrix(c.params.blocks.at(b).w_dprime); },
            py::arg("block"))
        .def(
            "connectivity",
            [](const Checkpoint& c, std::optional<std::uint32_t> regions) {
                return from_matrix(regions ? pooled_influence(c.params, *regions) : influence_matrix(c.params));
            },
            py::arg("regions") = py::none(), "summed |W'| + |W''|; entry (j, k) is the influence of k on j")
        .def("save", [](const Checkpoint& c, const std::filesystem::path& p) { write_checkpoint(c, p); },
             py::arg("path"))
        .def("__bytes__", [](const Checkpoint& c) {
            const auto b = encode_checkpoint(c);
            return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
        });
    m.def("load_encoder", &read_checkpoint, py::arg("path"));

    m.def(
        "train",
        [](const Dataset& data, const py::kwargs& kw) {
            const RunConfig cfg = run_config(kw);
            TrainResult r;
            {
                py::gil_scoped_release release;
                r = train_loop(data, cfg.train);
            }
            py::list trace;
            for (const auto& row : r.trace) trace.append(py::make_tuple(row.epoch, row.step, row.lr, row.loss));
            return py::make_tuple(Checkpoint{std::move(r.params), train_config_echo(cfg.train)}, trace);
        },
        py::arg("data"),
        "train an encoder; returns (Encoder, [(epoch, step, lr, loss), ...]). Keywords as in config files, "
        "including phase_shifting / voxel_controlling / measurement_projection");

    m.def(
        "retrieval",
        [](const Array& pred, const Array& target, std::size_t candidates, std::size_t repeats, std::uint64_t seed) {
            return retrieval_dict(retrieval_eval(to_matrix(pred), to_matrix(target), candidates, repeats, seed));
        },
        py::arg("pred"), py::arg("target"), py::arg("candidates") = 300, py::arg("repeats") = 30,
        py::arg("seed") = 1);

    m.def(
        "edge_recovery",
        [](const Checkpoint& c, const Dataset& d) {
            const EdgeRecovery e = edge_recovery_score(c.params, d.planted);
            py::dict out;
            out["ratio"] = e.ratio;
            out["degenerate"] = e.degenerate;
            out["planted_mean"] = e.planted_mean;
            out["other_mean"] = e.other_mean;
            return out;
        },
        py::arg("encoder"), py::arg("data"));

    m.def("check_oracle", [](std::size_t trials, std::uint64_t seed) { return check_dict(check_oracle(trials, seed)); },
          py::arg("trials") = 10000, py::arg("seed") = 1);
    m.def(
        "check_gradients",
        [](std::size_t voxels, std::size_t dim, std::size_t blocks, double step, double tol, std::uint64_t seed) {
            GradCheckOptions o;
            o.voxels = voxels;
            o.embed_dim = dim;
            o.blocks = blocks;
            o.step = step;
            o.tolerance = tol;
            o.seed = seed;
            return check_dict(check_gradients(o));
        },
        py::arg("voxels") = 16, py::arg("dim") = 8, py::arg("blocks") = 2, py::arg("step") = 1e-6,
        py::arg("tol") = 1e-4, py::arg("seed") = 1);

    m.attr("__version__") = "0.1.0";
}
