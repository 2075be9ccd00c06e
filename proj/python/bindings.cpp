// Python bindings for the archive, the benchmark domains, and the
// experiment runner.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "qdmae/experiment.hpp"
#include "qdmae/verify.hpp"

namespace py = pybind11;
using namespace qdmae;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Quality-diversity optimization with annealed archive thresholds";
    m.attr("__version__") = QDMAE_VERSION;

    py::enum_<InsertStatus>(m, "InsertStatus")
        .value("NEWLY_OCCUPIED", InsertStatus::NewlyOccupied)
        .value("IMPROVED", InsertStatus::Improved)
        .value("REJECTED", InsertStatus::Rejected);

    py::class_<InsertOutcome>(m, "InsertOutcome")
        .def_readonly("delta", &InsertOutcome::delta)
        .def_readonly("status", &InsertOutcome::status)
        .def_readonly("cell_index", &InsertOutcome::cell_index)
        .def_property_readonly("accepted", &InsertOutcome::accepted)
        .def("__repr__", [](const InsertOutcome& o) {
            std::ostringstream s;
            s << "InsertOutcome(cell=" << o.cell_index << ", delta=" << o.delta << ")";
            return s.str();
        });

    py::class_<Metrics>(m, "Metrics")
        .def_readonly("qd_score", &Metrics::qd_score)
        .def_readonly("coverage", &Metrics::coverage)
        .def_readonly("best", &Metrics::best);

    py::class_<ArchiveConfig>(m, "ArchiveConfig")
        .def(py::init([](Eigen::VectorXd lower, Eigen::VectorXd upper, std::vector<int> resolution,
                         double learning_rate, double min_quality) {
                 ArchiveConfig cfg;
                 cfg.lower_bounds = std::move(lower);
                 cfg.upper_bounds = std::move(upper);
                 cfg.resolution = std::move(resolution);
                 cfg.learning_rate = learning_rate;
                 cfg.min_quality = min_quality;
                 cfg.validate();
                 return cfg;
             }),
             py::arg("lower_bounds"), py::arg("upper_bounds"), py::arg("resolution"),
             py::arg("learning_rate") = 0.0, py::arg("min_quality") = 0.0)
        .def_readonly("learning_rate", &ArchiveConfig::learning_rate)
        .def_readonly("min_quality", &ArchiveConfig::min_quality)
        .def_property_readonly("cell_count", &ArchiveConfig::cell_count);

    py::class_<Archive>(m, "Archive")
        .def(py::init<ArchiveConfig>(), py::arg("config"))
        .def("calculate_cell", &Archive::calculate_cell, py::arg("measures"))
        .def("try_insert", &Archive::try_insert, py::arg("solution"), py::arg("objective"),
             py::arg("measures"))
        .def("metrics", &Archive::metrics)
        .def_property_readonly("cell_count", &Archive::cell_count)
        .def_property_readonly("occupied_count", &Archive::occupied_count)
        .def("threshold", [](const Archive& a, long i) { return a.cell(i).threshold; })
        .def("occupancy", [](const Archive& a, long i) { return a.cell(i).occupancy; })
        .def("occupant_objective",
             [](const Archive& a, long i) -> std::optional<double> { return a.cell(i).objective; })
        .def("occupied_cells", &Archive::occupied_cells)
        .def("heatmap_csv",
             [](const Archive& a) {
                 std::ostringstream out;
                 write_heatmap_csv(out, a, FileMeta{});
                 return out.str();
             })
        .def("snapshot_json", [](const Archive& a) {
            return archive_snapshot(a, FileMeta{}).dump();
        });

    m.def("convert_learning_rate", &convert_learning_rate, py::arg("alpha1"), py::arg("cells1"),
          py::arg("cells2"));
    m.def("threshold_closed_form", &threshold_closed_form, py::arg("k"), py::arg("objective"),
          py::arg("min_quality"), py::arg("alpha"));
    m.def("arm_optimal_coverage", &arm_optimal_coverage, py::arg("cells_per_dim"));

    py::class_<Evaluation>(m, "Evaluation")
        .def_readonly("objective", &Evaluation::objective)
        .def_readonly("raw_objective", &Evaluation::raw_objective)
        .def_readonly("measures", &Evaluation::measures)
        .def_readonly("objective_gradient", &Evaluation::objective_gradient)
        .def_readonly("measure_jacobian", &Evaluation::measure_jacobian);

    py::class_<Domain>(m, "Domain")
        .def("evaluate", &Domain::evaluate, py::arg("theta"), py::arg("with_gradients") = false)
        .def_property_readonly("dimension", [](const Domain& d) { return d.spec().dimension; })
        .def_property_readonly("measure_lower",
                               [](const Domain& d) { return d.spec().measure_lower; })
        .def_property_readonly("measure_upper",
                               [](const Domain& d) { return d.spec().measure_upper; });

    m.def(
        "make_domain",
        [](const std::string& name, int dimension, bool rastrigin_squared_cosine) {
            return make_domain(domain_from_name(name), dimension, rastrigin_squared_cosine);
        },
        py::arg("name"), py::arg("dimension"), py::arg("rastrigin_squared_cosine") = false);

    m.def(
        "run_experiment",
        [](const std::string& config_json, const std::string& output_dir) {
            const ExperimentConfig cfg =
                ExperimentConfig::from_json(nlohmann::json::parse(config_json));
            const ExperimentResult result = run_experiment(cfg, output_dir);
            py::list finals;
            for (const TrialFinal& f : result.finals) {
                py::dict d;
                d["trial"] = f.trial;
                d["qd_score"] = f.qd_score;
                d["coverage"] = f.coverage;
                d["best"] = f.best;
                finals.append(d);
            }
            return finals;
        },
        py::arg("config_json"), py::arg("output_dir") = "",
        "Run a benchmark experiment from a JSON config string; returns the "
        "final per-trial metrics.");

    m.def("default_config_json", [](const std::string& domain, const std::string& algorithm) {
        return ExperimentConfig::defaults_for(domain_from_name(domain),
                                              algorithm_from_name(algorithm))
            .to_json()
            .dump();
    });

    m.def("run_property_suite", []() {
        py::list out;
        for (const CheckResult& r : run_property_suite()) {
            py::dict d;
            d["id"] = r.id;
            d["name"] = r.name;
            d["pass"] = r.pass;
            d["detail"] = r.detail;
            out.append(d);
        }
        return out;
    });
}
