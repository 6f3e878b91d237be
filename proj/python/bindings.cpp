#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "chromaeeg/cli.hpp"
#include "chromaeeg/dsp.hpp"
#include "chromaeeg/error.hpp"
#include "chromaeeg/features.hpp"
#include "chromaeeg/metrics.hpp"
#include "chromaeeg/models.hpp"
#include "chromaeeg/text_io.hpp"

namespace py = pybind11;
using namespace chromaeeg;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using Labels = py::array_t<int, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-d array");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.data().begin());
  return m;
}

py::array_t<double> to_array(const Matrix& m) {
  py::array_t<double> out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

std::vector<int> to_labels(const Labels& y) { return {y.data(), y.data() + y.size()}; }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.attr("__version__") = CHROMAEEG_VERSION;
  py::register_exception<Error>(m, "ChromaEegError", PyExc_RuntimeError);

  m.def("fft", [](const std::vector<std::complex<double>>& x) { return dsp::fft(x); }, py::arg("x"));

  m.def(
      "cwt_power",
      [](const std::vector<double>& segment, std::vector<double> freqs, double sample_rate, double n_cycles) {
        if (freqs.empty()) freqs = dsp::default_frequencies();
        dsp::CwtOptions opt;
        opt.n_cycles = n_cycles;
        return to_array(dsp::cwt_power(segment, freqs, sample_rate, opt).power);
      },
      py::arg("segment"), py::arg("freqs") = std::vector<double>{}, py::arg("sample_rate") = kMuseSampleRate,
      py::arg("n_cycles") = dsp::kDefaultCycles);

  m.def("feature_names", &features::feature_names);

  m.def(
      "load_features",
      [](const std::string& path) {
        const auto fm = features::parse_feature_matrix(io::read_file(path));
        py::dict d;
        d["names"] = fm.names;
        d["values"] = to_array(fm.values);
        d["labels"] = fm.labels;
        d["subjects"] = fm.subjects;
        d["trials"] = fm.trials;
        return d;
      },
      py::arg("path"));

  m.def("accuracy", [](const Labels& y, const Labels& p) { return eval::accuracy(to_labels(y), to_labels(p)); });
  m.def("multiclass_auc", [](const Array& scores, const Labels& y) { return eval::multiclass_auc(to_matrix(scores), to_labels(y)); });
  m.def("mcc", [](const Labels& y, const Labels& p, int classes) {
    return eval::mcc(eval::ConfusionMatrix::from_labels(to_labels(y), to_labels(p), classes));
  }, py::arg("y_true"), py::arg("y_pred"), py::arg("classes") = 3);

  m.def(
      "fit_predict",
      [](const std::string& family, const Array& x_train, const Labels& y_train, const Array& x_test, std::uint64_t seed) {
        const auto spec = models::ModelSpec::defaults(models::parse_family(family), seed);
        const auto model = models::fit(spec, to_matrix(x_train), to_labels(y_train));
        return to_array(models::predict_scores(model, to_matrix(x_test)));
      },
      py::arg("family"), py::arg("x_train"), py::arg("y_train"), py::arg("x_test"), py::arg("seed") = 0,
      "Class scores for x_test from a default model of the given family (knn, svm, lr, rf, mlp, gb).");

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "chromaeeg");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command line with `args`; returns (exit code, stdout, stderr).");
}
