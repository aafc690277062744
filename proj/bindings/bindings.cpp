// pybind11 bindings for the main operations.

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hgp/basis.hpp"
#include "hgp/errors.hpp"
#include "hgp/gp.hpp"
#include "hgp/io.hpp"
#include "hgp/precision.hpp"
#include "hgp/structured.hpp"
#include "hgp/synthetic.hpp"

namespace py = pybind11;
using namespace hgp;

namespace {

Dataset make_dataset(const Eigen::MatrixXd& x, const std::optional<Eigen::VectorXd>& y) {
  Dataset data;
  data.x = x;
  if (y.has_value()) data.y = *y;
  data.validate();
  return data;
}

}  // namespace

PYBIND11_MODULE(_hgp, m) {
  m.doc() = "Basis-function GP regression with Hankel-Toeplitz structured precision matrices";

  py::register_exception<UnsupportedError>(m, "UnsupportedError");
  py::register_exception<IoError>(m, "IoError");

  py::enum_<LevelKind>(m, "LevelKind")
      .value("HANKEL", LevelKind::kHankel)
      .value("TOEPLITZ", LevelKind::kToeplitz)
      .value("HANKEL_PLUS_TOEPLITZ", LevelKind::kHankelPlusToeplitz);

  py::class_<Level>(m, "Level")
      .def(py::init([](std::uint32_t m_, LevelKind kind, int sign) {
             return Level{m_, kind, static_cast<std::int8_t>(sign)};
           }),
           py::arg("m"), py::arg("kind"), py::arg("sign_toeplitz") = -1)
      .def_readonly("m", &Level::m)
      .def_readonly("kind", &Level::kind)
      .def_readonly("sign_toeplitz", &Level::sign_toeplitz)
      .def_property_readonly("span", &Level::span);

  py::class_<LevelStructure>(m, "LevelStructure")
      .def(py::init([](std::vector<Level> levels) {
             LevelStructure s{std::move(levels)};
             s.validate_and_normalize();
             return s;
           }),
           py::arg("levels"))
      .def_readonly("levels", &LevelStructure::levels)
      .def_property_readonly("dim", &LevelStructure::dim)
      .def_property_readonly("total_bfs", &LevelStructure::total_bfs)
      .def_property_readonly("unique_entry_count", &LevelStructure::unique_entry_count)
      .def("describe", &LevelStructure::describe)
      .def("__eq__", [](const LevelStructure& a, const LevelStructure& b) { return a == b; });

  m.def("hankel_entry_index", &hankel_entry_index, py::arg("i"), py::arg("j"), py::arg("m"));
  m.def("toeplitz_entry_index", &toeplitz_entry_index, py::arg("i"), py::arg("j"), py::arg("m"));

  py::class_<GammaTensor>(m, "GammaTensor")
      .def_property_readonly("structure", &GammaTensor::structure)
      .def_property_readonly("n_points", &GammaTensor::n_points)
      .def_property_readonly("size", &GammaTensor::size)
      .def_property_readonly("data",
                             [](const GammaTensor& g) -> py::object {
                               if (g.scalar_field() == ScalarField::kReal64) {
                                 const auto span = g.real_data();
                                 Eigen::VectorXd out = Eigen::Map<const Eigen::VectorXd>(
                                     span.data(), static_cast<Eigen::Index>(span.size()));
                                 return py::cast(out);
                               }
                               const auto span = g.complex_data();
                               Eigen::VectorXcd out = Eigen::Map<const Eigen::VectorXcd>(
                                   span.data(), static_cast<Eigen::Index>(span.size()));
                               return py::cast(out);
                             })
      .def("block_entry",
           [](const GammaTensor& g, const std::vector<int>& i, const std::vector<int>& j) {
             return g.block_entry(i, j);
           })
      .def("materialize",
           [](const GammaTensor& g) -> py::object {
             if (g.scalar_field() == ScalarField::kReal64) return py::cast(g.materialize());
             return py::cast(g.materialize_complex());
           });

  m.def("merge", &merge, py::arg("a"), py::arg("b"));

  py::class_<PolynomialFamily>(m, "Polynomial")
      .def(py::init<std::vector<std::uint32_t>>(), py::arg("m"))
      .def_readonly("m", &PolynomialFamily::m);
  py::class_<ComplexExponentialFamily>(m, "ComplexExponential")
      .def(py::init<std::vector<std::uint32_t>>(), py::arg("m"))
      .def_readonly("m", &ComplexExponentialFamily::m);
  py::class_<HilbertFamily>(m, "Hilbert")
      .def(py::init<std::vector<std::uint32_t>, std::vector<double>>(), py::arg("m"), py::arg("L"))
      .def_readonly("m", &HilbertFamily::m)
      .def_readonly("L", &HilbertFamily::half_width);
  py::class_<Fourier1DFamily>(m, "Fourier1D")
      .def(py::init<std::uint32_t, double>(), py::arg("m"), py::arg("delta"))
      .def_readonly("m", &Fourier1DFamily::m)
      .def_readonly("delta", &Fourier1DFamily::spacing);

  m.def("input_dim", &input_dim);
  m.def("feature_count", &feature_count);
  m.def("family_name", &family_name);
  m.def("structure_descriptors", &structure_descriptors);
  m.def("eval_bf_1d", &eval_bf_1d, py::arg("family"), py::arg("d"), py::arg("i"), py::arg("x"));
  m.def("g_function", &g_function, py::arg("family"), py::arg("d"), py::arg("k"), py::arg("x"));
  m.def("regressor_row", [](const BasisFamily& family, const Eigen::VectorXd& x) {
    return regressor_row(family, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
  });
  m.def("family_to_json", &family_to_json);
  m.def("family_from_json", &family_from_json);

  py::class_<PrecisionSummary>(m, "PrecisionSummary")
      .def_readonly("gamma_blocks", &PrecisionSummary::gamma_blocks)
      .def_readonly("phi_t_y", &PrecisionSummary::phi_t_y)
      .def_readonly("y_sq", &PrecisionSummary::y_sq)
      .def_readonly("n", &PrecisionSummary::n)
      .def_property_readonly("feature_dim", &PrecisionSummary::feature_dim);

  m.def(
      "accumulate_naive",
      [](const BasisFamily& family, const Eigen::MatrixXd& x) -> py::object {
        const Dataset data = make_dataset(x, std::nullopt);
        if (is_complex(family)) return py::cast(accumulate_naive_complex(family, data));
        return py::cast(accumulate_naive(family, data));
      },
      py::arg("family"), py::arg("x"));
  m.def(
      "accumulate_gamma",
      [](const BasisFamily& family, const Eigen::MatrixXd& x, bool compensated, int threads) {
        AccumOptions options;
        options.compensated = compensated;
        options.threads = threads;
        return accumulate_gamma(family, make_dataset(x, std::nullopt), options);
      },
      py::arg("family"), py::arg("x"), py::arg("compensated") = false, py::arg("threads") = 1);
  m.def(
      "fourier_gamma_1d",
      [](const Eigen::MatrixXd& x, double spacing, std::uint32_t m_) {
        const auto blocks = fourier_gamma_1d(make_dataset(x, std::nullopt), spacing, m_);
        return std::vector<GammaTensor>(blocks.begin(), blocks.end());
      },
      py::arg("x"), py::arg("delta"), py::arg("m"));
  m.def(
      "accumulate_stats",
      [](const BasisFamily& family, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
         bool compensated, int threads) {
        AccumOptions options;
        options.compensated = compensated;
        options.threads = threads;
        return accumulate_stats(family, make_dataset(x, y), options);
      },
      py::arg("family"), py::arg("x"), py::arg("y"), py::arg("compensated") = false,
      py::arg("threads") = 1);
  m.def(
      "update_stats",
      [](const PrecisionSummary& summary, const BasisFamily& family, const Eigen::VectorXd& x,
         double y) {
        return update_stats(summary, family,
                            std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                            y);
      },
      py::arg("summary"), py::arg("family"), py::arg("x"), py::arg("y"));
  m.def("merge_summaries", &merge_summaries);
  m.def("reconstruct_precision",
        [](const PrecisionSummary& summary) -> py::object {
          if (summary.scalar_field() == ScalarField::kComplex128)
            return py::cast(reconstruct_precision_complex(summary));
          return py::cast(reconstruct_precision(summary));
        });
  m.def("gamma_storage_bytes", &gamma_storage_bytes);
  m.def("dense_storage_bytes", &dense_storage_bytes);

  py::class_<Hyperparams>(m, "Hyperparams")
      .def(py::init([](double lengthscale, double signal_variance, double noise_variance) {
             Hyperparams hp{lengthscale, signal_variance, noise_variance};
             hp.validate();
             return hp;
           }),
           py::arg("lengthscale") = 1.0, py::arg("signal_variance") = 1.0,
           py::arg("noise_variance") = 1.0)
      .def_readwrite("lengthscale", &Hyperparams::lengthscale)
      .def_readwrite("signal_variance", &Hyperparams::signal_variance)
      .def_readwrite("noise_variance", &Hyperparams::noise_variance)
      .def("__repr__", [](const Hyperparams& hp) {
        return "Hyperparams(lengthscale=" + std::to_string(hp.lengthscale) +
               ", signal_variance=" + std::to_string(hp.signal_variance) +
               ", noise_variance=" + std::to_string(hp.noise_variance) + ")";
      });

  py::class_<Posterior>(m, "Posterior")
      .def_readonly("mean", &Posterior::mean)
      .def_readonly("variance", &Posterior::variance)
      .def_readonly("covariance", &Posterior::covariance);

  m.def("spectral_weights", &spectral_weights, py::arg("hp"), py::arg("family"));
  m.def("posterior", &posterior, py::arg("summary"), py::arg("hp"), py::arg("family"),
        py::arg("x_star"), py::arg("with_covariance") = false);
  m.def(
      "dense_gp_posterior",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Hyperparams& hp,
         const Eigen::MatrixXd& x_star, bool with_covariance) {
        return dense_gp_posterior(make_dataset(x, y), hp, x_star, with_covariance);
      },
      py::arg("x"), py::arg("y"), py::arg("hp"), py::arg("x_star"),
      py::arg("with_covariance") = false);
  m.def("neg_log_marginal_likelihood", &neg_log_marginal_likelihood, py::arg("summary"),
        py::arg("hp"), py::arg("family"));

  py::class_<OptimizeConfig>(m, "OptimizeConfig")
      .def(py::init<>())
      .def_readwrite("iterations", &OptimizeConfig::iterations)
      .def_readwrite("learning_rate", &OptimizeConfig::learning_rate)
      .def_readwrite("fd_step", &OptimizeConfig::fd_step)
      .def_readwrite("gradient_floor", &OptimizeConfig::gradient_floor)
      .def_readwrite("train", &OptimizeConfig::train);

  py::class_<OptimizeResult>(m, "OptimizeResult")
      .def_readonly("params", &OptimizeResult::params)
      .def_readonly("nll_trace", &OptimizeResult::nll_trace);

  m.def("optimize_hyperparameters", &optimize_hyperparameters, py::arg("summary"),
        py::arg("family"), py::arg("init"), py::arg("config") = OptimizeConfig{});
  m.def("nlpd",
        [](const Posterior& post, const Eigen::VectorXd& y, double noise_variance) {
          return nlpd(post, y, noise_variance);
        },
        py::arg("posterior"), py::arg("y_true"), py::arg("noise_variance"));

  m.def("write_summary_file", &write_summary_file, py::arg("path"), py::arg("summary"));
  m.def("read_summary_file", &read_summary_file, py::arg("path"));
}
