// Command-line front end: fit / predict / verify / bench / merge.
//
// Exit codes: 0 ok, 1 verification failure, 2 unsupported or invalid
// configuration, 3 IO or parse error.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hgp/errors.hpp"
#include "hgp/gp.hpp"
#include "hgp/io.hpp"
#include "hgp/log.hpp"
#include "hgp/precision.hpp"
#include "hgp/rng.hpp"
#include "hgp/synthetic.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename Fn>
double median_time(int repetitions, Fn&& fn) {
  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(repetitions));
  for (int r = 0; r < repetitions; ++r) {
    const auto start = Clock::now();
    fn();
    times.push_back(seconds_since(start));
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

hgp::BasisFamily make_family(const std::string& name, const std::vector<std::uint32_t>& m,
                             const std::vector<double>& domain, double delta) {
  if (name == "polynomial") return hgp::PolynomialFamily{m};
  if (name == "complex-exponential") return hgp::ComplexExponentialFamily{m};
  if (name == "hilbert") return hgp::HilbertFamily{m, domain};
  if (name == "fourier") {
    if (m.size() != 1)
      throw hgp::UnsupportedError("fourier family takes a single frequency count");
    return hgp::Fourier1DFamily{m[0], delta};
  }
  throw hgp::UnsupportedError("unknown family '" + name +
                              "' (polynomial, complex-exponential, hilbert, fourier)");
}

std::vector<double> auto_domain(const Eigen::MatrixXd& x) {
  std::vector<double> half_widths(static_cast<std::size_t>(x.cols()), 1.0);
  for (Eigen::Index d = 0; d < x.cols(); ++d) {
    const double largest = x.rows() > 0 ? x.col(d).cwiseAbs().maxCoeff() : 0.0;
    half_widths[static_cast<std::size_t>(d)] = largest > 0.0 ? 1.1 * largest : 1.0;
  }
  return half_widths;
}

// ---------------------------------------------------------------------- fit

struct FitConfig {
  std::string data_path;
  std::string family_name = "hilbert";
  std::vector<std::uint32_t> m;
  std::string domain = "auto";
  double delta = 1.0;
  int iterations = 100;
  double learning_rate = 0.05;
  double init_lengthscale = 1.0;
  double init_signal_variance = 10.0;
  double init_noise_variance = 1.0;
  bool naive = false;
  bool compensated = false;
  int threads = 1;
  std::string split;  // "grid:<w>" or "grid:<w>x<h>": checkerboard hold-out
  std::string out_path;
  std::string summary_path;
};

// Checkerboard partition over a w (x h) cell grid spanning the data's
// bounding box; even cells train, odd cells are held out.
std::pair<hgp::Dataset, hgp::Dataset> grid_split(const hgp::Dataset& data,
                                                 const std::string& pattern) {
  if (pattern.rfind("grid:", 0) != 0)
    throw hgp::UnsupportedError("--split: expected grid:<w> or grid:<w>x<h>");
  std::vector<int> cells;
  std::stringstream stream(pattern.substr(5));
  std::string item;
  while (std::getline(stream, item, 'x')) cells.push_back(std::stoi(item));
  if (cells.empty() || static_cast<int>(cells.size()) > data.dim())
    throw hgp::UnsupportedError("--split: grid rank must be between 1 and the input dimension");
  for (int c : cells)
    if (c < 1) throw hgp::UnsupportedError("--split: grid cells must be >= 1");

  std::vector<double> lo(cells.size()), width(cells.size());
  for (std::size_t d = 0; d < cells.size(); ++d) {
    lo[d] = data.x.col(static_cast<Eigen::Index>(d)).minCoeff();
    const double hi = data.x.col(static_cast<Eigen::Index>(d)).maxCoeff();
    width[d] = hi > lo[d] ? (hi - lo[d]) / cells[d] : 1.0;
  }

  std::vector<Eigen::Index> train_rows, heldout_rows;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    int parity = 0;
    for (std::size_t d = 0; d < cells.size(); ++d) {
      int cell = static_cast<int>((data.x(i, static_cast<Eigen::Index>(d)) - lo[d]) / width[d]);
      cell = std::clamp(cell, 0, cells[d] - 1);
      parity += cell;
    }
    (parity % 2 == 0 ? train_rows : heldout_rows).push_back(i);
  }

  auto take = [&](const std::vector<Eigen::Index>& rows) {
    hgp::Dataset part;
    part.x.resize(static_cast<Eigen::Index>(rows.size()), data.dim());
    if (data.has_y()) part.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      part.x.row(static_cast<Eigen::Index>(r)) = data.x.row(rows[r]);
      if (data.has_y()) part.y[static_cast<Eigen::Index>(r)] = data.y[rows[r]];
    }
    return part;
  };
  return {take(train_rows), take(heldout_rows)};
}

int cmd_fit(const FitConfig& config) {
  hgp::Dataset data = hgp::read_dataset_csv(config.data_path, -1, /*require_y=*/true);
  if (data.size() == 0) throw hgp::IoError("'" + config.data_path + "': empty dataset");

  if (!config.split.empty()) {
    auto [train, heldout] = grid_split(data, config.split);
    const std::filesystem::path heldout_path =
        std::filesystem::path(config.out_path).replace_extension(".heldout.csv");
    hgp::write_dataset_csv(heldout_path, heldout);
    std::cout << "split " << config.split << ": " << train.size() << " train rows, "
              << heldout.size() << " held out to " << heldout_path.string() << "\n";
    if (train.size() == 0) throw hgp::IoError("--split left an empty training set");
    data = std::move(train);
  }

  if (config.family_name != "hilbert")
    throw hgp::UnsupportedError("fit: hyperparameter optimization requires the hilbert family");
  if (static_cast<int>(config.m.size()) != data.dim())
    throw hgp::UnsupportedError("fit: --m needs one entry per input dimension");

  std::vector<double> half_widths;
  if (config.domain == "auto") {
    half_widths = auto_domain(data.x);
  } else {
    std::stringstream stream(config.domain);
    std::string item;
    while (std::getline(stream, item, ',')) half_widths.push_back(std::stod(item));
    if (static_cast<int>(half_widths.size()) != data.dim())
      throw hgp::UnsupportedError("fit: --domain needs one half-width per input dimension");
    for (int d = 0; d < data.dim(); ++d) {
      const double largest = data.x.col(d).cwiseAbs().maxCoeff();
      if (largest > half_widths[static_cast<std::size_t>(d)])
        hgp::log::warn("fit: data exceeds the declared domain along dimension ", d + 1, " (|x| up to ",
                       largest, " vs L = ", half_widths[static_cast<std::size_t>(d)], ")");
    }
  }
  const hgp::BasisFamily family = hgp::HilbertFamily{config.m, half_widths};

  hgp::AccumOptions options;
  options.compensated = config.compensated;
  options.threads = config.threads;

  const auto stats_start = Clock::now();
  hgp::PrecisionSummary summary = hgp::accumulate_stats(family, data, options);
  const double stats_seconds = seconds_since(stats_start);
  Eigen::MatrixXd naive_precision;
  double naive_seconds = 0.0;
  if (config.naive) {
    const auto naive_start = Clock::now();
    naive_precision = hgp::accumulate_naive(family, data, options);
    naive_seconds = seconds_since(naive_start);
  }
  // The reported accumulation time is for the path that feeds optimization.
  const double accumulation_seconds = config.naive ? naive_seconds : stats_seconds;

  hgp::Hyperparams init{config.init_lengthscale, config.init_signal_variance,
                        config.init_noise_variance};
  hgp::OptimizeConfig optimizer;
  optimizer.iterations = config.iterations;
  optimizer.learning_rate = config.learning_rate;

  const auto optimization_start = Clock::now();
  const hgp::OptimizeResult result =
      config.naive
          ? hgp::optimize_hyperparameters_dense(naive_precision, summary.phi_t_y, summary.y_sq,
                                                summary.n, family, init, optimizer)
          : hgp::optimize_hyperparameters(summary, family, init, optimizer);
  const double optimization_seconds = seconds_since(optimization_start);

  std::filesystem::path summary_path = config.summary_path.empty()
                                           ? std::filesystem::path(config.out_path).replace_extension(".summary")
                                           : std::filesystem::path(config.summary_path);
  hgp::write_summary_file(summary_path, summary);

  hgp::ModelFile model;
  model.family = family;
  model.hyperparams = result.params;
  model.summary_path = summary_path.filename().string();
  if (summary_path.parent_path() != std::filesystem::path(config.out_path).parent_path())
    model.summary_path = summary_path.string();
  hgp::write_model_file(config.out_path, model);

  hgp::log::info("fit: accumulation ", accumulation_seconds, " s (",
                 config.naive ? "naive" : "gamma", " path), optimization ", optimization_seconds,
                 " s");
  std::cout << "path " << (config.naive ? "naive" : "gamma") << "\n"
            << "n " << summary.n << "\n"
            << "accumulation_seconds " << accumulation_seconds << "\n"
            << "optimization_seconds " << optimization_seconds << "\n"
            << "final_nll " << hgp::format_double(result.nll_trace.back()) << "\n"
            << "lengthscale " << hgp::format_double(result.params.lengthscale) << "\n"
            << "signal_variance " << hgp::format_double(result.params.signal_variance) << "\n"
            << "noise_variance " << hgp::format_double(result.params.noise_variance) << "\n"
            << "model " << config.out_path << "\n"
            << "summary " << summary_path.string() << "\n";
  return 0;
}

// ------------------------------------------------------------------ predict

int cmd_predict(const std::string& model_path, const std::string& data_path,
                const std::string& out_path) {
  const hgp::ModelFile model = hgp::read_model_file(model_path);
  const hgp::PrecisionSummary summary =
      hgp::read_summary_file(hgp::resolve_summary_path(model_path, model));
  const hgp::Dataset test =
      hgp::read_dataset_csv(data_path, hgp::input_dim(model.family), /*require_y=*/false);

  const hgp::Posterior post =
      hgp::posterior(summary, model.hyperparams, model.family, test.x);

  std::vector<bool> outside(static_cast<std::size_t>(test.size()), false);
  if (const auto* hilbert = std::get_if<hgp::HilbertFamily>(&model.family)) {
    for (Eigen::Index i = 0; i < test.size(); ++i)
      for (int d = 0; d < test.dim(); ++d)
        if (std::abs(test.x(i, d)) > hilbert->half_width[static_cast<std::size_t>(d)])
          outside[static_cast<std::size_t>(i)] = true;
  }

  std::ofstream out(out_path);
  if (!out) throw hgp::IoError("cannot open '" + out_path + "' for writing");
  if (test.has_y()) {
    const Eigen::VectorXd pointwise =
        hgp::nlpd_pointwise(post, test.y, model.hyperparams.noise_variance);
    hgp::write_predictions_csv(out, test.x, post, &pointwise, outside);
    if (test.size() > 0) std::cout << "mean_nlpd " << hgp::format_double(pointwise.mean()) << "\n";
  } else {
    hgp::write_predictions_csv(out, test.x, post, nullptr, outside);
  }
  std::cout << "predictions " << out_path << " (" << test.size() << " rows)\n";
  return 0;
}

// ------------------------------------------------------------------- verify

struct VerifyConfig {
  std::vector<std::string> families = {"polynomial", "complex-exponential", "hilbert", "fourier"};
  std::vector<int> dims = {1, 2, 3};
  std::vector<std::uint32_t> m_list = {1, 2, 4, 8};
  std::vector<std::int64_t> n_list = {0, 1, 7, 50};
  std::uint64_t seed = 42;
  double tolerance = 1e-9;
  bool compensated = false;
  int threads = 1;
};

struct VerifyMetrics {
  double rel_frobenius = 0.0;
  double max_abs = 0.0;
};

template <typename Matrix>
VerifyMetrics discrepancy(const Matrix& reconstructed, const Matrix& naive) {
  VerifyMetrics metrics;
  metrics.rel_frobenius = (reconstructed - naive).norm() / (1.0 + naive.norm());
  metrics.max_abs = (reconstructed - naive).cwiseAbs().maxCoeff();
  return metrics;
}

int cmd_verify(const VerifyConfig& config) {
  bool fourier_explicit = false;
  for (const std::string& name : config.families)
    if (name == "fourier") fourier_explicit = true;
  if (fourier_explicit && config.families.size() == 1) {
    for (int d : config.dims)
      if (d != 1)
        throw hgp::UnsupportedError(
            "fourier features support 1-D inputs only (multi-dimensional grids are out of scope)");
  }

  hgp::AccumOptions base_options;
  base_options.compensated = config.compensated;
  base_options.threads = config.threads;

  int failures = 0;
  int cases = 0;
  std::uint64_t case_index = 0;
  for (const std::string& name : config.families) {
    for (int dims : config.dims) {
      if (name == "fourier" && dims != 1) continue;
      for (std::uint32_t m : config.m_list) {
        for (std::int64_t n : config.n_list) {
          ++case_index;
          hgp::Rng rng(config.seed * 1000003 + case_index);
          hgp::Dataset data;
          data.x = hgp::uniform_inputs(rng, n, dims, -1.0, 1.0);

          const std::vector<std::uint32_t> m_per_dim(static_cast<std::size_t>(dims), m);
          const std::vector<double> domain(static_cast<std::size_t>(dims), 1.25);
          const hgp::BasisFamily family =
              make_family(name, name == "fourier" ? std::vector<std::uint32_t>{m} : m_per_dim,
                          domain, 0.7);

          hgp::OpCounts counts;
          hgp::AccumOptions options = base_options;
          options.counts = &counts;

          VerifyMetrics metrics;
          if (hgp::is_complex(family)) {
            const Eigen::MatrixXcd naive = hgp::accumulate_naive_complex(family, data, options);
            const Eigen::MatrixXcd reconstructed =
                hgp::accumulate_gamma(family, data, options).materialize_complex();
            metrics = discrepancy(reconstructed, naive);
          } else if (name == "fourier") {
            const Eigen::MatrixXd naive = hgp::accumulate_naive(family, data, options);
            const auto blocks = hgp::fourier_gamma_1d(data, 0.7, m, options);
            metrics = discrepancy(hgp::assemble_fourier_precision(blocks), naive);
          } else {
            const Eigen::MatrixXd naive = hgp::accumulate_naive(family, data, options);
            const Eigen::MatrixXd reconstructed =
                hgp::accumulate_gamma(family, data, options).materialize();
            metrics = discrepancy(reconstructed, naive);
          }

          const bool pass = metrics.rel_frobenius <= config.tolerance;
          ++cases;
          if (!pass) ++failures;
          std::cout << "family=" << name << " D=" << dims << " m=" << m << " N=" << n
                    << " rel_frobenius=" << metrics.rel_frobenius << " max_abs=" << metrics.max_abs
                    << " gamma_updates=" << counts.gamma_updates
                    << " g_evals=" << counts.g_evals_1d
                    << " naive_updates=" << counts.naive_updates << " "
                    << (pass ? "PASS" : "FAIL") << "\n";
          if (!pass)
            std::cout << "  tolerance " << config.tolerance << " exceeded at (family=" << name
                      << ", D=" << dims << ", m=" << m << ", N=" << n << ")\n";
        }
      }
    }
  }

  std::cout << (failures == 0 ? "PASS" : "FAIL") << " " << cases - failures << "/" << cases
            << " cases within " << config.tolerance << "\n";
  return failures == 0 ? 0 : 1;
}

// -------------------------------------------------------------------- bench

struct BenchConfig {
  std::string family_name = "hilbert";
  int dims = 3;
  std::vector<std::uint32_t> m_list = {5, 8, 11, 15, 20};
  std::int64_t n = 500;
  int repetitions = 3;
  std::int64_t naive_cap = 3375;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out_path = "bench.csv";
};

int cmd_bench(const BenchConfig& config) {
  std::ofstream out(config.out_path);
  if (!out) throw hgp::IoError("cannot open '" + config.out_path + "' for writing");
  out << "M,t_naive,t_gamma,bytes_dense,bytes_gamma\n";
  std::cout << "M,t_naive,t_gamma,bytes_dense,bytes_gamma\n";

  for (std::uint32_t m : config.m_list) {
    hgp::Rng rng(config.seed);
    hgp::Dataset data;
    data.x = hgp::uniform_inputs(rng, config.n, config.dims, -0.9, 0.9);

    const std::vector<std::uint32_t> m_per_dim(static_cast<std::size_t>(config.dims), m);
    const std::vector<double> domain(static_cast<std::size_t>(config.dims), 1.0);
    const hgp::BasisFamily family = make_family(
        config.family_name,
        config.family_name == "fourier" ? std::vector<std::uint32_t>{m} : m_per_dim, domain, 1.0);

    hgp::AccumOptions options;
    options.threads = config.threads;

    const std::int64_t features = hgp::feature_count(family);
    const double t_gamma = median_time(config.repetitions, [&] {
      if (config.family_name == "fourier") {
        (void)hgp::fourier_gamma_1d(data, 1.0, m, options);
      } else {
        (void)hgp::accumulate_gamma(family, data, options);
      }
    });

    std::string t_naive;
    if (features <= config.naive_cap) {
      const double measured = median_time(config.repetitions, [&] {
        if (hgp::is_complex(family)) {
          (void)hgp::accumulate_naive_complex(family, data, options);
        } else {
          (void)hgp::accumulate_naive(family, data, options);
        }
      });
      t_naive = hgp::format_double(measured);
    }

    const std::int64_t bytes_dense = hgp::dense_storage_bytes(family);
    const std::int64_t bytes_gamma = hgp::gamma_storage_bytes(family);
    out << features << "," << t_naive << "," << hgp::format_double(t_gamma) << "," << bytes_dense
        << "," << bytes_gamma << "\n";
    std::cout << features << "," << t_naive << "," << hgp::format_double(t_gamma) << ","
              << bytes_dense << "," << bytes_gamma << "\n";
  }
  return 0;
}

// -------------------------------------------------------------------- merge

int cmd_merge(const std::string& out_path, const std::vector<std::string>& inputs) {
  if (inputs.size() < 2) throw hgp::UnsupportedError("merge: needs at least two input files");

  hgp::PrecisionSummary merged = hgp::read_summary_file(inputs[0]);
  std::int64_t payload_bytes = hgp::summary_payload_bytes(merged);
  for (std::size_t i = 1; i < inputs.size(); ++i) {
    const hgp::PrecisionSummary next = hgp::read_summary_file(inputs[i]);
    hgp::require_mergeable(merged, next);
    payload_bytes += hgp::summary_payload_bytes(next);
    merged = hgp::merge_summaries(merged, next);
  }
  hgp::write_summary_file(out_path, merged);
  std::cout << "merged " << inputs.size() << " summaries (" << payload_bytes
            << " payload bytes) into " << out_path << " (n = " << merged.n << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured basis-function GP regression (Hankel-Toeplitz precision matrices)"};
  app.require_subcommand(1);

  FitConfig fit;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit a model from a CSV dataset");
  fit_cmd->add_option("--data", fit.data_path, "Training CSV (x_1..x_D,y)")->required();
  fit_cmd->add_option("--family", fit.family_name, "Basis family (hilbert)");
  fit_cmd->add_option("--m", fit.m, "Basis functions per dimension")->required()->delimiter(',');
  fit_cmd->add_option("--domain", fit.domain, "Half-widths L_1,..,L_D or 'auto'");
  fit_cmd->add_option("--iters", fit.iterations, "Optimizer iterations");
  fit_cmd->add_option("--lr", fit.learning_rate, "Optimizer step size");
  fit_cmd->add_option("--init-lengthscale", fit.init_lengthscale, "Initial lengthscale");
  fit_cmd->add_option("--init-signal-variance", fit.init_signal_variance, "Initial signal variance");
  fit_cmd->add_option("--init-noise-variance", fit.init_noise_variance, "Initial noise variance");
  fit_cmd->add_flag("--naive", fit.naive, "Use the dense accumulation path");
  fit_cmd->add_flag("--compensated", fit.compensated, "Compensated summation");
  fit_cmd->add_option("--threads", fit.threads, "Accumulation worker threads");
  fit_cmd->add_option("--split", fit.split, "Checkerboard hold-out, e.g. grid:8x8");
  fit_cmd->add_option("--out", fit.out_path, "Model JSON output")->required();
  fit_cmd->add_option("--summary", fit.summary_path, "Summary binary output path");

  std::string predict_model, predict_data, predict_out;
  CLI::App* predict_cmd = app.add_subcommand("predict", "Predict at test inputs");
  predict_cmd->add_option("--model", predict_model, "Model JSON")->required();
  predict_cmd->add_option("--data", predict_data, "Test CSV (x_1..x_D[,y])")->required();
  predict_cmd->add_option("--out", predict_out, "Prediction CSV output")->required();

  VerifyConfig verify;
  CLI::App* verify_cmd =
      app.add_subcommand("verify", "Check the gamma route against the dense route");
  verify_cmd->add_option("--families", verify.families, "Families to sweep")->delimiter(',');
  verify_cmd->add_option("--dims", verify.dims, "Input dimensions to sweep")->delimiter(',');
  verify_cmd->add_option("--m", verify.m_list, "Per-dimension basis counts")->delimiter(',');
  verify_cmd->add_option("--n", verify.n_list, "Dataset sizes")->delimiter(',');
  verify_cmd->add_option("--seed", verify.seed, "Seed for the synthetic data");
  verify_cmd->add_option("--tol", verify.tolerance, "Relative Frobenius tolerance");
  verify_cmd->add_flag("--compensated", verify.compensated, "Compensated summation");
  verify_cmd->add_option("--threads", verify.threads, "Accumulation worker threads");

  BenchConfig bench;
  CLI::App* bench_cmd = app.add_subcommand("bench", "Time naive vs gamma accumulation");
  bench_cmd->add_option("--family", bench.family_name, "Basis family");
  bench_cmd->add_option("--dims", bench.dims, "Input dimension");
  bench_cmd->add_option("--m", bench.m_list, "Per-dimension basis counts")->delimiter(',');
  bench_cmd->add_option("--n", bench.n, "Data points");
  bench_cmd->add_option("--reps", bench.repetitions, "Repetitions (median reported)");
  bench_cmd->add_option("--naive-cap", bench.naive_cap, "Skip naive timing above this M");
  bench_cmd->add_option("--seed", bench.seed, "Seed for the synthetic data");
  bench_cmd->add_option("--threads", bench.threads, "Accumulation worker threads");
  bench_cmd->add_option("--out", bench.out_path, "Timing CSV output");

  std::string merge_out;
  std::vector<std::string> merge_inputs;
  CLI::App* merge_cmd = app.add_subcommand("merge", "Merge summary binaries");
  merge_cmd->add_option("--out", merge_out, "Merged summary output")->required();
  merge_cmd->add_option("inputs", merge_inputs, "Summary files to merge")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(fit_cmd)) return cmd_fit(fit);
    if (app.got_subcommand(predict_cmd)) return cmd_predict(predict_model, predict_data, predict_out);
    if (app.got_subcommand(verify_cmd)) return cmd_verify(verify);
    if (app.got_subcommand(bench_cmd)) return cmd_bench(bench);
    if (app.got_subcommand(merge_cmd)) return cmd_merge(merge_out, merge_inputs);
  } catch (const hgp::UnsupportedError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const hgp::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
