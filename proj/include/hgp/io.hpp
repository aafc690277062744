#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "hgp/basis.hpp"
#include "hgp/gp.hpp"
#include "hgp/precision.hpp"
#include "hgp/structured.hpp"

namespace hgp {

// ---------------------------------------------------------------------------
// Binary gamma format, all little-endian:
//   magic "GHTP" | u16 version | u8 scalar field | u8 D |
//   per level: u32 m, u8 kind, i8 sign_toeplitz |
//   u64 n_points | payload f64 row-major (complex interleaved re, im)
//
// A summary file is 1 gamma section (3 for Fourier blocks) followed by an
// observation sidecar in the same framing:
//   magic "GHTS" | u16 version | u8 scalar field | u64 M |
//   payload M f64 Phi^T y (complex interleaved) | f64 y^T y | u64 n
// The sidecar is omitted for precision-only files.
// ---------------------------------------------------------------------------

void write_gamma(std::ostream& out, const GammaTensor& gamma);
GammaTensor read_gamma(std::istream& in);

void write_summary_file(const std::filesystem::path& path, const PrecisionSummary& summary);
PrecisionSummary read_summary_file(const std::filesystem::path& path);

/// Throws std::invalid_argument naming the first divergent header field.
void require_mergeable(const PrecisionSummary& a, const PrecisionSummary& b);

/// Payload bytes (gamma entries plus sidecar vector) of a summary.
std::int64_t summary_payload_bytes(const PrecisionSummary& summary);

// CSV dataset: header row "x_1,...,x_D[,y]", '.' decimal, UTF-8.
Dataset read_dataset_csv(const std::filesystem::path& path, int expected_dim = -1,
                         bool require_y = false);
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data);

/// Prediction table: x_1..x_D, mean, variance[, nlpd], outside_domain.
void write_predictions_csv(std::ostream& out, const Eigen::MatrixXd& x_star, const Posterior& post,
                           const Eigen::VectorXd* nlpd_per_point,
                           const std::vector<bool>& outside_domain);

// Model file: JSON with the family fragment, hyperparameters, and the summary
// binary path (relative paths resolve against the model file's directory).
struct ModelFile {
  BasisFamily family;
  Hyperparams hyperparams;
  std::string summary_path;
};

void write_model_file(const std::filesystem::path& path, const ModelFile& model);
ModelFile read_model_file(const std::filesystem::path& path);

/// Resolves the model's summary path against the model file location.
std::filesystem::path resolve_summary_path(const std::filesystem::path& model_path,
                                           const ModelFile& model);

/// Deterministic shortest-round-trip float formatting used in CSV output.
std::string format_double(double value);

}  // namespace hgp
