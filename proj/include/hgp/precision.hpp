#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hgp/basis.hpp"
#include "hgp/structured.hpp"

namespace hgp {

struct Dataset {
  Eigen::MatrixXd x;  // N x D input coordinates
  Eigen::VectorXd y;  // N observations, or empty for precision-only use

  std::int64_t size() const { return x.rows(); }
  int dim() const { return static_cast<int>(x.cols()); }
  bool has_y() const { return y.size() == x.rows() && x.rows() > 0; }

  /// Throws std::invalid_argument on non-finite entries or a y length that
  /// matches neither 0 nor N.
  void validate() const;
};

/// Work counters for the two accumulation routes. gamma_updates is the number
/// of gamma-entry multiply-accumulates (the per-point unique-entry budget);
/// g_evals_1d counts per-dimension offset-function values; naive_updates
/// counts dense M^2 entry updates.
struct OpCounts {
  std::uint64_t g_evals_1d = 0;
  std::uint64_t gamma_updates = 0;
  std::uint64_t naive_updates = 0;

  OpCounts& operator+=(const OpCounts& other) {
    g_evals_1d += other.g_evals_1d;
    gamma_updates += other.gamma_updates;
    naive_updates += other.naive_updates;
    return *this;
  }
};

struct AccumOptions {
  bool compensated = false;  // Kahan summation for the accumulated statistics
  int threads = 1;           // contiguous shards, merged in order; deterministic per thread count
  OpCounts* counts = nullptr;
};

/// Dense precision matrix by an explicit loop over data points (the O(N M^2)
/// oracle route). Real-valued families only.
Eigen::MatrixXd accumulate_naive(const BasisFamily& family, const Dataset& data,
                                 const AccumOptions& options = {});
Eigen::MatrixXcd accumulate_naive_complex(const BasisFamily& family, const Dataset& data,
                                          const AccumOptions& options = {});

/// Gamma tensor of the precision matrix in O(N * unique_entry_count); for the
/// tensor-product families. Fourier1D must go through fourier_gamma_1d.
GammaTensor accumulate_gamma(const BasisFamily& family, const Dataset& data,
                             const AccumOptions& options = {});

/// The [sin-sin, cos-sin, cos-cos] offset tensors whose block assembly equals
/// the naive 2m-feature precision matrix. 1-D inputs only.
std::array<GammaTensor, 3> fourier_gamma_1d(const Dataset& data, double spacing, std::uint32_t m,
                                            const AccumOptions& options = {});

/// O(M) sufficient statistics for posterior and marginal likelihood.
struct PrecisionSummary {
  std::vector<GammaTensor> gamma_blocks;  // one tensor, or three for Fourier1D
  Eigen::VectorXd phi_t_y;                // Phi^T y (real families)
  Eigen::VectorXcd phi_t_y_complex;       // Phi^T y (complex-exponential family)
  double y_sq = 0.0;                      // y^T y
  std::uint64_t n = 0;

  ScalarField scalar_field() const;
  std::int64_t feature_dim() const;  // M
  bool has_observations() const { return phi_t_y.size() > 0 || phi_t_y_complex.size() > 0; }
};

/// Single pass over (x, y): gamma blocks, Phi^T y, y^T y, N.
PrecisionSummary accumulate_stats(const BasisFamily& family, const Dataset& data,
                                  const AccumOptions& options = {});

/// Folds one observation into the summary; O(unique_entry_count + M).
/// Equals accumulate_stats over the extended dataset.
PrecisionSummary update_stats(PrecisionSummary summary, const BasisFamily& family,
                              std::span<const double> x, double y);

/// Elementwise sum of two compatible summaries.
PrecisionSummary merge_summaries(const PrecisionSummary& a, const PrecisionSummary& b);

/// Dense M x M precision from the compact form: materialization for a single
/// tensor, block assembly [[SS, CS^T], [CS, CC]] for Fourier1D. O(M^2).
Eigen::MatrixXd reconstruct_precision(const PrecisionSummary& summary);
Eigen::MatrixXd reconstruct_precision(const GammaTensor& gamma);
Eigen::MatrixXd assemble_fourier_precision(std::span<const GammaTensor> blocks);
Eigen::MatrixXcd reconstruct_precision_complex(const PrecisionSummary& summary);

/// Compact storage footprint in bytes of a summary's gamma payload
/// (8 bytes per real entry, 16 per complex entry).
std::int64_t gamma_storage_bytes(const BasisFamily& family);
/// Dense precision storage in bytes: 8 M^2 (16 M^2 complex).
std::int64_t dense_storage_bytes(const BasisFamily& family);

}  // namespace hgp
