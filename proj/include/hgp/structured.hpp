#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hgp {

// ---------------------------------------------------------------------------
// Multi-level block Hankel / Toeplitz / Hankel-plus-Toeplitz structure and the
// compact tensor of unique precision-matrix entries.
//
// A D-level structured matrix of total size M x M (M = prod m_d) is described
// per level by its kind. Every entry is addressed through per-level offsets:
//
//   Hankel:              k_d = i_d + j_d - 1            (2 m_d - 1 offsets)
//   Toeplitz:            k_d = m_d + i_d - j_d          (2 m_d - 1 offsets)
//   Hankel+Toeplitz:     k_d = i_d + j_d and i_d - j_d  (3 m_d offsets,
//                        logical range 1 - m_d .. 2 m_d)
//
// For Hankel+Toeplitz levels the entry is a signed sum of two tensor lookups
// per level; the sign multiplying the difference-offset (Toeplitz) part is
// sign_toeplitz (-1 for sine-product bases, +1 for the cosine-cosine Fourier
// block). Offsets are stored 0-based per level in row-major order, level 1
// outermost, matching the Kronecker order of the basis expansion.
// ---------------------------------------------------------------------------

enum class LevelKind : std::uint8_t {
  kHankel = 0,
  kToeplitz = 1,
  kHankelPlusToeplitz = 2,
};

enum class ScalarField : std::uint8_t {
  kReal64 = 0,
  kComplex128 = 1,
};

struct Level {
  std::uint32_t m = 1;
  LevelKind kind = LevelKind::kHankel;
  std::int8_t sign_toeplitz = -1;  // meaningful for kHankelPlusToeplitz only

  /// Number of stored offsets at this level.
  std::int64_t span() const {
    return kind == LevelKind::kHankelPlusToeplitz ? 3 * static_cast<std::int64_t>(m)
                                                  : 2 * static_cast<std::int64_t>(m) - 1;
  }

  bool operator==(const Level&) const = default;
};

struct LevelStructure {
  std::vector<Level> levels;

  int dim() const { return static_cast<int>(levels.size()); }
  std::int64_t total_bfs() const;          // M = prod m_d
  std::int64_t unique_entry_count() const; // prod of level spans
  std::string describe() const;

  /// Throws std::invalid_argument on an empty structure or m_d < 1; normalizes
  /// sign_toeplitz to -1 on levels where it has no meaning.
  void validate_and_normalize();

  bool operator==(const LevelStructure&) const = default;
};

/// 1-based Hankel offset k = i + j - 1 for an m x m level; throws
/// std::out_of_range unless 1 <= i, j <= m.
int hankel_entry_index(int i, int j, int m);

/// 1-based Toeplitz offset k = m + i - j; same bounds contract.
int toeplitz_entry_index(int i, int j, int m);

std::int64_t unique_entry_count(const LevelStructure& structure);

/// Compact tensor of all unique entries of a structured M x M matrix,
/// immutable once constructed. Accumulators build the payload and hand it
/// over; merge is a pure function.
class GammaTensor {
 public:
  GammaTensor() = default;
  /// Zero-initialized tensor (an accumulation over zero points).
  GammaTensor(LevelStructure structure, ScalarField field);
  GammaTensor(LevelStructure structure, std::vector<double> data, std::uint64_t n_points);
  GammaTensor(LevelStructure structure, std::vector<std::complex<double>> data,
              std::uint64_t n_points);

  const LevelStructure& structure() const { return structure_; }
  ScalarField scalar_field() const { return field_; }
  std::uint64_t n_points() const { return n_points_; }
  std::int64_t size() const { return structure_.unique_entry_count(); }

  std::span<const double> real_data() const { return real_data_; }
  std::span<const std::complex<double>> complex_data() const { return complex_data_; }

  /// Entry (i, j) of the materialized matrix from 1-based per-level
  /// multi-indices. Real tensors only; see block_entry_complex.
  double block_entry(std::span<const int> i, std::span<const int> j) const;
  std::complex<double> block_entry_complex(std::span<const int> i, std::span<const int> j) const;

  /// Dense M x M matrix; entry (i, j) equals block_entry at the decoded
  /// multi-indices (row-major, level 1 outermost). O(M^2).
  Eigen::MatrixXd materialize() const;
  Eigen::MatrixXcd materialize_complex() const;

 private:
  LevelStructure structure_;
  ScalarField field_ = ScalarField::kReal64;
  std::vector<double> real_data_;
  std::vector<std::complex<double>> complex_data_;
  std::uint64_t n_points_ = 0;
};

/// Elementwise sum of two identically structured tensors; n_points add.
/// Throws std::invalid_argument naming both descriptors on mismatch.
GammaTensor merge(const GammaTensor& a, const GammaTensor& b);

namespace detail {
/// Per-level (slot, sign) lookup options for one (i_d, j_d) pair: one option
/// for Hankel/Toeplitz levels, two for Hankel+Toeplitz.
struct EntryOptions {
  int count = 0;
  std::int64_t slot[2] = {0, 0};
  double sign[2] = {1.0, 1.0};
};

EntryOptions entry_options(const Level& level, int i, int j);

/// Decodes a 0-based flat row/column index into 1-based per-level indices.
void decode_multi_index(const LevelStructure& structure, std::int64_t flat, std::span<int> out);
}  // namespace detail

}  // namespace hgp
