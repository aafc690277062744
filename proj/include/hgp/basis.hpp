#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hgp/structured.hpp"

namespace hgp {

// ---------------------------------------------------------------------------
// Basis-function families whose per-dimension products phi_i(x) phi_j(x)
// collapse onto a single offset function g:
//
//   Polynomial            phi_i(x) = x^(i-1)            g(k, x) = x^(k-1),
//                                                       offsets k = i+j-1
//   ComplexExponential    phi_i(x) = exp(i pi i x)      g(k, x) = exp(i pi k x),
//                                                       offsets k = i+j
//   Hilbert               phi_i(x) = sin(pi i (x+L) / (2L)) / sqrt(L)
//                         g(k, x) = sin(pi k (x+L)/(2L) - pi/2) / (2L),
//                         phi_i phi_j = g(i+j) - g(i-j)
//   Fourier1D             features [sin(dx),..,sin(m dx), cos(dx),..,cos(m dx)]
//                         three block g-functions (see FourierBlock)
//
// Basis indices are 1-based. Offsets are "logical": the stored slot t of a
// level maps to logical offset g_offset_base + t.
// ---------------------------------------------------------------------------

struct PolynomialFamily {
  std::vector<std::uint32_t> m;
};

struct ComplexExponentialFamily {
  std::vector<std::uint32_t> m;
};

struct HilbertFamily {
  std::vector<std::uint32_t> m;
  std::vector<double> half_width;  // domain half-widths L_d; BFs vanish at +-L_d
};

struct Fourier1DFamily {
  std::uint32_t m = 1;   // frequencies per trig block; 2m features total
  double spacing = 1.0;  // frequency spacing delta
};

using BasisFamily =
    std::variant<PolynomialFamily, ComplexExponentialFamily, HilbertFamily, Fourier1DFamily>;

/// Block index within the Fourier1D precision matrix. Functions taking a
/// dimension argument interpret it as this block index for Fourier1D.
enum class FourierBlock : int { kSinSin = 0, kCosSin = 1, kCosCos = 2 };

int input_dim(const BasisFamily& family);
std::int64_t feature_count(const BasisFamily& family);  // M (2m for Fourier1D)
bool is_complex(const BasisFamily& family);
std::string family_name(const BasisFamily& family);
std::uint32_t bfs_along(const BasisFamily& family, int d);

/// Throws std::invalid_argument on empty/invalid parameters.
void validate(const BasisFamily& family);

/// phi_i^(d)(x) for 1 <= i <= m_d. Hilbert inputs outside [-L_d, L_d] produce
/// a warn-level diagnostic; the value is still returned.
double eval_bf_1d(const BasisFamily& family, int d, int i, double x);
std::complex<double> eval_bf_1d_complex(const BasisFamily& family, int d, int i, double x);

/// Full feature row: Kronecker product of the per-dimension vectors, level 1
/// outermost ([sins; coss] for Fourier1D).
Eigen::VectorXd regressor_row(const BasisFamily& family, std::span<const double> x);
Eigen::VectorXcd regressor_row_complex(const BasisFamily& family, std::span<const double> x);

/// Logical offset of stored slot 0 along dimension d (block d for Fourier1D).
int g_offset_base(const BasisFamily& family, int d);
std::int64_t g_span(const BasisFamily& family, int d);

/// The per-dimension offset function; k is the logical offset. For Fourier1D,
/// d selects the block per FourierBlock.
double g_function(const BasisFamily& family, int d, int k, double x);
std::complex<double> g_function_complex(const BasisFamily& family, int d, int k, double x);

/// Fills out[t] = g(g_offset_base + t, x) for the whole offset range of
/// dimension (or Fourier block) d. out.size() must equal g_span.
void fill_g_vector(const BasisFamily& family, int d, double x, std::span<double> out);
void fill_g_vector_complex(const BasisFamily& family, int d, double x,
                           std::span<std::complex<double>> out);

/// Structure of the precision matrix for the tensor-product families; throws
/// UnsupportedError for Fourier1D (use structure_descriptors).
LevelStructure structure_descriptor(const BasisFamily& family);

/// One descriptor for tensor-product families; the [sin-sin, cos-sin, cos-cos]
/// block descriptors for Fourier1D.
std::vector<LevelStructure> structure_descriptors(const BasisFamily& family);

/// Fills the per-dimension basis values phi_1..phi_m at x (dimension d).
void fill_bf_vector(const BasisFamily& family, int d, double x, std::span<double> out);
void fill_bf_vector_complex(const BasisFamily& family, int d, double x,
                            std::span<std::complex<double>> out);

// JSON model-file fragment, e.g. {"family": "hilbert", "m": [...], "L": [...]}.
std::string family_to_json(const BasisFamily& family);
BasisFamily family_from_json(const std::string& json_text);

}  // namespace hgp
