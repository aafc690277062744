#include "hgp/basis.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "hgp/errors.hpp"
#include "hgp/log.hpp"
#include "json.hpp"

namespace hgp {

namespace {

using json = nlohmann::json;

template <typename F>
decltype(auto) on_family(const BasisFamily& family, F&& f) {
  return std::visit(std::forward<F>(f), family);
}

void check_dim(const BasisFamily& family, int d, const char* what) {
  const int dims = input_dim(family);
  const bool fourier = std::holds_alternative<Fourier1DFamily>(family);
  const int limit = fourier ? 3 : dims;  // Fourier d indexes the three blocks
  if (d < 0 || d >= limit) {
    std::ostringstream os;
    os << what << ": dimension index " << d << " out of range";
    throw std::out_of_range(os.str());
  }
}

void check_bf_index(int i, std::uint32_t m, const char* what) {
  if (i < 1 || i > static_cast<int>(m)) {
    std::ostringstream os;
    os << what << ": basis index " << i << " out of range for m = " << m;
    throw std::out_of_range(os.str());
  }
}

// out[t] = scale * sin(a * (k0 + t) + b) for t in [0, n). Rotation recurrence
// with periodic re-anchoring to keep drift at the epsilon level.
void fill_sin_sequence(double a, double b, double k0, std::int64_t n, double scale,
                       std::span<double> out) {
  const double step_s = std::sin(a);
  const double step_c = std::cos(a);
  double s = 0.0, c = 1.0;
  for (std::int64_t t = 0; t < n; ++t) {
    if ((t & 63) == 0) {
      const double angle = a * (k0 + static_cast<double>(t)) + b;
      s = std::sin(angle);
      c = std::cos(angle);
    }
    out[static_cast<std::size_t>(t)] = scale * s;
    const double ns = s * step_c + c * step_s;
    const double nc = c * step_c - s * step_s;
    s = ns;
    c = nc;
  }
}

void fill_cos_sequence(double a, double b, double k0, std::int64_t n, double scale,
                       std::span<double> out) {
  fill_sin_sequence(a, b + M_PI / 2.0, k0, n, scale, out);
}

double hilbert_domain_checked(const HilbertFamily& family, int d, double x) {
  const double half_width = family.half_width[static_cast<std::size_t>(d)];
  if (std::abs(x) > half_width) {
    log::warn("hilbert basis evaluated at x = ", x, " outside the domain [-", half_width, ", ",
              half_width, "]; the approximation is not valid there");
  }
  return half_width;
}

}  // namespace

int input_dim(const BasisFamily& family) {
  return on_family(family, [](const auto& f) -> int {
    using T = std::decay_t<decltype(f)>;
    if constexpr (std::is_same_v<T, Fourier1DFamily>) {
      return 1;
    } else {
      return static_cast<int>(f.m.size());
    }
  });
}

std::int64_t feature_count(const BasisFamily& family) {
  return on_family(family, [](const auto& f) -> std::int64_t {
    using T = std::decay_t<decltype(f)>;
    if constexpr (std::is_same_v<T, Fourier1DFamily>) {
      return 2 * static_cast<std::int64_t>(f.m);
    } else {
      std::int64_t m = 1;
      for (std::uint32_t md : f.m) m *= md;
      return m;
    }
  });
}

bool is_complex(const BasisFamily& family) {
  return std::holds_alternative<ComplexExponentialFamily>(family);
}

std::string family_name(const BasisFamily& family) {
  return on_family(family, [](const auto& f) -> std::string {
    using T = std::decay_t<decltype(f)>;
    if constexpr (std::is_same_v<T, PolynomialFamily>) return "polynomial";
    if constexpr (std::is_same_v<T, ComplexExponentialFamily>) return "complex-exponential";
    if constexpr (std::is_same_v<T, HilbertFamily>) return "hilbert";
    if constexpr (std::is_same_v<T, Fourier1DFamily>) return "fourier";
  });
}

std::uint32_t bfs_along(const BasisFamily& family, int d) {
  if (const auto* fourier = std::get_if<Fourier1DFamily>(&family)) return fourier->m;
  check_dim(family, d, "bfs_along");
  return on_family(family, [d](const auto& f) -> std::uint32_t {
    using T = std::decay_t<decltype(f)>;
    if constexpr (std::is_same_v<T, Fourier1DFamily>) {
      return f.m;
    } else {
      return f.m[static_cast<std::size_t>(d)];
    }
  });
}

void validate(const BasisFamily& family) {
  on_family(family, [](const auto& f) {
    using T = std::decay_t<decltype(f)>;
    if constexpr (std::is_same_v<T, Fourier1DFamily>) {
      if (f.m < 1) throw std::invalid_argument("fourier family: m must be >= 1");
      if (!(f.spacing > 0.0)) throw std::invalid_argument("fourier family: spacing must be > 0");
    } else {
      if (f.m.empty()) throw std::invalid_argument("basis family: needs at least one dimension");
      for (std::uint32_t m : f.m)
        if (m < 1) throw std::invalid_argument("basis family: m_d must be >= 1");
      if constexpr (std::is_same_v<T, HilbertFamily>) {
        if (f.half_width.size() != f.m.size())
          throw std::invalid_argument("hilbert family: one half-width per dimension required");
        for (double half_width : f.half_width)
          if (!(half_width > 0.0))
            throw std::invalid_argument("hilbert family: half-widths must be > 0");
      }
    }
  });
}

double eval_bf_1d(const BasisFamily& family, int d, int i, double x) {
  check_dim(family, d, "eval_bf_1d");
  if (const auto* poly = std::get_if<PolynomialFamily>(&family)) {
    check_bf_index(i, poly->m[static_cast<std::size_t>(d)], "eval_bf_1d");
    return std::pow(x, i - 1);
  }
  if (const auto* hilbert = std::get_if<HilbertFamily>(&family)) {
    check_bf_index(i, hilbert->m[static_cast<std::size_t>(d)], "eval_bf_1d");
    const double half_width = hilbert_domain_checked(*hilbert, d, x);
    return std::sin(M_PI * i * (x + half_width) / (2.0 * half_width)) / std::sqrt(half_width);
  }
  if (const auto* fourier = std::get_if<Fourier1DFamily>(&family)) {
    // i indexes the 2m features: sines first, cosines second.
    if (i < 1 || i > 2 * static_cast<int>(fourier->m))
      throw std::out_of_range("eval_bf_1d: fourier feature index out of range");
    const int freq = (i <= static_cast<int>(fourier->m)) ? i : i - static_cast<int>(fourier->m);
    const double angle = freq * fourier->spacing * x;
    return (i <= static_cast<int>(fourier->m)) ? std::sin(angle) : std::cos(angle);
  }
  throw std::invalid_argument("eval_bf_1d: family is complex-valued; use eval_bf_1d_complex");
}

std::complex<double> eval_bf_1d_complex(const BasisFamily& family, int d, int i, double x) {
  if (const auto* ce = std::get_if<ComplexExponentialFamily>(&family)) {
    check_dim(family, d, "eval_bf_1d_complex");
    check_bf_index(i, ce->m[static_cast<std::size_t>(d)], "eval_bf_1d_complex");
    return std::polar(1.0, M_PI * i * x);
  }
  return {eval_bf_1d(family, d, i, x), 0.0};
}

void fill_bf_vector(const BasisFamily& family, int d, double x, std::span<double> out) {
  if (std::holds_alternative<PolynomialFamily>(family)) {
    check_dim(family, d, "fill_bf_vector");
    double power = 1.0;
    for (std::size_t t = 0; t < out.size(); ++t) {
      out[t] = power;
      power *= x;
    }
    return;
  }
  if (const auto* hilbert = std::get_if<HilbertFamily>(&family)) {
    check_dim(family, d, "fill_bf_vector");
    const double half_width = hilbert_domain_checked(*hilbert, d, x);
    const double a = M_PI * (x + half_width) / (2.0 * half_width);
    fill_sin_sequence(a, 0.0, 1.0, static_cast<std::int64_t>(out.size()),
                      1.0 / std::sqrt(half_width), out);
    return;
  }
  if (const auto* fourier = std::get_if<Fourier1DFamily>(&family)) {
    const std::int64_t m = fourier->m;
    if (static_cast<std::int64_t>(out.size()) != 2 * m)
      throw std::invalid_argument("fill_bf_vector: fourier feature vector has 2m entries");
    const double a = fourier->spacing * x;
    fill_sin_sequence(a, 0.0, 1.0, m, 1.0, out.subspan(0, static_cast<std::size_t>(m)));
    fill_cos_sequence(a, 0.0, 1.0, m, 1.0, out.subspan(static_cast<std::size_t>(m)));
    return;
  }
  throw std::invalid_argument("fill_bf_vector: family is complex-valued");
}

void fill_bf_vector_complex(const BasisFamily& family, int d, double x,
                            std::span<std::complex<double>> out) {
  if (std::holds_alternative<ComplexExponentialFamily>(family)) {
    check_dim(family, d, "fill_bf_vector_complex");
    const std::complex<double> step = std::polar(1.0, M_PI * x);
    std::complex<double> value = step;
    for (std::size_t t = 0; t < out.size(); ++t) {
      if ((t & 63) == 0) value = std::polar(1.0, M_PI * static_cast<double>(t + 1) * x);
      out[t] = value;
      value *= step;
    }
    return;
  }
  std::vector<double> real(out.size());
  fill_bf_vector(family, d, x, real);
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = {real[t], 0.0};
}

namespace {

template <typename Scalar>
Eigen::Vector<Scalar, Eigen::Dynamic> kronecker_row(const BasisFamily& family,
                                                    std::span<const double> x) {
  const int dims = input_dim(family);
  if (static_cast<int>(x.size()) != dims) {
    std::ostringstream os;
    os << "regressor_row: input has " << x.size() << " coordinates, family expects " << dims;
    throw std::invalid_argument(os.str());
  }

  if (std::holds_alternative<Fourier1DFamily>(family)) {
    Eigen::Vector<Scalar, Eigen::Dynamic> row(feature_count(family));
    if constexpr (std::is_same_v<Scalar, double>) {
      fill_bf_vector(family, 0, x[0], {row.data(), static_cast<std::size_t>(row.size())});
    } else {
      fill_bf_vector_complex(family, 0, x[0], {row.data(), static_cast<std::size_t>(row.size())});
    }
    return row;
  }

  std::vector<std::vector<Scalar>> per_dim(static_cast<std::size_t>(dims));
  for (int d = 0; d < dims; ++d) {
    per_dim[static_cast<std::size_t>(d)].resize(bfs_along(family, d));
    if constexpr (std::is_same_v<Scalar, double>) {
      fill_bf_vector(family, d, x[static_cast<std::size_t>(d)], per_dim[static_cast<std::size_t>(d)]);
    } else {
      fill_bf_vector_complex(family, d, x[static_cast<std::size_t>(d)],
                             per_dim[static_cast<std::size_t>(d)]);
    }
  }

  const std::int64_t total = feature_count(family);
  Eigen::Vector<Scalar, Eigen::Dynamic> row(total);
  std::vector<int> digits(static_cast<std::size_t>(dims), 0);
  for (std::int64_t flat = 0; flat < total; ++flat) {
    Scalar value{1.0};
    for (int d = 0; d < dims; ++d)
      value *= per_dim[static_cast<std::size_t>(d)][static_cast<std::size_t>(digits[static_cast<std::size_t>(d)])];
    row[flat] = value;
    for (int d = dims - 1; d >= 0; --d) {
      if (++digits[static_cast<std::size_t>(d)] < static_cast<int>(bfs_along(family, d))) break;
      digits[static_cast<std::size_t>(d)] = 0;
    }
  }
  return row;
}

}  // namespace

Eigen::VectorXd regressor_row(const BasisFamily& family, std::span<const double> x) {
  if (is_complex(family))
    throw std::invalid_argument("regressor_row: family is complex-valued; use regressor_row_complex");
  return kronecker_row<double>(family, x);
}

Eigen::VectorXcd regressor_row_complex(const BasisFamily& family, std::span<const double> x) {
  if (!is_complex(family)) return kronecker_row<double>(family, x).cast<std::complex<double>>();
  return kronecker_row<std::complex<double>>(family, x);
}

int g_offset_base(const BasisFamily& family, int d) {
  check_dim(family, d, "g_offset_base");
  return on_family(family, [&](const auto& f) -> int {
    using T = std::decay_t<decltype(f)>;
    if constexpr (std::is_same_v<T, PolynomialFamily>) return 1;
    if constexpr (std::is_same_v<T, ComplexExponentialFamily>) return 2;
    if constexpr (std::is_same_v<T, HilbertFamily>)
      return 1 - static_cast<int>(f.m[static_cast<std::size_t>(d)]);
    if constexpr (std::is_same_v<T, Fourier1DFamily>) return 1 - static_cast<int>(f.m);
  });
}

std::int64_t g_span(const BasisFamily& family, int d) {
  check_dim(family, d, "g_span");
  const std::uint32_t m = bfs_along(family, std::holds_alternative<Fourier1DFamily>(family) ? 0 : d);
  if (std::holds_alternative<PolynomialFamily>(family) ||
      std::holds_alternative<ComplexExponentialFamily>(family)) {
    return 2 * static_cast<std::int64_t>(m) - 1;
  }
  return 3 * static_cast<std::int64_t>(m);
}

namespace {

void check_offset(const BasisFamily& family, int d, int k, const char* what) {
  const int base = g_offset_base(family, d);
  const std::int64_t span = g_span(family, d);
  if (k < base || k >= base + span) {
    std::ostringstream os;
    os << what << ": offset " << k << " outside [" << base << ", " << base + span - 1 << "]";
    throw std::out_of_range(os.str());
  }
}

}  // namespace

double g_function(const BasisFamily& family, int d, int k, double x) {
  check_offset(family, d, k, "g_function");
  if (std::holds_alternative<PolynomialFamily>(family)) return std::pow(x, k - 1);
  if (const auto* hilbert = std::get_if<HilbertFamily>(&family)) {
    const double half_width = hilbert->half_width[static_cast<std::size_t>(d)];
    return std::sin(M_PI * k * (x + half_width) / (2.0 * half_width) - M_PI / 2.0) /
           (2.0 * half_width);
  }
  if (const auto* fourier = std::get_if<Fourier1DFamily>(&family)) {
    const double angle = k * fourier->spacing * x;
    switch (static_cast<FourierBlock>(d)) {
      case FourierBlock::kSinSin: return -std::cos(angle) / 2.0;
      case FourierBlock::kCosSin: return std::sin(angle) / 2.0;
      case FourierBlock::kCosCos: return std::cos(angle) / 2.0;
    }
  }
  throw std::invalid_argument("g_function: family is complex-valued; use g_function_complex");
}

std::complex<double> g_function_complex(const BasisFamily& family, int d, int k, double x) {
  if (std::holds_alternative<ComplexExponentialFamily>(family)) {
    check_offset(family, d, k, "g_function_complex");
    return std::polar(1.0, M_PI * k * x);
  }
  return {g_function(family, d, k, x), 0.0};
}

void fill_g_vector(const BasisFamily& family, int d, double x, std::span<double> out) {
  check_dim(family, d, "fill_g_vector");
  const std::int64_t span = g_span(family, d);
  if (static_cast<std::int64_t>(out.size()) != span)
    throw std::invalid_argument("fill_g_vector: output span does not match the offset range");

  if (std::holds_alternative<PolynomialFamily>(family)) {
    double power = 1.0;  // x^(k-1) from k = 1
    for (std::size_t t = 0; t < out.size(); ++t) {
      out[t] = power;
      power *= x;
    }
    return;
  }
  if (const auto* hilbert = std::get_if<HilbertFamily>(&family)) {
    const double half_width = hilbert->half_width[static_cast<std::size_t>(d)];
    const double a = M_PI * (x + half_width) / (2.0 * half_width);
    const double k0 = static_cast<double>(1 - static_cast<int>(hilbert->m[static_cast<std::size_t>(d)]));
    fill_sin_sequence(a, -M_PI / 2.0, k0, span, 1.0 / (2.0 * half_width), out);
    return;
  }
  if (const auto* fourier = std::get_if<Fourier1DFamily>(&family)) {
    const double a = fourier->spacing * x;
    const double k0 = static_cast<double>(1 - static_cast<int>(fourier->m));
    switch (static_cast<FourierBlock>(d)) {
      case FourierBlock::kSinSin: fill_cos_sequence(a, 0.0, k0, span, -0.5, out); return;
      case FourierBlock::kCosSin: fill_sin_sequence(a, 0.0, k0, span, 0.5, out); return;
      case FourierBlock::kCosCos: fill_cos_sequence(a, 0.0, k0, span, 0.5, out); return;
    }
  }
  throw std::invalid_argument("fill_g_vector: family is complex-valued");
}

void fill_g_vector_complex(const BasisFamily& family, int d, double x,
                           std::span<std::complex<double>> out) {
  if (std::holds_alternative<ComplexExponentialFamily>(family)) {
    check_dim(family, d, "fill_g_vector_complex");
    const std::int64_t span = g_span(family, d);
    if (static_cast<std::int64_t>(out.size()) != span)
      throw std::invalid_argument("fill_g_vector_complex: output span mismatch");
    const std::complex<double> step = std::polar(1.0, M_PI * x);
    std::complex<double> value = std::polar(1.0, 2.0 * M_PI * x);  // offsets start at k = 2
    for (std::size_t t = 0; t < out.size(); ++t) {
      if ((t & 63) == 0) value = std::polar(1.0, M_PI * static_cast<double>(t + 2) * x);
      out[t] = value;
      value *= step;
    }
    return;
  }
  std::vector<double> real(out.size());
  fill_g_vector(family, d, x, real);
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = {real[t], 0.0};
}

LevelStructure structure_descriptor(const BasisFamily& family) {
  validate(family);
  if (std::holds_alternative<Fourier1DFamily>(family))
    throw UnsupportedError(
        "fourier features decompose into three blocks; use structure_descriptors");

  LevelStructure structure;
  const int dims = input_dim(family);
  structure.levels.reserve(static_cast<std::size_t>(dims));
  const bool hankel_only = std::holds_alternative<PolynomialFamily>(family) ||
                           std::holds_alternative<ComplexExponentialFamily>(family);
  for (int d = 0; d < dims; ++d) {
    Level level;
    level.m = bfs_along(family, d);
    level.kind = hankel_only ? LevelKind::kHankel : LevelKind::kHankelPlusToeplitz;
    level.sign_toeplitz = -1;
    structure.levels.push_back(level);
  }
  structure.validate_and_normalize();
  return structure;
}

std::vector<LevelStructure> structure_descriptors(const BasisFamily& family) {
  if (const auto* fourier = std::get_if<Fourier1DFamily>(&family)) {
    validate(family);
    std::vector<LevelStructure> blocks;
    for (int block = 0; block < 3; ++block) {
      LevelStructure structure;
      Level level;
      level.m = fourier->m;
      level.kind = LevelKind::kHankelPlusToeplitz;
      level.sign_toeplitz =
          (static_cast<FourierBlock>(block) == FourierBlock::kCosCos) ? std::int8_t{1}
                                                                      : std::int8_t{-1};
      structure.levels.push_back(level);
      structure.validate_and_normalize();
      blocks.push_back(std::move(structure));
    }
    return blocks;
  }
  return {structure_descriptor(family)};
}

std::string family_to_json(const BasisFamily& family) {
  json j;
  j["family"] = family_name(family);
  if (const auto* fourier = std::get_if<Fourier1DFamily>(&family)) {
    j["m"] = fourier->m;
    j["delta"] = fourier->spacing;
  } else {
    on_family(family, [&](const auto& f) {
      using T = std::decay_t<decltype(f)>;
      if constexpr (!std::is_same_v<T, Fourier1DFamily>) j["m"] = f.m;
      if constexpr (std::is_same_v<T, HilbertFamily>) j["L"] = f.half_width;
    });
  }
  return j.dump();
}

BasisFamily family_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw IoError(std::string("family_from_json: ") + e.what());
  }
  try {
    const std::string name = j.at("family").get<std::string>();
    BasisFamily family;
    if (name == "polynomial") {
      family = PolynomialFamily{j.at("m").get<std::vector<std::uint32_t>>()};
    } else if (name == "complex-exponential") {
      family = ComplexExponentialFamily{j.at("m").get<std::vector<std::uint32_t>>()};
    } else if (name == "hilbert") {
      family = HilbertFamily{j.at("m").get<std::vector<std::uint32_t>>(),
                             j.at("L").get<std::vector<double>>()};
    } else if (name == "fourier") {
      family = Fourier1DFamily{j.at("m").get<std::uint32_t>(), j.at("delta").get<double>()};
    } else {
      throw IoError("family_from_json: unknown family '" + name + "'");
    }
    validate(family);
    return family;
  } catch (const json::exception& e) {
    throw IoError(std::string("family_from_json: ") + e.what());
  }
}

}  // namespace hgp
