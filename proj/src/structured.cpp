#include "hgp/structured.hpp"

#include <sstream>
#include <stdexcept>

namespace hgp {

namespace {

void check_index_bounds(int i, int j, int m, const char* what) {
  if (m < 1) throw std::out_of_range(std::string(what) + ": level size m must be >= 1");
  if (i < 1 || i > m || j < 1 || j > m) {
    std::ostringstream os;
    os << what << ": indices (" << i << ", " << j << ") out of range for m = " << m;
    throw std::out_of_range(os.str());
  }
}

const char* kind_name(LevelKind kind) {
  switch (kind) {
    case LevelKind::kHankel: return "Hankel";
    case LevelKind::kToeplitz: return "Toeplitz";
    case LevelKind::kHankelPlusToeplitz: return "Hankel+Toeplitz";
  }
  return "?";
}

}  // namespace

std::int64_t LevelStructure::total_bfs() const {
  std::int64_t m = 1;
  for (const Level& level : levels) m *= level.m;
  return m;
}

std::int64_t LevelStructure::unique_entry_count() const {
  std::int64_t count = 1;
  for (const Level& level : levels) count *= level.span();
  return count;
}

std::string LevelStructure::describe() const {
  std::ostringstream os;
  for (std::size_t d = 0; d < levels.size(); ++d) {
    if (d > 0) os << " x ";
    os << kind_name(levels[d].kind) << "(m=" << levels[d].m;
    if (levels[d].kind == LevelKind::kHankelPlusToeplitz)
      os << ", sign=" << static_cast<int>(levels[d].sign_toeplitz);
    os << ")";
  }
  return os.str();
}

void LevelStructure::validate_and_normalize() {
  if (levels.empty()) throw std::invalid_argument("LevelStructure: needs at least one level");
  for (Level& level : levels) {
    if (level.m < 1) throw std::invalid_argument("LevelStructure: level size m must be >= 1");
    if (level.kind != LevelKind::kHankelPlusToeplitz) {
      level.sign_toeplitz = -1;
    } else if (level.sign_toeplitz != 1 && level.sign_toeplitz != -1) {
      throw std::invalid_argument("LevelStructure: sign_toeplitz must be +1 or -1");
    }
  }
}

int hankel_entry_index(int i, int j, int m) {
  check_index_bounds(i, j, m, "hankel_entry_index");
  return i + j - 1;
}

int toeplitz_entry_index(int i, int j, int m) {
  check_index_bounds(i, j, m, "toeplitz_entry_index");
  return m + i - j;
}

std::int64_t unique_entry_count(const LevelStructure& structure) {
  return structure.unique_entry_count();
}

GammaTensor::GammaTensor(LevelStructure structure, ScalarField field)
    : structure_(std::move(structure)), field_(field) {
  structure_.validate_and_normalize();
  const std::size_t count = static_cast<std::size_t>(structure_.unique_entry_count());
  if (field_ == ScalarField::kReal64) {
    real_data_.assign(count, 0.0);
  } else {
    complex_data_.assign(count, std::complex<double>(0.0, 0.0));
  }
}

GammaTensor::GammaTensor(LevelStructure structure, std::vector<double> data,
                         std::uint64_t n_points)
    : structure_(std::move(structure)),
      field_(ScalarField::kReal64),
      real_data_(std::move(data)),
      n_points_(n_points) {
  structure_.validate_and_normalize();
  if (static_cast<std::int64_t>(real_data_.size()) != structure_.unique_entry_count())
    throw std::invalid_argument("GammaTensor: payload size does not match the structure");
}

GammaTensor::GammaTensor(LevelStructure structure, std::vector<std::complex<double>> data,
                         std::uint64_t n_points)
    : structure_(std::move(structure)),
      field_(ScalarField::kComplex128),
      complex_data_(std::move(data)),
      n_points_(n_points) {
  structure_.validate_and_normalize();
  if (static_cast<std::int64_t>(complex_data_.size()) != structure_.unique_entry_count())
    throw std::invalid_argument("GammaTensor: payload size does not match the structure");
}

namespace detail {

EntryOptions entry_options(const Level& level, int i, int j) {
  const int m = static_cast<int>(level.m);
  EntryOptions opts;
  switch (level.kind) {
    case LevelKind::kHankel:
      opts.count = 1;
      opts.slot[0] = i + j - 2;
      break;
    case LevelKind::kToeplitz:
      opts.count = 1;
      opts.slot[0] = m + i - j - 1;
      break;
    case LevelKind::kHankelPlusToeplitz:
      // Sum offset i+j and difference offset i-j, both shifted by m-1 into
      // the 0-based [0, 3m) slot range.
      opts.count = 2;
      opts.slot[0] = i + j + m - 1;
      opts.sign[0] = 1.0;
      opts.slot[1] = i - j + m - 1;
      opts.sign[1] = static_cast<double>(level.sign_toeplitz);
      break;
  }
  return opts;
}

void decode_multi_index(const LevelStructure& structure, std::int64_t flat, std::span<int> out) {
  const int d = structure.dim();
  for (int level = d - 1; level >= 0; --level) {
    const std::int64_t m = structure.levels[static_cast<std::size_t>(level)].m;
    out[static_cast<std::size_t>(level)] = static_cast<int>(flat % m) + 1;
    flat /= m;
  }
}

namespace {

template <typename Scalar>
Scalar block_entry_impl(const LevelStructure& structure, std::span<const Scalar> data,
                        std::span<const int> i, std::span<const int> j) {
  const int d = structure.dim();
  if (static_cast<int>(i.size()) != d || static_cast<int>(j.size()) != d)
    throw std::out_of_range("block_entry: multi-index rank does not match the structure");

  EntryOptions opts[8];
  if (d > 8) throw std::out_of_range("block_entry: more than 8 levels not supported");
  for (int level = 0; level < d; ++level) {
    const Level& lv = structure.levels[static_cast<std::size_t>(level)];
    const int m = static_cast<int>(lv.m);
    if (i[level] < 1 || i[level] > m || j[level] < 1 || j[level] > m) {
      std::ostringstream os;
      os << "block_entry: index (" << i[level] << ", " << j[level] << ") out of range at level "
         << level + 1 << " (m = " << m << ")";
      throw std::out_of_range(os.str());
    }
    opts[level] = entry_options(lv, i[level], j[level]);
  }

  // Strides of the row-major offset tensor, level 1 outermost.
  std::int64_t stride[8];
  std::int64_t acc = 1;
  for (int level = d - 1; level >= 0; --level) {
    stride[level] = acc;
    acc *= structure.levels[static_cast<std::size_t>(level)].span();
  }

  Scalar total{};
  int choice[8] = {0};
  while (true) {
    std::int64_t index = 0;
    double sign = 1.0;
    for (int level = 0; level < d; ++level) {
      index += opts[level].slot[choice[level]] * stride[level];
      sign *= opts[level].sign[choice[level]];
    }
    total += sign * data[static_cast<std::size_t>(index)];

    int level = d - 1;
    while (level >= 0 && ++choice[level] == opts[level].count) {
      choice[level] = 0;
      --level;
    }
    if (level < 0) break;
  }
  return total;
}

template <typename Scalar, typename Matrix>
Matrix materialize_impl(const LevelStructure& structure, std::span<const Scalar> data) {
  const std::int64_t m_total = structure.total_bfs();
  const int d = structure.dim();
  Matrix out(m_total, m_total);

  std::vector<int> row_multi(static_cast<std::size_t>(d)), col_multi(static_cast<std::size_t>(d));
  for (std::int64_t row = 0; row < m_total; ++row) {
    decode_multi_index(structure, row, row_multi);
    for (std::int64_t col = 0; col < m_total; ++col) {
      decode_multi_index(structure, col, col_multi);
      out(row, col) = block_entry_impl<Scalar>(structure, data, row_multi, col_multi);
    }
  }
  return out;
}

}  // namespace
}  // namespace detail

double GammaTensor::block_entry(std::span<const int> i, std::span<const int> j) const {
  if (field_ != ScalarField::kReal64)
    throw std::invalid_argument("block_entry: tensor is complex; use block_entry_complex");
  return detail::block_entry_impl<double>(structure_, real_data_, i, j);
}

std::complex<double> GammaTensor::block_entry_complex(std::span<const int> i,
                                                      std::span<const int> j) const {
  if (field_ == ScalarField::kReal64) {
    return {detail::block_entry_impl<double>(structure_, real_data_, i, j), 0.0};
  }
  return detail::block_entry_impl<std::complex<double>>(structure_, complex_data_, i, j);
}

Eigen::MatrixXd GammaTensor::materialize() const {
  if (field_ != ScalarField::kReal64)
    throw std::invalid_argument("materialize: tensor is complex; use materialize_complex");
  return detail::materialize_impl<double, Eigen::MatrixXd>(structure_, real_data_);
}

Eigen::MatrixXcd GammaTensor::materialize_complex() const {
  if (field_ == ScalarField::kReal64) {
    return detail::materialize_impl<double, Eigen::MatrixXd>(structure_, real_data_)
        .cast<std::complex<double>>();
  }
  return detail::materialize_impl<std::complex<double>, Eigen::MatrixXcd>(structure_,
                                                                          complex_data_);
}

GammaTensor merge(const GammaTensor& a, const GammaTensor& b) {
  if (a.structure() != b.structure() || a.scalar_field() != b.scalar_field()) {
    throw std::invalid_argument("merge: incompatible gamma tensors: [" + a.structure().describe() +
                                "] vs [" + b.structure().describe() + "]");
  }
  const std::uint64_t n = a.n_points() + b.n_points();
  if (a.scalar_field() == ScalarField::kReal64) {
    std::vector<double> sum(a.real_data().begin(), a.real_data().end());
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += b.real_data()[k];
    return GammaTensor(a.structure(), std::move(sum), n);
  }
  std::vector<std::complex<double>> sum(a.complex_data().begin(), a.complex_data().end());
  for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += b.complex_data()[k];
  return GammaTensor(a.structure(), std::move(sum), n);
}

}  // namespace hgp
