#include "hgp/precision.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "hgp/errors.hpp"

namespace hgp {

namespace {

void check_family_data(const BasisFamily& family, const Dataset& data) {
  validate(family);
  data.validate();
  if (data.size() > 0 && data.dim() != input_dim(family)) {
    if (std::holds_alternative<Fourier1DFamily>(family))
      throw UnsupportedError("fourier features support 1-D inputs only");
    std::ostringstream os;
    os << "dataset has " << data.dim() << " input dimensions, family expects "
       << input_dim(family);
    throw std::invalid_argument(os.str());
  }
}

// value += increment, with optional Kahan compensation.
template <bool Compensated, typename Scalar>
inline void add_to(Scalar& value, Scalar& compensation, Scalar increment) {
  if constexpr (Compensated) {
    const Scalar adjusted = increment - compensation;
    const Scalar updated = value + adjusted;
    compensation = (updated - value) - adjusted;
    value = updated;
  } else {
    value += increment;
  }
}

// Rank-1 Kronecker accumulation: dst += weight * (v_1 x v_2 x ... x v_D) in
// row-major order, dimension 1 outermost. The suffix product over dimensions
// 2..D is expanded once into scratch so the hot loop is a contiguous axpy.
template <bool Compensated, typename Scalar>
void kron_axpy(const std::vector<std::vector<Scalar>>& factors, Scalar weight,
               std::vector<Scalar>& dst, std::vector<Scalar>& compensation,
               std::vector<Scalar>& scratch) {
  const int dims = static_cast<int>(factors.size());
  if (dims == 1) {
    const auto& v = factors[0];
    if constexpr (Compensated) {
      for (std::size_t t = 0; t < v.size(); ++t)
        add_to<true>(dst[t], compensation[t], weight * v[t]);
    } else {
      for (std::size_t t = 0; t < v.size(); ++t) dst[t] += weight * v[t];
    }
    return;
  }

  const auto& last = factors[static_cast<std::size_t>(dims - 1)];
  std::size_t suffix_len = last.size();
  std::copy(last.begin(), last.end(), scratch.begin());
  for (int d = dims - 2; d >= 1; --d) {
    const auto& v = factors[static_cast<std::size_t>(d)];
    // Expand in place from the highest slot down; slot 0 rescales the old
    // suffix elementwise, so nothing is clobbered early.
    for (std::int64_t s = static_cast<std::int64_t>(v.size()) - 1; s >= 0; --s) {
      Scalar* out = scratch.data() + static_cast<std::size_t>(s) * suffix_len;
      const Scalar factor = v[static_cast<std::size_t>(s)];
      for (std::size_t t = 0; t < suffix_len; ++t) out[t] = factor * scratch[t];
    }
    suffix_len *= v.size();
  }

  const auto& first = factors[0];
  for (std::size_t s = 0; s < first.size(); ++s) {
    const Scalar coeff = weight * first[s];
    Scalar* out = dst.data() + s * suffix_len;
    if constexpr (Compensated) {
      Scalar* comp = compensation.data() + s * suffix_len;
      for (std::size_t t = 0; t < suffix_len; ++t) add_to<true>(out[t], comp[t], coeff * scratch[t]);
    } else {
      for (std::size_t t = 0; t < suffix_len; ++t) out[t] += coeff * scratch[t];
    }
  }
}

// Shared accumulation state for one shard of data.
template <typename Scalar>
struct ShardResult {
  std::vector<std::vector<Scalar>> tensors;  // one per gamma block
  std::vector<Scalar> phi_t_y;               // empty unless observations requested
  double y_sq = 0.0;
  OpCounts counts;
};

struct BlockLayout {
  // Per gamma block, the list of (dimension-or-block id, span) g vectors.
  struct GVec {
    int id;
    std::int64_t span;
  };
  std::vector<std::vector<GVec>> blocks;
  std::int64_t total_updates_per_point = 0;
  std::int64_t g_evals_per_point = 0;
};

BlockLayout make_layout(const BasisFamily& family) {
  BlockLayout layout;
  if (std::holds_alternative<Fourier1DFamily>(family)) {
    for (int block = 0; block < 3; ++block) {
      layout.blocks.push_back({{block, g_span(family, block)}});
    }
  } else {
    std::vector<BlockLayout::GVec> dims;
    for (int d = 0; d < input_dim(family); ++d) dims.push_back({d, g_span(family, d)});
    layout.blocks.push_back(std::move(dims));
  }
  for (const auto& block : layout.blocks) {
    std::int64_t updates = 1;
    for (const auto& g : block) {
      updates *= g.span;
      layout.g_evals_per_point += g.span;
    }
    layout.total_updates_per_point += updates;
  }
  return layout;
}

template <typename Scalar, bool Compensated, bool WithY>
ShardResult<Scalar> accumulate_shard(const BasisFamily& family, const BlockLayout& layout,
                                     const Dataset& data, std::int64_t begin, std::int64_t end) {
  const int dims = input_dim(family);
  const std::int64_t features = feature_count(family);

  ShardResult<Scalar> result;
  result.tensors.resize(layout.blocks.size());
  std::vector<std::vector<Scalar>> tensor_comp(layout.blocks.size());
  for (std::size_t b = 0; b < layout.blocks.size(); ++b) {
    std::int64_t size = 1;
    for (const auto& g : layout.blocks[b]) size *= g.span;
    result.tensors[b].assign(static_cast<std::size_t>(size), Scalar{0.0});
    if constexpr (Compensated) tensor_comp[b].assign(static_cast<std::size_t>(size), Scalar{0.0});
  }

  // Scratch g vectors, one per (block, dimension); reused across points.
  std::vector<std::vector<std::vector<Scalar>>> g_scratch(layout.blocks.size());
  std::size_t kron_scratch_size = 1;
  for (std::size_t b = 0; b < layout.blocks.size(); ++b) {
    g_scratch[b].resize(layout.blocks[b].size());
    for (std::size_t d = 0; d < layout.blocks[b].size(); ++d)
      g_scratch[b][d].resize(static_cast<std::size_t>(layout.blocks[b][d].span));
    kron_scratch_size = std::max(kron_scratch_size, result.tensors[b].size());
  }
  kron_scratch_size = std::max(kron_scratch_size, static_cast<std::size_t>(features));
  std::vector<Scalar> kron_scratch(kron_scratch_size);

  std::vector<std::vector<Scalar>> bf_scratch;
  std::vector<Scalar> phi_comp;
  double y_sq_comp = 0.0;
  if constexpr (WithY) {
    result.phi_t_y.assign(static_cast<std::size_t>(features), Scalar{0.0});
    if constexpr (Compensated) phi_comp.assign(static_cast<std::size_t>(features), Scalar{0.0});
    if (std::holds_alternative<Fourier1DFamily>(family)) {
      bf_scratch.resize(1);
      bf_scratch[0].resize(static_cast<std::size_t>(features));
    } else {
      bf_scratch.resize(static_cast<std::size_t>(dims));
      for (int d = 0; d < dims; ++d)
        bf_scratch[static_cast<std::size_t>(d)].resize(bfs_along(family, d));
    }
  }

  for (std::int64_t n = begin; n < end; ++n) {
    for (std::size_t b = 0; b < layout.blocks.size(); ++b) {
      for (std::size_t d = 0; d < layout.blocks[b].size(); ++d) {
        const int id = layout.blocks[b][d].id;
        const double coord = data.x(n, std::holds_alternative<Fourier1DFamily>(family) ? 0 : id);
        if constexpr (std::is_same_v<Scalar, double>) {
          fill_g_vector(family, id, coord, g_scratch[b][d]);
        } else {
          fill_g_vector_complex(family, id, coord, g_scratch[b][d]);
        }
      }
      kron_axpy<Compensated>(g_scratch[b], Scalar{1.0}, result.tensors[b], tensor_comp[b],
                             kron_scratch);
    }

    if constexpr (WithY) {
      const Scalar weight{data.y(n)};
      if (std::holds_alternative<Fourier1DFamily>(family)) {
        if constexpr (std::is_same_v<Scalar, double>) {
          fill_bf_vector(family, 0, data.x(n, 0), bf_scratch[0]);
        } else {
          fill_bf_vector_complex(family, 0, data.x(n, 0), bf_scratch[0]);
        }
      } else {
        for (int d = 0; d < dims; ++d) {
          if constexpr (std::is_same_v<Scalar, double>) {
            fill_bf_vector(family, d, data.x(n, d), bf_scratch[static_cast<std::size_t>(d)]);
          } else {
            fill_bf_vector_complex(family, d, data.x(n, d),
                                   bf_scratch[static_cast<std::size_t>(d)]);
          }
        }
      }
      kron_axpy<Compensated>(bf_scratch, weight, result.phi_t_y, phi_comp, kron_scratch);
      add_to<Compensated>(result.y_sq, y_sq_comp, data.y(n) * data.y(n));
    }
  }

  const std::uint64_t points = static_cast<std::uint64_t>(end - begin);
  result.counts.g_evals_1d = points * static_cast<std::uint64_t>(layout.g_evals_per_point);
  result.counts.gamma_updates =
      points * static_cast<std::uint64_t>(layout.total_updates_per_point);
  return result;
}

template <typename Scalar>
void merge_shard(ShardResult<Scalar>& into, const ShardResult<Scalar>& from) {
  for (std::size_t b = 0; b < into.tensors.size(); ++b)
    for (std::size_t k = 0; k < into.tensors[b].size(); ++k)
      into.tensors[b][k] += from.tensors[b][k];
  for (std::size_t k = 0; k < into.phi_t_y.size(); ++k) into.phi_t_y[k] += from.phi_t_y[k];
  into.y_sq += from.y_sq;
  into.counts += from.counts;
}

template <typename Scalar, bool WithY>
ShardResult<Scalar> accumulate_dispatch(const BasisFamily& family, const BlockLayout& layout,
                                        const Dataset& data, const AccumOptions& options) {
  const std::int64_t n = data.size();
  const int threads = std::max(1, std::min<int>(options.threads, static_cast<int>(std::max<std::int64_t>(n, 1))));

  auto run_shard = [&](std::int64_t begin, std::int64_t end) {
    return options.compensated
               ? accumulate_shard<Scalar, true, WithY>(family, layout, data, begin, end)
               : accumulate_shard<Scalar, false, WithY>(family, layout, data, begin, end);
  };

  if (threads == 1) return run_shard(0, n);

  std::vector<ShardResult<Scalar>> partials(static_cast<std::size_t>(threads));
  std::vector<std::thread> workers;
  const std::int64_t chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const std::int64_t begin = std::min<std::int64_t>(t * chunk, n);
    const std::int64_t end = std::min<std::int64_t>(begin + chunk, n);
    workers.emplace_back(
        [&, t, begin, end]() { partials[static_cast<std::size_t>(t)] = run_shard(begin, end); });
  }
  for (auto& worker : workers) worker.join();

  ShardResult<Scalar> total = std::move(partials[0]);
  for (int t = 1; t < threads; ++t) merge_shard(total, partials[static_cast<std::size_t>(t)]);
  return total;
}

template <typename Scalar, typename Matrix>
Matrix accumulate_naive_impl(const BasisFamily& family, const Dataset& data,
                             const AccumOptions& options) {
  const std::int64_t features = feature_count(family);
  const std::int64_t n = data.size();
  const int threads = std::max(1, std::min<int>(options.threads, static_cast<int>(std::max<std::int64_t>(n, 1))));

  auto run_shard = [&](std::int64_t begin, std::int64_t end) {
    Matrix precision = Matrix::Zero(features, features);
    Eigen::Vector<Scalar, Eigen::Dynamic> row(features);
    std::vector<double> point(static_cast<std::size_t>(data.dim()));
    for (std::int64_t i = begin; i < end; ++i) {
      for (int d = 0; d < data.dim(); ++d) point[static_cast<std::size_t>(d)] = data.x(i, d);
      if constexpr (std::is_same_v<Scalar, double>) {
        row = regressor_row(family, point);
      } else {
        row = regressor_row_complex(family, point);
      }
      precision.noalias() += row * row.transpose();
    }
    return precision;
  };

  Matrix total;
  if (threads == 1) {
    total = run_shard(0, n);
  } else {
    std::vector<Matrix> partials(static_cast<std::size_t>(threads));
    std::vector<std::thread> workers;
    const std::int64_t chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const std::int64_t begin = std::min<std::int64_t>(t * chunk, n);
      const std::int64_t end = std::min<std::int64_t>(begin + chunk, n);
      workers.emplace_back(
          [&, t, begin, end]() { partials[static_cast<std::size_t>(t)] = run_shard(begin, end); });
    }
    for (auto& worker : workers) worker.join();
    total = std::move(partials[0]);
    for (int t = 1; t < threads; ++t) total += partials[static_cast<std::size_t>(t)];
  }

  if (options.counts != nullptr) {
    options.counts->naive_updates += static_cast<std::uint64_t>(n) *
                                     static_cast<std::uint64_t>(features) *
                                     static_cast<std::uint64_t>(features);
  }
  return total;
}

}  // namespace

void Dataset::validate() const {
  if (y.size() != 0 && y.size() != x.rows())
    throw std::invalid_argument("dataset: y length must be 0 or match the number of rows");
  if (!x.allFinite()) throw std::invalid_argument("dataset: non-finite input coordinate");
  if (y.size() > 0 && !y.allFinite())
    throw std::invalid_argument("dataset: non-finite observation");
}

Eigen::MatrixXd accumulate_naive(const BasisFamily& family, const Dataset& data,
                                 const AccumOptions& options) {
  check_family_data(family, data);
  if (is_complex(family))
    throw std::invalid_argument("accumulate_naive: complex family; use accumulate_naive_complex");
  return accumulate_naive_impl<double, Eigen::MatrixXd>(family, data, options);
}

Eigen::MatrixXcd accumulate_naive_complex(const BasisFamily& family, const Dataset& data,
                                          const AccumOptions& options) {
  check_family_data(family, data);
  if (!is_complex(family)) {
    return accumulate_naive_impl<double, Eigen::MatrixXd>(family, data, options)
        .cast<std::complex<double>>();
  }
  return accumulate_naive_impl<std::complex<double>, Eigen::MatrixXcd>(family, data, options);
}

GammaTensor accumulate_gamma(const BasisFamily& family, const Dataset& data,
                             const AccumOptions& options) {
  check_family_data(family, data);
  if (std::holds_alternative<Fourier1DFamily>(family))
    throw std::invalid_argument(
        "accumulate_gamma: fourier features need the block form; use fourier_gamma_1d");

  const LevelStructure structure = structure_descriptor(family);
  const BlockLayout layout = make_layout(family);
  if (is_complex(family)) {
    auto result =
        accumulate_dispatch<std::complex<double>, false>(family, layout, data, options);
    if (options.counts != nullptr) *options.counts += result.counts;
    return GammaTensor(structure, std::move(result.tensors[0]),
                       static_cast<std::uint64_t>(data.size()));
  }
  auto result = accumulate_dispatch<double, false>(family, layout, data, options);
  if (options.counts != nullptr) *options.counts += result.counts;
  return GammaTensor(structure, std::move(result.tensors[0]),
                     static_cast<std::uint64_t>(data.size()));
}

std::array<GammaTensor, 3> fourier_gamma_1d(const Dataset& data, double spacing, std::uint32_t m,
                                            const AccumOptions& options) {
  const BasisFamily family = Fourier1DFamily{m, spacing};
  data.validate();
  if (data.size() > 0 && data.dim() != 1)
    throw UnsupportedError("fourier_gamma_1d: regular Fourier features support 1-D inputs only");
  validate(family);

  const BlockLayout layout = make_layout(family);
  auto result = accumulate_dispatch<double, false>(family, layout, data, options);
  if (options.counts != nullptr) *options.counts += result.counts;

  const std::vector<LevelStructure> structures = structure_descriptors(family);
  const std::uint64_t n = static_cast<std::uint64_t>(data.size());
  return {GammaTensor(structures[0], std::move(result.tensors[0]), n),
          GammaTensor(structures[1], std::move(result.tensors[1]), n),
          GammaTensor(structures[2], std::move(result.tensors[2]), n)};
}

ScalarField PrecisionSummary::scalar_field() const {
  return gamma_blocks.empty() ? ScalarField::kReal64 : gamma_blocks.front().scalar_field();
}

std::int64_t PrecisionSummary::feature_dim() const {
  if (gamma_blocks.empty()) return 0;
  if (gamma_blocks.size() == 3) return 2 * static_cast<std::int64_t>(gamma_blocks[0].structure().levels[0].m);
  return gamma_blocks[0].structure().total_bfs();
}

PrecisionSummary accumulate_stats(const BasisFamily& family, const Dataset& data,
                                  const AccumOptions& options) {
  check_family_data(family, data);
  if (data.size() > 0 && !data.has_y())
    throw std::invalid_argument("accumulate_stats: observations y are required");

  const std::vector<LevelStructure> structures = structure_descriptors(family);
  const BlockLayout layout = make_layout(family);
  const std::uint64_t n = static_cast<std::uint64_t>(data.size());
  const std::int64_t features = feature_count(family);

  PrecisionSummary summary;
  summary.n = n;

  if (is_complex(family)) {
    auto result = accumulate_dispatch<std::complex<double>, true>(family, layout, data, options);
    if (options.counts != nullptr) *options.counts += result.counts;
    summary.gamma_blocks.emplace_back(structures[0], std::move(result.tensors[0]), n);
    summary.phi_t_y_complex =
        Eigen::Map<const Eigen::VectorXcd>(result.phi_t_y.data(), features);
    summary.y_sq = result.y_sq;
    return summary;
  }

  auto result = accumulate_dispatch<double, true>(family, layout, data, options);
  if (options.counts != nullptr) *options.counts += result.counts;
  for (std::size_t b = 0; b < structures.size(); ++b)
    summary.gamma_blocks.emplace_back(structures[b], std::move(result.tensors[b]), n);
  summary.phi_t_y = Eigen::Map<const Eigen::VectorXd>(result.phi_t_y.data(), features);
  summary.y_sq = result.y_sq;
  return summary;
}

PrecisionSummary update_stats(PrecisionSummary summary, const BasisFamily& family,
                              std::span<const double> x, double y) {
  if (!std::isfinite(y)) throw std::invalid_argument("update_stats: non-finite observation");
  for (double coord : x)
    if (!std::isfinite(coord)) throw std::invalid_argument("update_stats: non-finite coordinate");
  if (static_cast<int>(x.size()) != input_dim(family))
    throw std::invalid_argument("update_stats: coordinate dimension does not match the family");

  const std::vector<LevelStructure> structures = structure_descriptors(family);
  if (summary.gamma_blocks.size() != structures.size())
    throw std::invalid_argument("update_stats: summary does not match the family layout");
  for (std::size_t b = 0; b < structures.size(); ++b) {
    if (summary.gamma_blocks[b].structure() != structures[b])
      throw std::invalid_argument("update_stats: summary structure [" +
                                  summary.gamma_blocks[b].structure().describe() +
                                  "] does not match the family [" + structures[b].describe() + "]");
  }

  Dataset point;
  point.x = Eigen::Map<const Eigen::RowVectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  point.y = Eigen::VectorXd::Constant(1, y);
  return merge_summaries(summary, accumulate_stats(family, point));
}

PrecisionSummary merge_summaries(const PrecisionSummary& a, const PrecisionSummary& b) {
  if (a.gamma_blocks.size() != b.gamma_blocks.size())
    throw std::invalid_argument("merge_summaries: different gamma block counts");
  if (a.has_observations() != b.has_observations())
    throw std::invalid_argument("merge_summaries: one summary lacks observation statistics");

  PrecisionSummary merged;
  for (std::size_t blk = 0; blk < a.gamma_blocks.size(); ++blk)
    merged.gamma_blocks.push_back(merge(a.gamma_blocks[blk], b.gamma_blocks[blk]));
  if (a.phi_t_y.size() != b.phi_t_y.size() ||
      a.phi_t_y_complex.size() != b.phi_t_y_complex.size())
    throw std::invalid_argument("merge_summaries: Phi^T y length mismatch");
  merged.phi_t_y = a.phi_t_y + b.phi_t_y;
  merged.phi_t_y_complex = a.phi_t_y_complex + b.phi_t_y_complex;
  merged.y_sq = a.y_sq + b.y_sq;
  merged.n = a.n + b.n;
  return merged;
}

Eigen::MatrixXd reconstruct_precision(const GammaTensor& gamma) { return gamma.materialize(); }

Eigen::MatrixXd assemble_fourier_precision(std::span<const GammaTensor> blocks) {
  if (blocks.size() != 3)
    throw std::invalid_argument("assemble_fourier_precision: expected [ss, cs, cc] blocks");
  const std::uint32_t m = blocks[0].structure().levels.at(0).m;
  for (const GammaTensor& block : blocks) {
    if (block.scalar_field() != ScalarField::kReal64 || block.structure().dim() != 1 ||
        block.structure().levels[0].m != m ||
        block.structure().levels[0].kind != LevelKind::kHankelPlusToeplitz)
      throw std::invalid_argument("assemble_fourier_precision: malformed block structure");
  }

  const int size = static_cast<int>(m);
  Eigen::MatrixXd precision(2 * size, 2 * size);
  for (int i = 1; i <= size; ++i) {
    const std::array<int, 1> row{i};
    for (int j = 1; j <= size; ++j) {
      const std::array<int, 1> col{j};
      const double sin_sin = blocks[0].block_entry(row, col);
      const double cos_sin = blocks[1].block_entry(row, col);  // row: cos index, col: sin index
      const double cos_cos = blocks[2].block_entry(row, col);
      precision(i - 1, j - 1) = sin_sin;
      precision(size + i - 1, j - 1) = cos_sin;
      precision(j - 1, size + i - 1) = cos_sin;
      precision(size + i - 1, size + j - 1) = cos_cos;
    }
  }
  return precision;
}

Eigen::MatrixXd reconstruct_precision(const PrecisionSummary& summary) {
  if (summary.scalar_field() != ScalarField::kReal64)
    throw std::invalid_argument(
        "reconstruct_precision: complex summary; use reconstruct_precision_complex");
  if (summary.gamma_blocks.size() == 1) return summary.gamma_blocks[0].materialize();
  return assemble_fourier_precision(summary.gamma_blocks);
}

Eigen::MatrixXcd reconstruct_precision_complex(const PrecisionSummary& summary) {
  if (summary.gamma_blocks.size() == 1) return summary.gamma_blocks[0].materialize_complex();
  return assemble_fourier_precision(summary.gamma_blocks).cast<std::complex<double>>();
}

std::int64_t gamma_storage_bytes(const BasisFamily& family) {
  std::int64_t entries = 0;
  for (const LevelStructure& structure : structure_descriptors(family))
    entries += structure.unique_entry_count();
  return entries * (is_complex(family) ? 16 : 8);
}

std::int64_t dense_storage_bytes(const BasisFamily& family) {
  const std::int64_t features = feature_count(family);
  return features * features * (is_complex(family) ? 16 : 8);
}

}  // namespace hgp
