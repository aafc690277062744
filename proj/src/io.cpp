#include "hgp/io.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "hgp/errors.hpp"
#include "json.hpp"

namespace hgp {

namespace {

using json = nlohmann::json;

constexpr std::array<char, 4> kGammaMagic = {'G', 'H', 'T', 'P'};
constexpr std::array<char, 4> kSidecarMagic = {'G', 'H', 'T', 'S'};
constexpr std::uint16_t kFormatVersion = 1;

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<unsigned char, sizeof(T)> bytes;
  std::uint64_t bits = 0;
  std::memcpy(&bits, &value, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

void put_f64(std::ostream& out, double value) {
  std::uint64_t bits;
  std::memcpy(&bits, &value, 8);
  put_le<std::uint64_t>(out, bits);
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes;
  in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T));
  if (!in) throw IoError("gamma file: truncated input");
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  T value;
  std::memcpy(&value, &bits, sizeof(T));
  return value;
}

double get_f64(std::istream& in) {
  const std::uint64_t bits = get_le<std::uint64_t>(in);
  double value;
  std::memcpy(&value, &bits, 8);
  return value;
}

void put_magic(std::ostream& out, const std::array<char, 4>& magic) {
  out.write(magic.data(), 4);
}

bool peek_magic(std::istream& in, std::array<char, 4>& magic) {
  in.read(magic.data(), 4);
  if (in.gcount() == 0) return false;
  if (in.gcount() != 4) throw IoError("gamma file: truncated magic");
  return true;
}

void write_sidecar(std::ostream& out, const PrecisionSummary& summary) {
  put_magic(out, kSidecarMagic);
  put_le<std::uint16_t>(out, kFormatVersion);
  const bool complex_field = summary.scalar_field() == ScalarField::kComplex128;
  put_le<std::uint8_t>(out, complex_field ? 1 : 0);
  if (complex_field) {
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(summary.phi_t_y_complex.size()));
    for (Eigen::Index i = 0; i < summary.phi_t_y_complex.size(); ++i) {
      put_f64(out, summary.phi_t_y_complex[i].real());
      put_f64(out, summary.phi_t_y_complex[i].imag());
    }
  } else {
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(summary.phi_t_y.size()));
    for (Eigen::Index i = 0; i < summary.phi_t_y.size(); ++i) put_f64(out, summary.phi_t_y[i]);
  }
  put_f64(out, summary.y_sq);
  put_le<std::uint64_t>(out, summary.n);
}

void read_sidecar(std::istream& in, PrecisionSummary& summary) {
  const auto version = get_le<std::uint16_t>(in);
  if (version != kFormatVersion) throw IoError("summary file: unsupported sidecar version");
  const auto field = get_le<std::uint8_t>(in);
  const auto length = get_le<std::uint64_t>(in);
  if (field == 1) {
    summary.phi_t_y_complex.resize(static_cast<Eigen::Index>(length));
    for (std::uint64_t i = 0; i < length; ++i) {
      const double re = get_f64(in);
      const double im = get_f64(in);
      summary.phi_t_y_complex[static_cast<Eigen::Index>(i)] = {re, im};
    }
  } else {
    summary.phi_t_y.resize(static_cast<Eigen::Index>(length));
    for (std::uint64_t i = 0; i < length; ++i)
      summary.phi_t_y[static_cast<Eigen::Index>(i)] = get_f64(in);
  }
  summary.y_sq = get_f64(in);
  summary.n = get_le<std::uint64_t>(in);
}

std::string trim(std::string text) {
  const auto is_space = [](unsigned char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (!text.empty() && is_space(static_cast<unsigned char>(text.back()))) text.pop_back();
  std::size_t begin = 0;
  while (begin < text.size() && is_space(static_cast<unsigned char>(text[begin]))) ++begin;
  return text.substr(begin);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

double parse_double(const std::string& field, const std::filesystem::path& path, int line_number) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    std::ostringstream os;
    os << path.string() << ":" << line_number << ": cannot parse '" << field << "' as a number";
    throw IoError(os.str());
  }
  return value;
}

json hyperparams_to_json(const Hyperparams& hp) {
  return json{{"lengthscale", hp.lengthscale},
              {"signal_variance", hp.signal_variance},
              {"noise_variance", hp.noise_variance}};
}

Hyperparams hyperparams_from_json(const json& j) {
  Hyperparams hp;
  hp.lengthscale = j.at("lengthscale").get<double>();
  hp.signal_variance = j.at("signal_variance").get<double>();
  hp.noise_variance = j.at("noise_variance").get<double>();
  hp.validate();
  return hp;
}

}  // namespace

void write_gamma(std::ostream& out, const GammaTensor& gamma) {
  put_magic(out, kGammaMagic);
  put_le<std::uint16_t>(out, kFormatVersion);
  const bool complex_field = gamma.scalar_field() == ScalarField::kComplex128;
  put_le<std::uint8_t>(out, complex_field ? 1 : 0);
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(gamma.structure().dim()));
  for (const Level& level : gamma.structure().levels) {
    put_le<std::uint32_t>(out, level.m);
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(level.kind));
    put_le<std::int8_t>(out, level.sign_toeplitz);
  }
  put_le<std::uint64_t>(out, gamma.n_points());
  if (complex_field) {
    for (const std::complex<double>& value : gamma.complex_data()) {
      put_f64(out, value.real());
      put_f64(out, value.imag());
    }
  } else {
    for (double value : gamma.real_data()) put_f64(out, value);
  }
  if (!out) throw IoError("gamma file: write failure");
}

GammaTensor read_gamma(std::istream& in) {
  std::array<char, 4> magic;
  if (!peek_magic(in, magic) || magic != kGammaMagic)
    throw IoError("gamma file: bad magic (expected GHTP)");
  const auto version = get_le<std::uint16_t>(in);
  if (version != kFormatVersion) throw IoError("gamma file: unsupported format version");
  const auto field_tag = get_le<std::uint8_t>(in);
  if (field_tag > 1) throw IoError("gamma file: unknown scalar field tag");
  const auto dims = get_le<std::uint8_t>(in);
  if (dims == 0) throw IoError("gamma file: zero dimensions");

  LevelStructure structure;
  for (int d = 0; d < dims; ++d) {
    Level level;
    level.m = get_le<std::uint32_t>(in);
    const auto kind = get_le<std::uint8_t>(in);
    if (kind > 2) throw IoError("gamma file: unknown level kind");
    level.kind = static_cast<LevelKind>(kind);
    level.sign_toeplitz = get_le<std::int8_t>(in);
    structure.levels.push_back(level);
  }
  structure.validate_and_normalize();
  const auto n_points = get_le<std::uint64_t>(in);
  const std::int64_t count = structure.unique_entry_count();

  if (field_tag == 1) {
    std::vector<std::complex<double>> data(static_cast<std::size_t>(count));
    for (auto& value : data) {
      const double re = get_f64(in);
      const double im = get_f64(in);
      value = {re, im};
    }
    return GammaTensor(std::move(structure), std::move(data), n_points);
  }
  std::vector<double> data(static_cast<std::size_t>(count));
  for (auto& value : data) value = get_f64(in);
  return GammaTensor(std::move(structure), std::move(data), n_points);
}

void write_summary_file(const std::filesystem::path& path, const PrecisionSummary& summary) {
  if (summary.gamma_blocks.empty())
    throw std::invalid_argument("write_summary_file: summary has no gamma blocks");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  for (const GammaTensor& block : summary.gamma_blocks) write_gamma(out, block);
  if (summary.has_observations()) write_sidecar(out, summary);
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

PrecisionSummary read_summary_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");

  PrecisionSummary summary;
  std::array<char, 4> magic;
  if (!peek_magic(in, magic) || magic != kGammaMagic)
    throw IoError("'" + path.string() + "': bad magic (expected GHTP)");
  while (true) {
    // The magic has been consumed; rewind it for read_gamma.
    in.seekg(-4, std::ios::cur);
    summary.gamma_blocks.push_back(read_gamma(in));
    if (!peek_magic(in, magic)) break;  // clean EOF: precision-only file
    if (magic == kGammaMagic) continue;
    if (magic == kSidecarMagic) {
      read_sidecar(in, summary);
      break;
    }
    throw IoError("'" + path.string() + "': unknown section magic");
  }

  if (summary.gamma_blocks.size() != 1 && summary.gamma_blocks.size() != 3)
    throw IoError("'" + path.string() + "': expected 1 or 3 gamma sections");
  if (!summary.has_observations()) {
    summary.n = summary.gamma_blocks.front().n_points();
  }
  for (const GammaTensor& block : summary.gamma_blocks) {
    if (block.n_points() != summary.n)
      throw IoError("'" + path.string() + "': inconsistent point counts across sections");
  }
  return summary;
}

void require_mergeable(const PrecisionSummary& a, const PrecisionSummary& b) {
  const auto fail = [](const std::string& field, const std::string& left,
                       const std::string& right) {
    throw std::invalid_argument("summaries are not mergeable; first divergent field: " + field +
                                " (" + left + " vs " + right + ")");
  };
  if (a.gamma_blocks.size() != b.gamma_blocks.size())
    fail("block_count", std::to_string(a.gamma_blocks.size()),
         std::to_string(b.gamma_blocks.size()));
  if (a.scalar_field() != b.scalar_field())
    fail("scalar_field", a.scalar_field() == ScalarField::kReal64 ? "real64" : "complex128",
         b.scalar_field() == ScalarField::kReal64 ? "real64" : "complex128");
  for (std::size_t blk = 0; blk < a.gamma_blocks.size(); ++blk) {
    const LevelStructure& sa = a.gamma_blocks[blk].structure();
    const LevelStructure& sb = b.gamma_blocks[blk].structure();
    const std::string suffix = "[block " + std::to_string(blk) + "]";
    if (sa.dim() != sb.dim())
      fail("dimensions" + suffix, std::to_string(sa.dim()), std::to_string(sb.dim()));
    for (int d = 0; d < sa.dim(); ++d) {
      const Level& la = sa.levels[static_cast<std::size_t>(d)];
      const Level& lb = sb.levels[static_cast<std::size_t>(d)];
      const std::string at = suffix + "[level " + std::to_string(d + 1) + "]";
      if (la.m != lb.m) fail("m" + at, std::to_string(la.m), std::to_string(lb.m));
      if (la.kind != lb.kind)
        fail("kind" + at, std::to_string(static_cast<int>(la.kind)),
             std::to_string(static_cast<int>(lb.kind)));
      if (la.sign_toeplitz != lb.sign_toeplitz)
        fail("sign_toeplitz" + at, std::to_string(la.sign_toeplitz),
             std::to_string(lb.sign_toeplitz));
    }
  }
  if (a.has_observations() != b.has_observations())
    fail("has_observations", a.has_observations() ? "yes" : "no",
         b.has_observations() ? "yes" : "no");
  if (a.phi_t_y.size() != b.phi_t_y.size() || a.phi_t_y_complex.size() != b.phi_t_y_complex.size())
    fail("phi_t_y_length",
         std::to_string(a.phi_t_y.size() + a.phi_t_y_complex.size()),
         std::to_string(b.phi_t_y.size() + b.phi_t_y_complex.size()));
}

std::int64_t summary_payload_bytes(const PrecisionSummary& summary) {
  const std::int64_t unit = summary.scalar_field() == ScalarField::kComplex128 ? 16 : 8;
  std::int64_t entries = 0;
  for (const GammaTensor& block : summary.gamma_blocks) entries += block.size();
  entries += summary.phi_t_y.size() + summary.phi_t_y_complex.size();
  std::int64_t bytes = entries * unit;
  if (summary.has_observations()) bytes += 8 + 8;  // y^T y and n
  return bytes;
}

Dataset read_dataset_csv(const std::filesystem::path& path, int expected_dim, bool require_y) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) throw IoError("'" + path.string() + "': empty file (no header)");
  const std::vector<std::string> header = split_csv_line(line);

  int dims = 0;
  bool has_y = false;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string expected = "x_" + std::to_string(c + 1);
    if (header[c] == expected) {
      ++dims;
      continue;
    }
    if (header[c] == "y" && c == header.size() - 1 && c == static_cast<std::size_t>(dims)) {
      has_y = true;
      break;
    }
    throw IoError("'" + path.string() + "':1: unexpected column '" + header[c] +
                  "' (expected x_1..x_D then optional y)");
  }
  if (dims == 0) throw IoError("'" + path.string() + "':1: no coordinate columns");
  if (expected_dim > 0 && dims != expected_dim)
    throw IoError("'" + path.string() + "': has " + std::to_string(dims) +
                  " coordinate columns, expected " + std::to_string(expected_dim));
  if (require_y && !has_y) throw IoError("'" + path.string() + "': missing y column");

  std::vector<double> coords;
  std::vector<double> observations;
  int line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    const std::size_t expected_fields = static_cast<std::size_t>(dims) + (has_y ? 1 : 0);
    if (fields.size() != expected_fields) {
      std::ostringstream os;
      os << path.string() << ":" << line_number << ": expected " << expected_fields
         << " fields, found " << fields.size();
      throw IoError(os.str());
    }
    for (int d = 0; d < dims; ++d) {
      const double value = parse_double(fields[static_cast<std::size_t>(d)], path, line_number);
      if (!std::isfinite(value)) {
        std::ostringstream os;
        os << path.string() << ":" << line_number << ": non-finite coordinate";
        throw IoError(os.str());
      }
      coords.push_back(value);
    }
    if (has_y) {
      const double value = parse_double(fields.back(), path, line_number);
      if (!std::isfinite(value)) {
        std::ostringstream os;
        os << path.string() << ":" << line_number << ": non-finite observation";
        throw IoError(os.str());
      }
      observations.push_back(value);
    }
  }

  Dataset data;
  const Eigen::Index rows = static_cast<Eigen::Index>(coords.size()) / dims;
  data.x.resize(rows, dims);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (int d = 0; d < dims; ++d)
      data.x(i, d) = coords[static_cast<std::size_t>(i) * static_cast<std::size_t>(dims) +
                            static_cast<std::size_t>(d)];
  if (has_y) data.y = Eigen::Map<const Eigen::VectorXd>(observations.data(), rows);
  return data;
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  for (int d = 0; d < data.dim(); ++d) out << (d > 0 ? "," : "") << "x_" << d + 1;
  if (data.has_y()) out << ",y";
  out << "\n";
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (int d = 0; d < data.dim(); ++d) out << (d > 0 ? "," : "") << format_double(data.x(i, d));
    if (data.has_y()) out << "," << format_double(data.y[i]);
    out << "\n";
  }
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

void write_predictions_csv(std::ostream& out, const Eigen::MatrixXd& x_star, const Posterior& post,
                           const Eigen::VectorXd* nlpd_per_point,
                           const std::vector<bool>& outside_domain) {
  const int dims = static_cast<int>(x_star.cols());
  for (int d = 0; d < dims; ++d) out << (d > 0 ? "," : "") << "x_" << d + 1;
  out << ",mean,variance";
  if (nlpd_per_point != nullptr) out << ",nlpd";
  out << ",outside_domain\n";
  for (Eigen::Index i = 0; i < x_star.rows(); ++i) {
    for (int d = 0; d < dims; ++d) out << (d > 0 ? "," : "") << format_double(x_star(i, d));
    out << "," << format_double(post.mean[i]) << "," << format_double(post.variance[i]);
    if (nlpd_per_point != nullptr) out << "," << format_double((*nlpd_per_point)[i]);
    out << "," << (outside_domain.empty() ? 0 : static_cast<int>(outside_domain[static_cast<std::size_t>(i)]));
    out << "\n";
  }
}

void write_model_file(const std::filesystem::path& path, const ModelFile& model) {
  json j;
  j["family"] = json::parse(family_to_json(model.family));
  j["hyperparameters"] = hyperparams_to_json(model.hyperparams);
  j["summary"] = model.summary_path;
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

ModelFile read_model_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("'" + path.string() + "': " + e.what());
  }
  try {
    ModelFile model;
    model.family = family_from_json(j.at("family").dump());
    model.hyperparams = hyperparams_from_json(j.at("hyperparameters"));
    model.summary_path = j.at("summary").get<std::string>();
    return model;
  } catch (const json::exception& e) {
    throw IoError("'" + path.string() + "': " + e.what());
  }
}

std::filesystem::path resolve_summary_path(const std::filesystem::path& model_path,
                                           const ModelFile& model) {
  const std::filesystem::path summary(model.summary_path);
  if (summary.is_absolute()) return summary;
  return model_path.parent_path() / summary;
}

std::string format_double(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

}  // namespace hgp
