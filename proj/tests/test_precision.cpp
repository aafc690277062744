#include <Eigen/Eigenvalues>
#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "hgp/errors.hpp"
#include "hgp/precision.hpp"
#include "test_util.hpp"

using namespace hgp;

TEST_CASE("naive accumulation basics") {
  const BasisFamily family = PolynomialFamily{{2}};
  Dataset empty;
  empty.x.resize(0, 1);
  CHECK(accumulate_naive(family, empty).norm() == 0.0);

  Dataset one;
  one.x.resize(1, 1);
  one.x << 3.0;
  const Eigen::MatrixXd precision = accumulate_naive(family, one);
  Eigen::MatrixXd expected(2, 2);
  expected << 1, 3, 3, 9;
  CHECK((precision - expected).norm() == doctest::Approx(0.0));
}

TEST_CASE("naive accumulation is symmetric positive semi-definite") {
  Rng rng(41);
  const BasisFamily family = HilbertFamily{{6}, {1.2}};
  const Dataset data = testing::random_dataset(rng, 25, 1);
  const Eigen::MatrixXd precision = accumulate_naive(family, data);
  CHECK((precision - precision.transpose()).norm() < 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen(precision);
  CHECK(eigen.eigenvalues().minCoeff() >= -1e-8 * precision.trace());
}

TEST_CASE("gamma route equals the naive route across families, dimensions, and sizes") {
  Rng rng(43);
  int checked = 0;
  for (const std::string name : {"polynomial", "complex-exponential", "hilbert", "fourier"}) {
    for (int dims = 1; dims <= 3; ++dims) {
      if (name == "fourier" && dims != 1) continue;
      for (std::uint32_t m : {1u, 2u, 5u}) {
        for (std::int64_t n : {0, 1, 20}) {
          const Dataset data = testing::random_dataset(rng, n, dims);
          const std::vector<std::uint32_t> m_per_dim(static_cast<std::size_t>(dims), m);
          const std::vector<double> domain(static_cast<std::size_t>(dims), 1.25);

          double distance = 0.0;
          if (name == "polynomial") {
            const BasisFamily family = PolynomialFamily{m_per_dim};
            distance = testing::rel_frobenius(accumulate_gamma(family, data).materialize(),
                                              accumulate_naive(family, data));
          } else if (name == "complex-exponential") {
            const BasisFamily family = ComplexExponentialFamily{m_per_dim};
            distance = testing::rel_frobenius(
                accumulate_gamma(family, data).materialize_complex(),
                accumulate_naive_complex(family, data));
          } else if (name == "hilbert") {
            const BasisFamily family = HilbertFamily{m_per_dim, domain};
            distance = testing::rel_frobenius(accumulate_gamma(family, data).materialize(),
                                              accumulate_naive(family, data));
          } else {
            const BasisFamily family = Fourier1DFamily{m, 0.7};
            const auto blocks = fourier_gamma_1d(data, 0.7, m);
            distance = testing::rel_frobenius(assemble_fourier_precision(blocks),
                                              accumulate_naive(family, data));
          }
          CHECK(distance < 1e-9);
          ++checked;
        }
      }
    }
  }
  CHECK(checked == 90);
}

TEST_CASE("hilbert 1-D gamma matches naive to near machine precision") {
  Rng rng(47);
  const BasisFamily family = HilbertFamily{{5}, {1.0}};
  const Dataset data = testing::random_dataset(rng, 30, 1);
  const Eigen::MatrixXd diff =
      accumulate_gamma(family, data).materialize() - accumulate_naive(family, data);
  CHECK(diff.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("2-D hilbert with 7x7 basis functions stores 441 unique entries") {
  Rng rng(53);
  const BasisFamily family = HilbertFamily{{7, 7}, {1.3, 1.3}};
  const Dataset data = testing::random_dataset(rng, 100, 2);
  const GammaTensor gamma = accumulate_gamma(family, data);
  CHECK(gamma.size() == 441);
  const Eigen::MatrixXd dense = gamma.materialize();
  CHECK(dense.rows() == 49);
  CHECK(testing::rel_frobenius(dense, accumulate_naive(family, data)) < 1e-12);
}

TEST_CASE("accumulate_stats gathers the posterior sufficient statistics") {
  Rng rng(59);
  const BasisFamily family = HilbertFamily{{4, 3}, {1.2, 1.2}};

  SUBCASE("empty dataset gives the all-zero summary") {
    Dataset empty;
    empty.x.resize(0, 2);
    const PrecisionSummary summary = accumulate_stats(family, empty);
    CHECK(summary.n == 0);
    CHECK(summary.y_sq == 0.0);
    CHECK(summary.phi_t_y.size() == 12);
    CHECK(summary.phi_t_y.norm() == 0.0);
    CHECK(summary.gamma_blocks.size() == 1);
    CHECK(summary.gamma_blocks[0].materialize().norm() == 0.0);
  }

  SUBCASE("zero observations leave gamma untouched") {
    Dataset data = testing::random_dataset(rng, 14, 2);
    data.y = Eigen::VectorXd::Zero(14);
    const PrecisionSummary summary = accumulate_stats(family, data);
    CHECK(summary.phi_t_y.norm() == 0.0);
    CHECK(summary.y_sq == 0.0);
    const GammaTensor plain = accumulate_gamma(family, data);
    for (std::size_t k = 0; k < plain.real_data().size(); ++k)
      CHECK(summary.gamma_blocks[0].real_data()[k] == plain.real_data()[k]);
  }

  SUBCASE("phi_t_y equals the dense regressor product") {
    const Dataset data = testing::random_dataset(rng, 21, 2, -1.0, 1.0, /*with_y=*/true);
    const PrecisionSummary summary = accumulate_stats(family, data);
    const Eigen::MatrixXd phi = testing::dense_regressor(family, data.x);
    CHECK((summary.phi_t_y - phi.transpose() * data.y).norm() < 1e-12 * (1 + data.y.norm()));
    CHECK(summary.y_sq == doctest::Approx(data.y.squaredNorm()));
  }

  SUBCASE("missing observations are rejected") {
    const Dataset data = testing::random_dataset(rng, 5, 2);
    CHECK_THROWS_AS(accumulate_stats(family, data), std::invalid_argument);
  }
}

TEST_CASE("streaming updates equal batch accumulation") {
  Rng rng(61);
  const BasisFamily family = HilbertFamily{{6}, {1.4}};
  const Dataset data = testing::random_dataset(rng, 50, 1, -1.2, 1.2, /*with_y=*/true);

  Dataset empty;
  empty.x.resize(0, 1);
  PrecisionSummary streamed = accumulate_stats(family, empty);
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const std::array<double, 1> x{data.x(i, 0)};
    streamed = update_stats(std::move(streamed), family, x, data.y[i]);
  }

  const PrecisionSummary batch = accumulate_stats(family, data);
  CHECK(streamed.n == batch.n);
  CHECK(streamed.y_sq == doctest::Approx(batch.y_sq).epsilon(1e-12));
  CHECK((streamed.phi_t_y - batch.phi_t_y).norm() < 1e-10 * (1 + batch.phi_t_y.norm()));
  CHECK(testing::rel_frobenius(reconstruct_precision(streamed), reconstruct_precision(batch)) <
        1e-10);

  SUBCASE("single update on the empty summary equals the one-point batch") {
    PrecisionSummary one = accumulate_stats(family, empty);
    const std::array<double, 1> x{0.321};
    one = update_stats(std::move(one), family, x, -0.7);
    Dataset single;
    single.x.resize(1, 1);
    single.x << 0.321;
    single.y = Eigen::VectorXd::Constant(1, -0.7);
    const PrecisionSummary direct = accumulate_stats(family, single);
    CHECK((one.phi_t_y - direct.phi_t_y).norm() == 0.0);
    CHECK(one.y_sq == direct.y_sq);
  }

  SUBCASE("non-finite updates are rejected") {
    PrecisionSummary summary = accumulate_stats(family, empty);
    const std::array<double, 1> bad{std::numeric_limits<double>::quiet_NaN()};
    CHECK_THROWS_AS(update_stats(std::move(summary), family, bad, 0.0), std::invalid_argument);
  }
}

TEST_CASE("two disjoint streams merge to the one-shot summary") {
  Rng rng(67);
  const BasisFamily family = HilbertFamily{{5, 4}, {1.2, 1.2}};
  const Dataset data = testing::random_dataset(rng, 36, 2, -1.0, 1.0, /*with_y=*/true);

  auto accumulate_rows = [&](Eigen::Index begin, Eigen::Index count) {
    Dataset part;
    part.x = data.x.middleRows(begin, count);
    part.y = data.y.segment(begin, count);
    return accumulate_stats(family, part);
  };
  const PrecisionSummary merged =
      merge_summaries(accumulate_rows(0, 20), accumulate_rows(20, 16));
  const PrecisionSummary whole = accumulate_stats(family, data);
  CHECK(merged.n == whole.n);
  CHECK((merged.phi_t_y - whole.phi_t_y).norm() < 1e-10 * (1 + whole.phi_t_y.norm()));
  CHECK(testing::rel_frobenius(reconstruct_precision(merged), reconstruct_precision(whole)) <
        1e-10);
}

TEST_CASE("fourier block tensors") {
  SUBCASE("empty data gives three zero vectors") {
    Dataset empty;
    empty.x.resize(0, 1);
    const auto blocks = fourier_gamma_1d(empty, 0.7, 6);
    for (const GammaTensor& block : blocks) {
      CHECK(block.size() == 18);
      double norm = 0.0;
      for (double value : block.real_data()) norm += std::abs(value);
      CHECK(norm == 0.0);
    }
  }

  SUBCASE("x = 0 zeroes the sine blocks and fills the cosine block with ones") {
    Dataset origin;
    origin.x.resize(1, 1);
    origin.x << 0.0;
    const auto blocks = fourier_gamma_1d(origin, 0.7, 4);
    const Eigen::MatrixXd precision = assemble_fourier_precision(blocks);
    CHECK(precision.topLeftCorner(4, 4).norm() == doctest::Approx(0.0));
    CHECK(precision.bottomLeftCorner(4, 4).norm() == doctest::Approx(0.0));
    CHECK((precision.bottomRightCorner(4, 4) - Eigen::MatrixXd::Ones(4, 4)).norm() ==
          doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("block assembly equals the naive 2m-feature accumulation") {
    Rng rng(71);
    Dataset data = testing::random_dataset(rng, 40, 1, -2.0, 2.0);
    const auto blocks = fourier_gamma_1d(data, 0.7, 6);
    const BasisFamily family = Fourier1DFamily{6, 0.7};
    const Eigen::MatrixXd naive = accumulate_naive(family, data);
    CHECK((assemble_fourier_precision(blocks) - naive).cwiseAbs().maxCoeff() < 1e-11);
  }

  SUBCASE("multi-dimensional input is rejected as unsupported") {
    Rng rng(3);
    const Dataset data = testing::random_dataset(rng, 4, 2);
    CHECK_THROWS_AS(fourier_gamma_1d(data, 0.7, 4), UnsupportedError);
    CHECK_THROWS_AS(accumulate_stats(Fourier1DFamily{4, 0.7}, data), UnsupportedError);
  }
}

TEST_CASE("per-point work matches the unique-entry budget, never M^2") {
  Rng rng(73);
  const std::int64_t n = 17;

  SUBCASE("hilbert 3-D") {
    const BasisFamily family = HilbertFamily{{5, 4, 4}, {1.1, 1.1, 1.1}};
    const Dataset data = testing::random_dataset(rng, n, 3);
    OpCounts counts;
    AccumOptions options;
    options.counts = &counts;
    (void)accumulate_gamma(family, data, options);
    const std::int64_t unique = structure_descriptor(family).unique_entry_count();
    CHECK(counts.gamma_updates == static_cast<std::uint64_t>(n * unique));
    CHECK(counts.g_evals_1d == static_cast<std::uint64_t>(n * (15 + 12 + 12)));
    const std::int64_t features = feature_count(family);
    CHECK(counts.gamma_updates < static_cast<std::uint64_t>(n * features * features));

    OpCounts naive_counts;
    AccumOptions naive_options;
    naive_options.counts = &naive_counts;
    (void)accumulate_naive(family, data, naive_options);
    CHECK(naive_counts.naive_updates == static_cast<std::uint64_t>(n * features * features));
  }

  SUBCASE("fourier blocks") {
    const std::uint32_t m = 6;
    const Dataset data = testing::random_dataset(rng, n, 1);
    OpCounts counts;
    AccumOptions options;
    options.counts = &counts;
    (void)fourier_gamma_1d(data, 0.7, m, options);
    CHECK(counts.gamma_updates == static_cast<std::uint64_t>(n * 9 * m));
    CHECK(counts.g_evals_1d == static_cast<std::uint64_t>(n * 9 * m));
  }
}

TEST_CASE("accumulation order does not matter beyond roundoff") {
  Rng rng(79);
  const BasisFamily family = HilbertFamily{{5, 4}, {1.2, 1.2}};
  Dataset data = testing::random_dataset(rng, 30, 2);

  const GammaTensor forward = accumulate_gamma(family, data);
  Dataset reversed;
  reversed.x = data.x.colwise().reverse();
  const GammaTensor backward = accumulate_gamma(family, reversed);

  double scale = 0.0;
  for (double value : forward.real_data()) scale = std::max(scale, std::abs(value));
  for (std::size_t k = 0; k < forward.real_data().size(); ++k)
    CHECK(std::abs(forward.real_data()[k] - backward.real_data()[k]) <= 1e-12 * (1.0 + scale));
}

TEST_CASE("threaded and compensated accumulation match the sequential plain path") {
  Rng rng(83);
  const BasisFamily family = HilbertFamily{{6, 5}, {1.3, 1.3}};
  const Dataset data = testing::random_dataset(rng, 101, 2, -1.0, 1.0, /*with_y=*/true);

  const PrecisionSummary plain = accumulate_stats(family, data);

  AccumOptions threaded;
  threaded.threads = 3;
  const PrecisionSummary sharded = accumulate_stats(family, data, threaded);
  CHECK(sharded.n == plain.n);
  CHECK(testing::rel_frobenius(reconstruct_precision(sharded), reconstruct_precision(plain)) <
        1e-12);
  CHECK((sharded.phi_t_y - plain.phi_t_y).norm() < 1e-12 * (1 + plain.phi_t_y.norm()));

  AccumOptions compensated;
  compensated.compensated = true;
  const PrecisionSummary kahan = accumulate_stats(family, data, compensated);
  CHECK(testing::rel_frobenius(reconstruct_precision(kahan), reconstruct_precision(plain)) <
        1e-12);
}

TEST_CASE("a fixed shard plan is bitwise deterministic") {
  Rng rng(87);
  const BasisFamily family = HilbertFamily{{7, 3}, {1.2, 1.2}};
  const Dataset data = testing::random_dataset(rng, 97, 2, -1.0, 1.0, /*with_y=*/true);
  AccumOptions options;
  options.threads = 3;
  const PrecisionSummary first = accumulate_stats(family, data, options);
  const PrecisionSummary second = accumulate_stats(family, data, options);
  for (std::size_t k = 0; k < first.gamma_blocks[0].real_data().size(); ++k)
    CHECK(first.gamma_blocks[0].real_data()[k] == second.gamma_blocks[0].real_data()[k]);
  CHECK((first.phi_t_y - second.phi_t_y).norm() == 0.0);
  CHECK(first.y_sq == second.y_sq);
}

TEST_CASE("compensated summation is at least as accurate as plain summation") {
  Rng rng(91);
  const BasisFamily family = HilbertFamily{{6}, {1.3}};
  const Dataset data = testing::random_dataset(rng, 20000, 1, -1.2, 1.2);

  // Long-double reference accumulation of the same per-point values.
  const std::int64_t span = g_span(family, 0);
  std::vector<long double> reference(static_cast<std::size_t>(span), 0.0L);
  std::vector<double> g_values(static_cast<std::size_t>(span));
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    fill_g_vector(family, 0, data.x(i, 0), g_values);
    for (std::size_t k = 0; k < g_values.size(); ++k) reference[k] += g_values[k];
  }

  const GammaTensor plain = accumulate_gamma(family, data);
  AccumOptions kahan_options;
  kahan_options.compensated = true;
  const GammaTensor kahan = accumulate_gamma(family, data, kahan_options);

  long double plain_error = 0.0L, kahan_error = 0.0L;
  for (std::size_t k = 0; k < reference.size(); ++k) {
    plain_error = std::max(plain_error, std::abs(plain.real_data()[k] - reference[k]));
    kahan_error = std::max(kahan_error, std::abs(kahan.real_data()[k] - reference[k]));
  }
  CHECK(kahan_error <= plain_error);
  CHECK(static_cast<double>(kahan_error) < 1e-11);
}

TEST_CASE("complex-exponential precision is complex symmetric and matches naive") {
  Rng rng(89);
  const BasisFamily family = ComplexExponentialFamily{{3, 2}};
  const Dataset data = testing::random_dataset(rng, 12, 2);
  const GammaTensor gamma = accumulate_gamma(family, data);
  CHECK(gamma.scalar_field() == ScalarField::kComplex128);

  const Eigen::MatrixXcd dense = gamma.materialize_complex();
  CHECK((dense - dense.transpose()).norm() == doctest::Approx(0.0));
  CHECK(testing::rel_frobenius(dense, accumulate_naive_complex(family, data)) < 1e-12);
}

TEST_CASE("dimension mismatches are shape errors") {
  Rng rng(97);
  const BasisFamily family = HilbertFamily{{4, 4}, {1.0, 1.0}};
  const Dataset data = testing::random_dataset(rng, 5, 3);
  CHECK_THROWS_AS(accumulate_gamma(family, data), std::invalid_argument);
  CHECK_THROWS_AS(accumulate_naive(family, data), std::invalid_argument);
  CHECK_THROWS_AS(accumulate_gamma(Fourier1DFamily{4, 1.0}, data), UnsupportedError);

  Rng rng_1d(98);
  const Dataset data_1d = testing::random_dataset(rng_1d, 5, 1);
  CHECK_THROWS_AS(accumulate_gamma(Fourier1DFamily{4, 1.0}, data_1d), std::invalid_argument);
}

TEST_CASE("storage accounting") {
  const BasisFamily family = HilbertFamily{{24, 24, 24}, {1.0, 1.0, 1.0}};
  CHECK(dense_storage_bytes(family) == 8LL * 13824 * 13824);
  CHECK(gamma_storage_bytes(family) == 8LL * 27 * 13824);
  const BasisFamily fourier = Fourier1DFamily{5, 1.0};
  CHECK(gamma_storage_bytes(fourier) == 8LL * 3 * 15);
  CHECK(dense_storage_bytes(fourier) == 8LL * 10 * 10);
}
