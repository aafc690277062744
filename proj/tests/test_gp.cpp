#include <cmath>

#include "doctest.h"
#include "hgp/errors.hpp"
#include "hgp/gp.hpp"
#include "hgp/synthetic.hpp"
#include "test_util.hpp"

using namespace hgp;

namespace {

// Dense N x N oracle for the marginal likelihood of y ~ N(0, Phi L Phi^T + s I).
double dense_nll_oracle(const BasisFamily& family, const Dataset& data, const Hyperparams& hp) {
  const Eigen::MatrixXd phi = testing::dense_regressor(family, data.x);
  const Eigen::VectorXd lambda = spectral_weights(hp, family);
  Eigen::MatrixXd cov = phi * lambda.asDiagonal() * phi.transpose();
  cov.diagonal().array() += hp.noise_variance;
  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  REQUIRE(llt.info() == Eigen::Success);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double quad = data.y.dot(llt.solve(data.y));
  const double n = static_cast<double>(data.size());
  return 0.5 * (n * std::log(2.0 * M_PI) + log_det + quad);
}

Dataset sample_se_dataset(Rng& rng, std::int64_t n, double lo, double hi, const Hyperparams& truth) {
  Dataset data;
  data.x = uniform_inputs(rng, n, 1, lo, hi);
  const Eigen::VectorXd latent = gp_sample(rng, data.x, truth);
  data.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i)
    data.y[i] = latent[i] + std::sqrt(truth.noise_variance) * rng.normal();
  return data;
}

}  // namespace

TEST_CASE("spectral weights") {
  const BasisFamily family = HilbertFamily{{8}, {1.0}};
  const Hyperparams hp{1.0, 1.0, 0.5};
  const Eigen::VectorXd lambda = spectral_weights(hp, family);

  SUBCASE("frozen closed-form value at j = 1") {
    // sqrt(2 pi) * exp(-pi^2 / 8), the first weight for l = 1, L = 1.
    const double expected = std::sqrt(2.0 * M_PI) * std::exp(-M_PI * M_PI / 8.0);
    CHECK(lambda[0] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(0.7299631).epsilon(1e-6));
  }

  SUBCASE("ratio cancels the prefactor") {
    const double omega_1 = M_PI / 2.0, omega_2 = M_PI;
    CHECK(lambda[0] / lambda[1] ==
          doctest::Approx(std::exp((omega_2 * omega_2 - omega_1 * omega_1) / 2.0)).epsilon(1e-10));
  }

  SUBCASE("weights decrease with frequency") {
    for (int j = 1; j < lambda.size(); ++j) CHECK(lambda[j] < lambda[j - 1]);
  }

  SUBCASE("multi-index order matches regressor flattening") {
    const BasisFamily family_2d = HilbertFamily{{3, 2}, {1.0, 2.0}};
    const Eigen::VectorXd lambda_2d = spectral_weights(hp, family_2d);
    Eigen::Index flat = 0;
    for (int j1 = 1; j1 <= 3; ++j1)
      for (int j2 = 1; j2 <= 2; ++j2) {
        const double w1 = M_PI * j1 / 2.0, w2 = M_PI * j2 / 4.0;
        const double expected = hp.signal_variance * (2.0 * M_PI) *
                                std::exp(-(w1 * w1 + w2 * w2) / 2.0);
        CHECK(lambda_2d[flat++] == doctest::Approx(expected).epsilon(1e-12));
      }
  }

  CHECK_THROWS_AS(spectral_weights(hp, PolynomialFamily{{3}}), UnsupportedError);
  CHECK_THROWS_AS(spectral_weights(hp, Fourier1DFamily{3, 1.0}), UnsupportedError);
}

TEST_CASE("kernel convergence on the domain interior as m doubles") {
  const Hyperparams hp{0.1, 1.0, 0.1};
  std::vector<double> sup_errors;
  for (std::uint32_t m : {16u, 32u, 64u}) {
    const BasisFamily family = HilbertFamily{{m}, {1.0}};
    const Eigen::VectorXd lambda = spectral_weights(hp, family);
    double sup = 0.0;
    for (double a = -0.5; a <= 0.5; a += 0.125) {
      for (double b = -0.5; b <= 0.5; b += 0.125) {
        const std::array<double, 1> xa{a}, xb{b};
        const double approx =
            regressor_row(family, xa).dot(lambda.asDiagonal() * regressor_row(family, xb));
        sup = std::max(sup, std::abs(approx - se_kernel(hp, xa, xb)));
      }
    }
    sup_errors.push_back(sup);
  }
  CHECK(sup_errors[1] < sup_errors[0]);
  CHECK(sup_errors[2] < sup_errors[1]);
}

TEST_CASE("posterior with no data returns the prior") {
  const BasisFamily family = HilbertFamily{{12}, {1.5}};
  const Hyperparams hp{0.4, 1.3, 0.05};
  Dataset empty;
  empty.x.resize(0, 1);
  const PrecisionSummary summary = accumulate_stats(family, empty);

  Eigen::MatrixXd x_star(5, 1);
  x_star << -0.7, -0.2, 0.0, 0.4, 0.7;
  const Posterior post = posterior(summary, hp, family, x_star);
  const Eigen::VectorXd lambda = spectral_weights(hp, family);
  for (Eigen::Index i = 0; i < x_star.rows(); ++i) {
    CHECK(post.mean[i] == 0.0);
    const std::array<double, 1> point{x_star(i, 0)};
    const Eigen::VectorXd phi = regressor_row(family, point);
    const double prior_variance = phi.dot(lambda.asDiagonal() * phi);
    CHECK(post.variance[i] == doctest::Approx(prior_variance).epsilon(1e-10));
  }
}

TEST_CASE("gamma-route and naive-route posteriors are identical") {
  Rng rng(101);
  const BasisFamily family = HilbertFamily{{10}, {1.5}};
  const Hyperparams hp{0.5, 1.0, 0.05};
  const Dataset data = testing::random_dataset(rng, 25, 1, -1.0, 1.0, /*with_y=*/true);
  const PrecisionSummary summary = accumulate_stats(family, data);

  Eigen::MatrixXd x_star(9, 1);
  for (int i = 0; i < 9; ++i) x_star(i, 0) = -0.8 + 0.2 * i;
  const Posterior via_gamma = posterior(summary, hp, family, x_star);

  // Oracle route: the same algebra from the naive dense precision matrix.
  const Eigen::MatrixXd phi = testing::dense_regressor(family, data.x);
  const Eigen::VectorXd lambda = spectral_weights(hp, family);
  Eigen::MatrixXd z = accumulate_naive(family, data);
  z.diagonal() += hp.noise_variance * lambda.cwiseInverse();
  const Eigen::LLT<Eigen::MatrixXd> llt(z);
  const Eigen::VectorXd weights = llt.solve(phi.transpose() * data.y);
  const Eigen::MatrixXd phi_star = testing::dense_regressor(family, x_star);
  for (Eigen::Index i = 0; i < x_star.rows(); ++i) {
    const double mean = phi_star.row(i).dot(weights);
    const double variance =
        hp.noise_variance * phi_star.row(i).dot(llt.solve(phi_star.row(i).transpose()));
    CHECK(via_gamma.mean[i] == doctest::Approx(mean).epsilon(1e-10));
    CHECK(via_gamma.variance[i] == doctest::Approx(variance).epsilon(1e-10));
  }

  const double nll_gamma = neg_log_marginal_likelihood(summary, hp, family);
  const double nll_naive = nll_from_parts(accumulate_naive(family, data),
                                          phi.transpose() * data.y, data.y.squaredNorm(),
                                          static_cast<std::uint64_t>(data.size()), hp, lambda);
  CHECK(nll_gamma == doctest::Approx(nll_naive).epsilon(1e-10));

  const Posterior with_cov = posterior(summary, hp, family, x_star, /*with_covariance=*/true);
  REQUIRE(with_cov.covariance.has_value());
  CHECK((with_cov.covariance->diagonal() - with_cov.variance).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((*with_cov.covariance - with_cov.covariance->transpose()).norm() < 1e-12);
}

TEST_CASE("dense GP oracle behavior") {
  SUBCASE("interpolates the data as noise vanishes") {
    Dataset data;
    data.x.resize(4, 1);
    data.x << -1.5, -0.5, 0.5, 1.5;
    data.y.resize(4);
    data.y << 0.3, -0.8, 1.1, 0.2;
    const Hyperparams hp{0.5, 1.0, 1e-10};
    const Posterior post = dense_gp_posterior(data, hp, data.x);
    for (Eigen::Index i = 0; i < 4; ++i)
      CHECK(post.mean[i] == doctest::Approx(data.y[i]).epsilon(1e-5));
  }

  SUBCASE("single point closed form") {
    Dataset data;
    data.x.resize(1, 1);
    data.x << 0.4;
    data.y = Eigen::VectorXd::Constant(1, 2.5);
    const Hyperparams hp{0.7, 1.3, 0.2};
    Eigen::MatrixXd x_star(1, 1);
    x_star << 1.1;
    const Posterior post = dense_gp_posterior(data, hp, x_star);
    const std::array<double, 1> a{1.1}, b{0.4};
    const double k = se_kernel(hp, a, b);
    CHECK(post.mean[0] ==
          doctest::Approx(k * 2.5 / (hp.signal_variance + hp.noise_variance)).epsilon(1e-12));
    CHECK(post.variance[0] ==
          doctest::Approx(hp.signal_variance - k * k / (hp.signal_variance + hp.noise_variance))
              .epsilon(1e-12));
  }
}

TEST_CASE("basis-function posterior approaches the dense GP") {
  Rng rng(103);
  const Hyperparams hp{0.5, 1.0, 0.1};
  Dataset data = sample_se_dataset(rng, 40, -1.0, 1.0, hp);

  const BasisFamily family = HilbertFamily{{64}, {2.0}};
  const PrecisionSummary summary = accumulate_stats(family, data);

  Eigen::MatrixXd x_star(33, 1);
  for (int i = 0; i < 33; ++i) x_star(i, 0) = -0.96 + 0.06 * i;
  const Posterior approx = posterior(summary, hp, family, x_star);
  const Posterior exact = dense_gp_posterior(data, hp, x_star);

  const double mean_rms =
      std::sqrt((approx.mean - exact.mean).squaredNorm() / static_cast<double>(x_star.rows()));
  const double var_rms = std::sqrt((approx.variance - exact.variance).squaredNorm() /
                                   static_cast<double>(x_star.rows()));
  CHECK(mean_rms < 1e-3);
  CHECK(var_rms < 5e-3);
}

TEST_CASE("posterior variance never exceeds the prior variance") {
  Rng rng(107);
  const BasisFamily family = HilbertFamily{{16}, {1.5}};
  const Hyperparams hp{0.3, 1.0, 0.05};
  const Dataset data = testing::random_dataset(rng, 30, 1, -1.0, 1.0, /*with_y=*/true);

  Dataset empty;
  empty.x.resize(0, 1);
  Eigen::MatrixXd x_star(21, 1);
  for (int i = 0; i < 21; ++i) x_star(i, 0) = -1.0 + 0.1 * i;

  const Posterior prior = posterior(accumulate_stats(family, empty), hp, family, x_star);
  const Posterior post = posterior(accumulate_stats(family, data), hp, family, x_star);
  for (Eigen::Index i = 0; i < x_star.rows(); ++i)
    CHECK(post.variance[i] <= prior.variance[i] + 1e-12);
}

TEST_CASE("marginal likelihood equals the dense Gaussian density") {
  Rng rng(109);
  const BasisFamily family = HilbertFamily{{12}, {1.5}};
  for (const std::int64_t n : {1, 7, 30}) {
    const Dataset data = testing::random_dataset(rng, n, 1, -1.0, 1.0, /*with_y=*/true);
    const Hyperparams hp{rng.uniform(0.3, 1.2), rng.uniform(0.5, 2.0), rng.uniform(0.05, 0.4)};
    const PrecisionSummary summary = accumulate_stats(family, data);
    const double from_summary = neg_log_marginal_likelihood(summary, hp, family);
    const double from_dense = dense_nll_oracle(family, data, hp);
    CHECK(std::abs(from_summary - from_dense) < 1e-8);
  }
}

TEST_CASE("marginal likelihood tracks a noise-variance doubling like the dense oracle") {
  Rng rng(113);
  const BasisFamily family = HilbertFamily{{10}, {1.2}};
  Dataset data = testing::random_dataset(rng, 12, 1, -1.0, 1.0, /*with_y=*/true);
  data.y.setZero();
  const PrecisionSummary summary = accumulate_stats(family, data);
  const Hyperparams base{0.6, 1.0, 0.1};
  const Hyperparams doubled{0.6, 1.0, 0.2};
  const double shift = neg_log_marginal_likelihood(summary, doubled, family) -
                       neg_log_marginal_likelihood(summary, base, family);
  const double oracle_shift = dense_nll_oracle(family, data, doubled) -
                              dense_nll_oracle(family, data, base);
  CHECK(shift == doctest::Approx(oracle_shift).epsilon(1e-9));
}

TEST_CASE("finite-difference gradients are self-consistent across step sizes") {
  Rng rng(127);
  const BasisFamily family = HilbertFamily{{12}, {1.5}};
  const Dataset data = testing::random_dataset(rng, 40, 1, -1.0, 1.0, /*with_y=*/true);
  const PrecisionSummary summary = accumulate_stats(family, data);
  const Eigen::MatrixXd precision = reconstruct_precision(summary);
  const Hyperparams hp{0.8, 1.5, 0.3};

  const Eigen::Vector3d coarse =
      nll_fd_gradient(precision, summary.phi_t_y, summary.y_sq, summary.n, family, hp, 1e-4);
  const Eigen::Vector3d fine =
      nll_fd_gradient(precision, summary.phi_t_y, summary.y_sq, summary.n, family, hp, 1e-5);
  for (int p = 0; p < 3; ++p) {
    if (std::abs(fine[p]) > 1e-6)
      CHECK(std::abs(coarse[p] - fine[p]) / std::abs(fine[p]) < 0.01);
  }
}

TEST_CASE("optimizer stays at a stationary point of a one-parameter slice") {
  Rng rng(131);
  const BasisFamily family = HilbertFamily{{12}, {1.5}};
  const Dataset data = testing::random_dataset(rng, 40, 1, -1.0, 1.0, /*with_y=*/true);
  const PrecisionSummary summary = accumulate_stats(family, data);

  // Locate the noise-slice optimum by golden-section search (independent of
  // the optimizer under test).
  const hgp::Hyperparams fixed{0.6, 1.0, 1.0};
  auto slice = [&](double log_noise) {
    Hyperparams hp = fixed;
    hp.noise_variance = std::exp(log_noise);
    return neg_log_marginal_likelihood(summary, hp, family);
  };
  double lo = std::log(1e-4), hi = std::log(10.0);
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - ratio * (hi - lo), b = lo + ratio * (hi - lo);
  double fa = slice(a), fb = slice(b);
  while (hi - lo > 1e-12) {
    if (fa < fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - ratio * (hi - lo);
      fa = slice(a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + ratio * (hi - lo);
      fb = slice(b);
    }
  }
  const double optimum = std::exp((lo + hi) / 2.0);

  Hyperparams init = fixed;
  init.noise_variance = optimum;
  OptimizeConfig config;
  config.iterations = 10;
  config.train = {false, false, true};  // noise slice only
  const OptimizeResult result = optimize_hyperparameters(summary, family, init, config);
  CHECK(std::abs(std::log(result.params.noise_variance) - std::log(optimum)) < 1e-3);
  CHECK(result.params.lengthscale == init.lengthscale);
}

TEST_CASE("optimizer recovers synthetic hyperparameters and lowers the NLL") {
  Rng rng(137);
  const Hyperparams truth{0.5, 2.0, 0.01};
  const Dataset data = sample_se_dataset(rng, 200, -2.0, 2.0, truth);

  const BasisFamily family = HilbertFamily{{48}, {2.4}};
  const PrecisionSummary summary = accumulate_stats(family, data);
  const Hyperparams init{1.0, 10.0, 1.0};
  OptimizeConfig config;
  config.iterations = 100;
  const OptimizeResult result = optimize_hyperparameters(summary, family, init, config);

  CHECK(result.nll_trace.back() <= result.nll_trace.front());
  CHECK(result.params.lengthscale > truth.lengthscale / 1.6);
  CHECK(result.params.lengthscale < truth.lengthscale * 1.6);
}

TEST_CASE("nlpd") {
  Posterior post;
  post.mean = Eigen::VectorXd::Constant(1, 1.7);
  post.variance = Eigen::VectorXd::Constant(1, 1.0 / (2.0 * M_PI));
  Eigen::VectorXd y = Eigen::VectorXd::Constant(1, 1.7);
  CHECK(std::abs(nlpd(post, y, 0.0)) < 1e-12);

  post.variance = Eigen::VectorXd::Constant(1, 1.0);
  CHECK(nlpd(post, y, 0.0) == doctest::Approx(0.5 * std::log(2.0 * M_PI)).epsilon(1e-12));

  Eigen::VectorXd wrong(2);
  CHECK_THROWS_AS(nlpd(post, wrong, 0.0), std::invalid_argument);
}

TEST_CASE("nlpd improves with more basis functions on high-frequency data") {
  Rng rng(139);
  Eigen::MatrixXd all_x(600, 1);
  all_x.topRows(400) = uniform_inputs(rng, 400, 1, -1.0, 1.0);
  all_x.bottomRows(200) = uniform_inputs(rng, 200, 1, -0.9, 0.9);
  const Eigen::VectorXd joint = spectral_sample(rng, all_x, 0.07, 1.0, 256);

  Dataset data;
  data.x = all_x.topRows(400);
  data.y.resize(400);
  for (Eigen::Index i = 0; i < 400; ++i) data.y[i] = joint[i] + 0.1 * rng.normal();

  Dataset test;
  test.x = all_x.bottomRows(200);
  Eigen::VectorXd test_y(200);
  for (Eigen::Index i = 0; i < 200; ++i) test_y[i] = joint[400 + i] + 0.1 * rng.normal();

  const Hyperparams hp{0.07, 1.0, 0.01};
  std::vector<double> scores;
  for (std::uint32_t m : {16u, 64u}) {
    const BasisFamily family = HilbertFamily{{m}, {1.1}};
    const PrecisionSummary summary = accumulate_stats(family, data);
    const Posterior post = posterior(summary, hp, family, test.x);
    scores.push_back(nlpd(post, test_y, hp.noise_variance));
  }
  CHECK(scores[1] < scores[0]);
}
