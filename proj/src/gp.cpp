#include "hgp/gp.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "hgp/errors.hpp"
#include "hgp/log.hpp"

namespace hgp {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
// Spectral weights decay doubly exponentially in the frequency index; a tiny
// positive floor keeps 1/lambda finite for extreme hyperparameters.
constexpr double kLambdaFloor = 1e-290;

Eigen::LLT<Eigen::MatrixXd> factorize_z(Eigen::MatrixXd z) {
  Eigen::LLT<Eigen::MatrixXd> llt(std::move(z));
  if (llt.info() != Eigen::Success) {
    // The factorization aborted on a non-positive pivot; report the smallest
    // diagonal entry of the partial factor to aid diagnosis.
    const double smallest = llt.matrixLLT().diagonal().minCoeff();
    std::ostringstream os;
    os << "posterior solve: Z = Phi^T Phi + noise * Lambda^-1 is numerically indefinite "
          "(smallest pivot "
       << smallest << ")";
    throw std::runtime_error(os.str());
  }
  return llt;
}

double log_det_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

Eigen::MatrixXd regressor_matrix(const BasisFamily& family, const Eigen::MatrixXd& x) {
  const std::int64_t features = feature_count(family);
  Eigen::MatrixXd phi(x.rows(), features);
  std::vector<double> point(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index d = 0; d < x.cols(); ++d) point[static_cast<std::size_t>(d)] = x(i, d);
    phi.row(i) = regressor_row(family, point);
  }
  return phi;
}

void warn_outside_domain(const HilbertFamily& family, const Eigen::MatrixXd& x) {
  Eigen::Index outside = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index d = 0; d < x.cols(); ++d)
      if (std::abs(x(i, d)) > family.half_width[static_cast<std::size_t>(d)]) {
        ++outside;
        break;
      }
  if (outside > 0)
    log::warn("posterior: ", outside, " of ", x.rows(),
              " test points lie outside the basis domain; predictions there are extrapolation");
}

struct NllObjective {
  const Eigen::MatrixXd& phi_t_phi;
  const Eigen::VectorXd& phi_t_y;
  double y_sq;
  std::uint64_t n;
  const BasisFamily& family;

  double operator()(const Hyperparams& hp) const {
    return nll_from_parts(phi_t_phi, phi_t_y, y_sq, n, hp, spectral_weights(hp, family));
  }
};

Eigen::Vector3d to_log(const Hyperparams& hp) {
  return {std::log(hp.lengthscale), std::log(hp.signal_variance), std::log(hp.noise_variance)};
}

Hyperparams from_log(const Eigen::Vector3d& theta) {
  return {std::exp(theta[0]), std::exp(theta[1]), std::exp(theta[2])};
}

OptimizeResult run_adam(const NllObjective& objective, const Hyperparams& init,
                        const OptimizeConfig& config) {
  init.validate();
  if (objective.n == 0)
    throw std::invalid_argument("optimize_hyperparameters: summary holds no observations");

  Eigen::Vector3d theta = to_log(init);
  Eigen::Vector3d first_moment = Eigen::Vector3d::Zero();
  Eigen::Vector3d second_moment = Eigen::Vector3d::Zero();
  double step_size = config.learning_rate;

  OptimizeResult result;
  double current = objective(from_log(theta));
  if (!std::isfinite(current))
    throw std::runtime_error("optimize_hyperparameters: NLL is not finite at the initial point");
  result.nll_trace.push_back(current);

  auto fd_gradient = [&](const Eigen::Vector3d& at) {
    Eigen::Vector3d gradient = Eigen::Vector3d::Zero();
    for (int p = 0; p < 3; ++p) {
      if (!config.train[static_cast<std::size_t>(p)]) continue;
      Eigen::Vector3d forward = at, backward = at;
      forward[p] += config.fd_step;
      backward[p] -= config.fd_step;
      const double f_forward = objective(from_log(forward));
      const double f_backward = objective(from_log(backward));
      double g = 0.0;
      if (std::isfinite(f_forward) && std::isfinite(f_backward)) {
        g = (f_forward - f_backward) / (2.0 * config.fd_step);
      } else if (std::isfinite(f_forward)) {
        g = (f_forward - current) / config.fd_step;
      } else if (std::isfinite(f_backward)) {
        g = (current - f_backward) / config.fd_step;
      }
      if (std::abs(g) < config.gradient_floor) g = 0.0;
      gradient[p] = g;
    }
    return gradient;
  };

  int rejected_in_a_row = 0;
  for (int iteration = 1; iteration <= config.iterations; ++iteration) {
    const Eigen::Vector3d gradient = fd_gradient(theta);

    first_moment = config.beta1 * first_moment + (1.0 - config.beta1) * gradient;
    second_moment =
        config.beta2 * second_moment + (1.0 - config.beta2) * gradient.cwiseProduct(gradient);
    const double bias1 = 1.0 - std::pow(config.beta1, iteration);
    const double bias2 = 1.0 - std::pow(config.beta2, iteration);

    Eigen::Vector3d step;
    for (int p = 0; p < 3; ++p) {
      const double m_hat = first_moment[p] / bias1;
      const double v_hat = second_moment[p] / bias2;
      step[p] = step_size * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }

    const Eigen::Vector3d proposed = theta - step;
    const double value = objective(from_log(proposed));
    if (std::isfinite(value)) {
      theta = proposed;
      current = value;
      rejected_in_a_row = 0;
    } else {
      step_size *= 0.5;
      ++rejected_in_a_row;
      log::debug("optimizer: rejected non-finite step at iteration ", iteration,
                 "; step size now ", step_size);
      if (rejected_in_a_row > 40 || step_size < 1e-12) {
        std::ostringstream os;
        os << "optimize_hyperparameters: persistent non-finite NLL after " << iteration
           << " iterations (" << result.nll_trace.size() - 1 << " accepted steps, last NLL "
           << result.nll_trace.back() << ")";
        throw std::runtime_error(os.str());
      }
    }
    result.nll_trace.push_back(current);
  }

  result.params = from_log(theta);
  return result;
}

}  // namespace

void Hyperparams::validate() const {
  if (!(lengthscale > 0.0) || !(signal_variance > 0.0) || !(noise_variance > 0.0))
    throw std::invalid_argument("hyperparameters must be strictly positive");
}

double se_kernel(const Hyperparams& hp, std::span<const double> a, std::span<const double> b) {
  double sq_dist = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    sq_dist += diff * diff;
  }
  return hp.signal_variance * std::exp(-sq_dist / (2.0 * hp.lengthscale * hp.lengthscale));
}

Eigen::VectorXd spectral_weights(const Hyperparams& hp, const BasisFamily& family) {
  hp.validate();
  const auto* hilbert = std::get_if<HilbertFamily>(&family);
  if (hilbert == nullptr)
    throw UnsupportedError("spectral_weights: only the hilbert family has prior weights here");
  validate(family);

  const int dims = input_dim(family);
  const std::int64_t features = feature_count(family);
  const double prefactor = hp.signal_variance * std::pow(2.0 * M_PI, dims / 2.0) *
                           std::pow(hp.lengthscale, dims);

  Eigen::VectorXd lambda(features);
  std::vector<int> index(static_cast<std::size_t>(dims), 1);
  for (std::int64_t flat = 0; flat < features; ++flat) {
    double omega_sq = 0.0;
    for (int d = 0; d < dims; ++d) {
      const double omega = M_PI * index[static_cast<std::size_t>(d)] /
                           (2.0 * hilbert->half_width[static_cast<std::size_t>(d)]);
      omega_sq += omega * omega;
    }
    const double value =
        prefactor * std::exp(-hp.lengthscale * hp.lengthscale * omega_sq / 2.0);
    lambda[flat] = std::max(value, kLambdaFloor);
    for (int d = dims - 1; d >= 0; --d) {
      if (++index[static_cast<std::size_t>(d)] <= static_cast<int>(bfs_along(family, d))) break;
      index[static_cast<std::size_t>(d)] = 1;
    }
  }
  return lambda;
}

Posterior posterior(const PrecisionSummary& summary, const Hyperparams& hp,
                    const BasisFamily& family, const Eigen::MatrixXd& x_star,
                    bool with_covariance) {
  hp.validate();
  const Eigen::VectorXd lambda = spectral_weights(hp, family);
  if (x_star.rows() > 0 && x_star.cols() != input_dim(family))
    throw std::invalid_argument("posterior: test inputs do not match the family dimension");
  if (const auto* hilbert = std::get_if<HilbertFamily>(&family))
    warn_outside_domain(*hilbert, x_star);

  const std::int64_t features = feature_count(family);
  Eigen::MatrixXd z = reconstruct_precision(summary);
  z.diagonal() += hp.noise_variance * lambda.cwiseInverse();
  const Eigen::LLT<Eigen::MatrixXd> llt = factorize_z(std::move(z));

  Eigen::VectorXd weights = Eigen::VectorXd::Zero(features);
  if (summary.has_observations()) weights = llt.solve(summary.phi_t_y);

  const Eigen::MatrixXd phi_star = regressor_matrix(family, x_star);
  const Eigen::MatrixXd solved = llt.solve(phi_star.transpose());

  Posterior post;
  post.mean = phi_star * weights;
  post.variance =
      hp.noise_variance * (phi_star.transpose().cwiseProduct(solved)).colwise().sum().transpose();

  Eigen::Index clamped = 0;
  for (Eigen::Index i = 0; i < post.variance.size(); ++i) {
    if (post.variance[i] < 0.0) {
      post.variance[i] = 0.0;
      ++clamped;
    }
  }
  if (clamped > 0)
    log::warn("posterior: clamped ", clamped, " small negative variances to zero");

  if (with_covariance) post.covariance = hp.noise_variance * (phi_star * solved);
  return post;
}

Posterior dense_gp_posterior(const Dataset& data, const Hyperparams& hp,
                             const Eigen::MatrixXd& x_star, bool with_covariance) {
  hp.validate();
  data.validate();
  if (data.size() < 1) throw std::invalid_argument("dense_gp_posterior: needs at least one point");
  if (!data.has_y()) throw std::invalid_argument("dense_gp_posterior: observations y required");
  if (x_star.rows() > 0 && x_star.cols() != data.dim())
    throw std::invalid_argument("dense_gp_posterior: test input dimension mismatch");

  const Eigen::Index n = data.size();
  Eigen::MatrixXd kernel(n, n);
  std::vector<double> a(static_cast<std::size_t>(data.dim()));
  std::vector<double> b(static_cast<std::size_t>(data.dim()));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int d = 0; d < data.dim(); ++d) a[static_cast<std::size_t>(d)] = data.x(i, d);
    for (Eigen::Index j = 0; j <= i; ++j) {
      for (int d = 0; d < data.dim(); ++d) b[static_cast<std::size_t>(d)] = data.x(j, d);
      kernel(i, j) = se_kernel(hp, a, b);
      kernel(j, i) = kernel(i, j);
    }
  }
  kernel.diagonal().array() += hp.noise_variance;

  Eigen::LLT<Eigen::MatrixXd> llt(kernel);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("dense_gp_posterior: Cholesky factorization failed");
  const Eigen::VectorXd alpha = llt.solve(data.y);

  const Eigen::Index t = x_star.rows();
  Eigen::MatrixXd k_star(n, t);
  for (Eigen::Index j = 0; j < t; ++j) {
    for (int d = 0; d < data.dim(); ++d) b[static_cast<std::size_t>(d)] = x_star(j, d);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int d = 0; d < data.dim(); ++d) a[static_cast<std::size_t>(d)] = data.x(i, d);
      k_star(i, j) = se_kernel(hp, a, b);
    }
  }

  Posterior post;
  post.mean = k_star.transpose() * alpha;
  const Eigen::MatrixXd solved = llt.solve(k_star);
  post.variance.resize(t);
  for (Eigen::Index j = 0; j < t; ++j) {
    post.variance[j] = hp.signal_variance - k_star.col(j).dot(solved.col(j));
    if (post.variance[j] < 0.0) post.variance[j] = 0.0;
  }
  if (with_covariance) {
    Eigen::MatrixXd cov(t, t);
    for (Eigen::Index i = 0; i < t; ++i) {
      for (int d = 0; d < data.dim(); ++d) a[static_cast<std::size_t>(d)] = x_star(i, d);
      for (Eigen::Index j = 0; j < t; ++j) {
        for (int d = 0; d < data.dim(); ++d) b[static_cast<std::size_t>(d)] = x_star(j, d);
        cov(i, j) = se_kernel(hp, a, b);
      }
    }
    cov -= k_star.transpose() * solved;
    post.covariance = std::move(cov);
  }
  return post;
}

double nll_from_parts(const Eigen::MatrixXd& phi_t_phi, const Eigen::VectorXd& phi_t_y,
                      double y_sq, std::uint64_t n, const Hyperparams& hp,
                      const Eigen::VectorXd& lambda) {
  hp.validate();
  if (n == 0) throw std::invalid_argument("neg_log_marginal_likelihood: needs n >= 1");
  const std::int64_t features = phi_t_phi.rows();
  if (phi_t_y.size() != features || lambda.size() != features)
    throw std::invalid_argument("neg_log_marginal_likelihood: inconsistent dimensions");

  Eigen::MatrixXd z = phi_t_phi;
  z.diagonal() += hp.noise_variance * lambda.cwiseInverse();
  const Eigen::LLT<Eigen::MatrixXd> llt = factorize_z(std::move(z));

  const double quad = y_sq - phi_t_y.dot(llt.solve(phi_t_y));
  const double log_det_z = log_det_from_llt(llt);
  const double log_lambda = lambda.array().log().sum();
  const double n_d = static_cast<double>(n);
  const double m_d = static_cast<double>(features);
  return 0.5 * (n_d * kLog2Pi + (n_d - m_d) * std::log(hp.noise_variance) + log_det_z +
                log_lambda + quad / hp.noise_variance);
}

double neg_log_marginal_likelihood(const PrecisionSummary& summary, const Hyperparams& hp,
                                   const BasisFamily& family) {
  if (summary.n == 0) throw std::invalid_argument("neg_log_marginal_likelihood: needs n >= 1");
  if (!summary.has_observations())
    throw std::invalid_argument("neg_log_marginal_likelihood: summary lacks Phi^T y");
  return nll_from_parts(reconstruct_precision(summary), summary.phi_t_y, summary.y_sq, summary.n,
                        hp, spectral_weights(hp, family));
}

Eigen::Vector3d nll_fd_gradient(const Eigen::MatrixXd& phi_t_phi, const Eigen::VectorXd& phi_t_y,
                                double y_sq, std::uint64_t n, const BasisFamily& family,
                                const Hyperparams& hp, double step) {
  const NllObjective objective{phi_t_phi, phi_t_y, y_sq, n, family};
  const Eigen::Vector3d at = to_log(hp);
  Eigen::Vector3d gradient;
  for (int p = 0; p < 3; ++p) {
    Eigen::Vector3d forward = at, backward = at;
    forward[p] += step;
    backward[p] -= step;
    gradient[p] = (objective(from_log(forward)) - objective(from_log(backward))) / (2.0 * step);
  }
  return gradient;
}

OptimizeResult optimize_hyperparameters(const PrecisionSummary& summary, const BasisFamily& family,
                                        const Hyperparams& init, const OptimizeConfig& config) {
  if (!summary.has_observations())
    throw std::invalid_argument("optimize_hyperparameters: summary lacks Phi^T y");
  // Reconstructed once; the Adam loop only re-solves the M x M system.
  const Eigen::MatrixXd phi_t_phi = reconstruct_precision(summary);
  return run_adam({phi_t_phi, summary.phi_t_y, summary.y_sq, summary.n, family}, init, config);
}

OptimizeResult optimize_hyperparameters_dense(const Eigen::MatrixXd& phi_t_phi,
                                              const Eigen::VectorXd& phi_t_y, double y_sq,
                                              std::uint64_t n, const BasisFamily& family,
                                              const Hyperparams& init,
                                              const OptimizeConfig& config) {
  return run_adam({phi_t_phi, phi_t_y, y_sq, n, family}, init, config);
}

Eigen::VectorXd nlpd_pointwise(const Posterior& post, const Eigen::VectorXd& y_true,
                               double noise_variance) {
  if (post.mean.size() != y_true.size() || post.variance.size() != y_true.size())
    throw std::invalid_argument("nlpd: prediction and truth lengths differ");
  if (!y_true.allFinite() || !post.mean.allFinite() || !post.variance.allFinite())
    throw std::invalid_argument("nlpd: non-finite input");

  Eigen::VectorXd values(y_true.size());
  for (Eigen::Index i = 0; i < y_true.size(); ++i) {
    const double variance = post.variance[i] + noise_variance;
    if (!(variance > 0.0)) throw std::invalid_argument("nlpd: non-positive predictive variance");
    const double residual = y_true[i] - post.mean[i];
    values[i] = 0.5 * (kLog2Pi + std::log(variance) + residual * residual / variance);
  }
  return values;
}

double nlpd(const Posterior& post, const Eigen::VectorXd& y_true, double noise_variance) {
  if (y_true.size() == 0) throw std::invalid_argument("nlpd: empty input");
  return nlpd_pointwise(post, y_true, noise_variance).mean();
}

}  // namespace hgp
