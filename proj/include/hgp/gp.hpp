#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "hgp/basis.hpp"
#include "hgp/precision.hpp"

namespace hgp {

/// Isotropic squared-exponential kernel hyperparameters. Optimization runs on
/// log-parameters, so positivity is structural there; direct construction is
/// validated.
struct Hyperparams {
  double lengthscale = 1.0;
  double signal_variance = 1.0;
  double noise_variance = 1.0;

  void validate() const;
};

struct Posterior {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;  // latent variance, clamped at 0 after the solve
  std::optional<Eigen::MatrixXd> covariance;
};

double se_kernel(const Hyperparams& hp, std::span<const double> a, std::span<const double> b);

/// Diagonal prior weights for the Hilbert family: the squared-exponential
/// spectral density S(w) = sigma_f^2 (2 pi)^(D/2) l^D exp(-l^2 w^2 / 2)
/// evaluated at each basis frequency w_jd = pi j_d / (2 L_d), in regressor_row
/// order. Throws UnsupportedError for other families.
Eigen::VectorXd spectral_weights(const Hyperparams& hp, const BasisFamily& family);

/// Basis-function posterior at the test inputs from the O(M) summary:
/// mean = phi* Z^-1 Phi^T y, var = noise * phi*^T Z^-1 phi* with
/// Z = Phi^T Phi + noise * Lambda^-1. One O(M^3) factorization, O(M^2) per
/// test point.
Posterior posterior(const PrecisionSummary& summary, const Hyperparams& hp,
                    const BasisFamily& family, const Eigen::MatrixXd& x_star,
                    bool with_covariance = false);

/// Exact O(N^3) GP posterior with the squared-exponential kernel (oracle).
Posterior dense_gp_posterior(const Dataset& data, const Hyperparams& hp,
                             const Eigen::MatrixXd& x_star, bool with_covariance = false);

/// Negative log marginal likelihood of y ~ N(0, Phi Lambda Phi^T + noise I)
/// computed from the summary alone:
///   1/2 [ N log 2pi + (N - M) log noise + log det Z + sum_j log lambda_j
///         + (y^T y - (Phi^T y)^T Z^-1 (Phi^T y)) / noise ].
double neg_log_marginal_likelihood(const PrecisionSummary& summary, const Hyperparams& hp,
                                   const BasisFamily& family);

/// Same likelihood given an explicit dense precision matrix (the naive-route
/// entry point; the summary overload reconstructs and delegates here).
double nll_from_parts(const Eigen::MatrixXd& phi_t_phi, const Eigen::VectorXd& phi_t_y,
                      double y_sq, std::uint64_t n, const Hyperparams& hp,
                      const Eigen::VectorXd& lambda);

/// Central-difference gradient of the NLL in (log lengthscale,
/// log signal_variance, log noise_variance).
Eigen::Vector3d nll_fd_gradient(const Eigen::MatrixXd& phi_t_phi, const Eigen::VectorXd& phi_t_y,
                                double y_sq, std::uint64_t n, const BasisFamily& family,
                                const Hyperparams& hp, double step);

struct OptimizeConfig {
  int iterations = 100;
  double learning_rate = 0.05;  // Adam step size on log-parameters
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Central-difference step on log-parameters. Kept large enough that the
  // difference dominates roundoff in the NLL evaluation.
  double fd_step = 1e-3;
  // Central differences below this magnitude are indistinguishable from FD
  // truncation and roundoff; such components are zeroed so a stationary start
  // stays put.
  double gradient_floor = 1e-4;
  std::array<bool, 3> train = {true, true, true};  // lengthscale, signal, noise
};

struct OptimizeResult {
  Hyperparams params;
  std::vector<double> nll_trace;  // NLL at the initial point and after each iteration
};

/// Adam ascent on the log-parameters with finite-difference gradients. The
/// precision matrix is reconstructed once up front; the loop never touches
/// the data. Non-finite NLL at a proposed step rejects the step and halves
/// the step size; persistent failure raises with the trace so far.
OptimizeResult optimize_hyperparameters(const PrecisionSummary& summary, const BasisFamily& family,
                                        const Hyperparams& init, const OptimizeConfig& config = {});

/// Naive-route variant taking the dense precision matrix directly.
OptimizeResult optimize_hyperparameters_dense(const Eigen::MatrixXd& phi_t_phi,
                                              const Eigen::VectorXd& phi_t_y, double y_sq,
                                              std::uint64_t n, const BasisFamily& family,
                                              const Hyperparams& init,
                                              const OptimizeConfig& config = {});

/// Per-point negative log predictive density
/// 1/2 [log 2pi + log(var_i + noise) + (y_i - mean_i)^2 / (var_i + noise)].
Eigen::VectorXd nlpd_pointwise(const Posterior& post, const Eigen::VectorXd& y_true,
                               double noise_variance);

/// Mean negative log predictive density over test points.
double nlpd(const Posterior& post, const Eigen::VectorXd& y_true, double noise_variance);

}  // namespace hgp
