#pragma once

#include <Eigen/Dense>

#include "hgp/gp.hpp"
#include "hgp/precision.hpp"
#include "hgp/rng.hpp"

namespace hgp {

/// n x d matrix of independent uniforms in [lo, hi).
Eigen::MatrixXd uniform_inputs(Rng& rng, std::int64_t n, int d, double lo, double hi);

/// Exact draw from a zero-mean GP with the squared-exponential kernel at the
/// given inputs (dense Cholesky with a small jitter; O(N^3)).
Eigen::VectorXd gp_sample(Rng& rng, const Eigen::MatrixXd& x, const Hyperparams& hp);

/// Stationary random function with the squared-exponential spectrum: a sum of
/// n_components random sinusoids with N(0, 1/l^2) frequencies. Converges to a
/// GP sample as n_components grows; O(N * n_components), suitable for large N.
Eigen::VectorXd spectral_sample(Rng& rng, const Eigen::MatrixXd& x, double lengthscale,
                                double signal_variance, int n_components = 256);

}  // namespace hgp
