#include "hgp/synthetic.hpp"

#include <cmath>
#include <stdexcept>

namespace hgp {

Eigen::MatrixXd uniform_inputs(Rng& rng, std::int64_t n, int d, double lo, double hi) {
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = rng.uniform(lo, hi);
  return x;
}

Eigen::VectorXd gp_sample(Rng& rng, const Eigen::MatrixXd& x, const Hyperparams& hp) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd kernel(n, n);
  std::vector<double> a(static_cast<std::size_t>(x.cols())), b(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index d = 0; d < x.cols(); ++d) a[static_cast<std::size_t>(d)] = x(i, d);
    for (Eigen::Index j = 0; j <= i; ++j) {
      for (Eigen::Index d = 0; d < x.cols(); ++d) b[static_cast<std::size_t>(d)] = x(j, d);
      kernel(i, j) = se_kernel(hp, a, b);
      kernel(j, i) = kernel(i, j);
    }
  }
  kernel.diagonal().array() += 1e-10 * hp.signal_variance;

  Eigen::LLT<Eigen::MatrixXd> llt(kernel);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("gp_sample: kernel matrix is not positive definite");
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.normal();
  return llt.matrixL() * z;
}

Eigen::VectorXd spectral_sample(Rng& rng, const Eigen::MatrixXd& x, double lengthscale,
                                double signal_variance, int n_components) {
  const Eigen::Index n = x.rows();
  const int dims = static_cast<int>(x.cols());
  Eigen::MatrixXd frequencies(n_components, dims);
  Eigen::VectorXd phases(n_components);
  for (int r = 0; r < n_components; ++r) {
    for (int d = 0; d < dims; ++d) frequencies(r, d) = rng.normal() / lengthscale;
    phases[r] = rng.uniform(0.0, 2.0 * M_PI);
  }

  const double amplitude = std::sqrt(2.0 * signal_variance / n_components);
  Eigen::VectorXd values = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double total = 0.0;
    for (int r = 0; r < n_components; ++r) {
      double angle = phases[r];
      for (int d = 0; d < dims; ++d) angle += frequencies(r, d) * x(i, d);
      total += std::cos(angle);
    }
    values[i] = amplitude * total;
  }
  return values;
}

}  // namespace hgp
