#include "spmpc/gp_model.hpp"

#include <cmath>

namespace spmpc::gp {

double kernel_eval(const Vec& xi, const Vec& xj, const OutputHyperparams& hp) {
  if (xi.size() != hp.length_scales.size() || xj.size() != hp.length_scales.size()) {
    throw std::invalid_argument("kernel_eval: input dimension does not match length scales");
  }
  const double q = ((xi - xj).array() / hp.length_scales.array()).square().sum();
  return hp.signal_var * std::exp(-0.5 * q);
}

double kernel_eval(const Vec& xi, const Vec& xj, const GPHyperparams& hp, int a) {
  if (a < 0 || a >= hp.output_dim()) throw std::invalid_argument("kernel_eval: output index out of range");
  return kernel_eval(xi, xj, hp.outputs[a]);
}

Mat kernel_matrix(const Mat& a, const Mat& b, const OutputHyperparams& hp) {
  const Eigen::Index d = hp.length_scales.size();
  if (a.cols() != d || b.cols() != d) throw std::invalid_argument("kernel_matrix: input dimension mismatch");
  const Eigen::RowVectorXd inv_ell = hp.length_scales.cwiseInverse().transpose();
  const Mat as = a.array().rowwise() * inv_ell.array();
  const Mat bs = b.array().rowwise() * inv_ell.array();
  const Vec an = as.rowwise().squaredNorm();
  const Vec bn = bs.rowwise().squaredNorm();
  Mat sq = -2.0 * as * bs.transpose();
  sq.colwise() += an;
  sq.rowwise() += bn.transpose();
  return hp.signal_var * (-0.5 * sq.array().max(0.0)).exp().matrix();
}

void GPHyperparams::validate() const {
  if (outputs.empty()) throw std::invalid_argument("hyperparameters: no output dimensions");
  const auto d = outputs.front().length_scales.size();
  for (const auto& o : outputs) {
    if (o.length_scales.size() != d) throw std::invalid_argument("hyperparameters: inconsistent input dimension");
    if (!(o.signal_var > 0.0) || !(o.noise_var > 0.0) || !std::isfinite(o.signal_var) || !std::isfinite(o.noise_var)) {
      throw std::invalid_argument("hyperparameters: variances must be positive and finite");
    }
    if (!(o.length_scales.array() > 0.0).all() || !o.length_scales.allFinite()) {
      throw std::invalid_argument("hyperparameters: length scales must be positive and finite");
    }
  }
}

Eigen::LLT<Mat> robust_cholesky(const Mat& k, double scale, int dimension, double* jitter_used) {
  Eigen::LLT<Mat> llt(k);
  if (llt.info() == Eigen::Success && k.allFinite()) {
    if (jitter_used) *jitter_used = 0.0;
    return llt;
  }
  if (!k.allFinite()) throw NumericalFailure("Gram matrix has non-finite entries", dimension);
  for (double rel = 1e-8; rel <= 1e-4 * 1.0000001; rel *= 10.0) {
    const double jitter = rel * scale;
    Mat kj = k;
    kj.diagonal().array() += jitter;
    llt.compute(kj);
    if (llt.info() == Eigen::Success) {
      if (jitter_used) *jitter_used = jitter;
      return llt;
    }
  }
  throw NumericalFailure("Gram matrix indefinite after maximum jitter", dimension);
}

}  // namespace spmpc::gp
