#include "spmpc/gp_model.hpp"

#include <cmath>

namespace spmpc::gp {

std::string to_string(TargetMode mode) { return mode == TargetMode::delta ? "delta" : "absolute"; }

TargetMode target_mode_from_string(const std::string& s) {
  if (s == "absolute") return TargetMode::absolute;
  if (s == "delta") return TargetMode::delta;
  throw std::invalid_argument("unknown target mode: " + s);
}

GPModel GPModel::build(const Dataset& data, const GPHyperparams& hp, TargetMode mode) {
  data.validate();
  hp.validate();
  if (hp.output_dim() != data.output_dim() || hp.input_dim() != data.input_dim()) {
    throw std::invalid_argument("GPModel::build: hyperparameter shape does not match data");
  }
  GPModel m;
  m.state_dim_ = data.state_dim();
  m.control_dim_ = data.control_dim();
  m.sparse_ = false;
  m.mode_ = mode;
  m.hp_ = hp;
  m.data_ = data;
  m.support_ = data.inputs();

  const Eigen::Index n = data.size();
  const int dims = data.output_dim();
  m.beta_.resize(dims);
  m.inv_gram_.resize(dims);
  m.jitter_.resize(dims);
  for (int a = 0; a < dims; ++a) {
    const auto& h = hp.outputs[a];
    Mat ky = kernel_matrix(m.support_, m.support_, h);
    ky.diagonal().array() += h.noise_var;
    const auto llt = robust_cholesky(ky, h.signal_var, a, &m.jitter_[a]);
    m.beta_[a] = llt.solve(data.target_column(a));
    m.inv_gram_[a] = llt.solve(Mat::Identity(n, n));
    if (!m.beta_[a].allFinite()) throw NumericalFailure("non-finite GP weights", a);
  }
  return m;
}

Prediction GPModel::predict(const Vec& input) const {
  if (input.size() != input_dim()) throw std::invalid_argument("GPModel::predict: input dimension mismatch");
  const int dims = output_dim();
  Prediction p{Vec(dims), Vec(dims)};
  const Mat query = input.transpose();
  for (int a = 0; a < dims; ++a) {
    const auto& h = hp_.outputs[a];
    const Vec ks = kernel_matrix(support_, query, h).col(0);
    p.mean(a) = ks.dot(beta_[a]);
    const double var = h.signal_var - ks.dot(inv_gram_[a] * ks);
    p.variance(a) = std::max(var, 0.0);
  }
  return p;
}

}  // namespace spmpc::gp
