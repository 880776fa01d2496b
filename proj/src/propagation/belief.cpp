#include "detail.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace spmpc::propagation {

BeliefState BeliefState::point(const Vec& x) { return {x, Mat::Zero(x.size(), x.size())}; }

void BeliefState::validate() const {
  if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw std::invalid_argument("belief: covariance shape does not match mean");
  }
  if (!mean.allFinite() || !cov.allFinite()) throw std::invalid_argument("belief: non-finite entries");
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw std::invalid_argument("belief: covariance not symmetric");
  }
  if (cov.isZero(0.0)) return;
  Eigen::SelfAdjointEigenSolver<Mat> es(cov, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-9 * scale) {
    throw std::invalid_argument("belief: covariance not positive semidefinite");
  }
}

int pair_index(int a, int b, int outputs) {
  if (a > b) std::swap(a, b);
  // Row-major upper triangle including the diagonal.
  return a * outputs - a * (a - 1) / 2 + (b - a);
}

double separated_kernel_eval(const Vec& xi, const Vec& ui, const Vec& xj, const Vec& uj,
                             const gp::GPHyperparams& hp, int a) {
  if (a < 0 || a >= hp.output_dim()) throw std::invalid_argument("separated_kernel_eval: output index out of range");
  const auto& h = hp.outputs[a];
  const Eigen::Index ds = xi.size();
  const Eigen::Index du = ui.size();
  if (xj.size() != ds || uj.size() != du || ds + du != h.length_scales.size()) {
    throw std::invalid_argument("separated_kernel_eval: dimension mismatch");
  }
  const double qx = ((xi - xj).array() / h.length_scales.head(ds).array()).square().sum();
  const double qu = ((ui - uj).array() / h.length_scales.tail(du).array()).square().sum();
  const double kx = h.signal_var * std::exp(-0.5 * qx);
  const double ku = std::exp(-0.5 * qu);
  return ku * kx;
}

BeliefState extend_with_exogenous(const BeliefState& b, const Vec& exogenous) {
  const Eigen::Index e = b.dim();
  const Eigen::Index d = e + exogenous.size();
  BeliefState out{Vec(d), Mat::Zero(d, d)};
  out.mean << b.mean, exogenous;
  out.cov.topLeftCorner(e, e) = b.cov;
  return out;
}

namespace detail {

void check_inputs(const gp::GPModel& model, const BeliefState& b, const Vec& u) {
  if (b.dim() != model.state_dim()) throw std::invalid_argument("propagate: belief dimension != model state dimension");
  if (u.size() != model.control_dim()) throw std::invalid_argument("propagate: control dimension mismatch");
  if (!u.allFinite()) throw std::invalid_argument("propagate: non-finite control");
  b.validate();
}

BeliefState finish(const gp::GPModel& model, const BeliefState& b, RawMoments raw, PropagationStats* stats) {
  const int e = model.output_dim();
  BeliefState out;
  if (model.target_mode() == gp::TargetMode::delta) {
    const Mat c = raw.io_cov.topRows(e);
    out.mean = b.mean.head(e) + raw.mean;
    out.cov = b.cov.topLeftCorner(e, e) + raw.cov + c + c.transpose();
  } else {
    out.mean = std::move(raw.mean);
    out.cov = std::move(raw.cov);
  }
  out.cov = (0.5 * (out.cov + out.cov.transpose())).eval();
  for (int a = 0; a < e; ++a) {
    if (!std::isfinite(out.mean(a))) throw NumericalFailure("non-finite predicted mean", a, a);
    for (int c = 0; c < e; ++c) {
      if (!std::isfinite(out.cov(a, c))) {
        throw NumericalFailure("non-finite predicted covariance (" + std::to_string(a) + "," + std::to_string(c) + ")", a, c);
      }
    }
  }
  // Cancellation can leave the matched covariance slightly indefinite.
  const Eigen::SelfAdjointEigenSolver<Mat> eig(out.cov);
  if (eig.eigenvalues().minCoeff() < 0.0) {
    const Vec lam = eig.eigenvalues().cwiseMax(0.0);
    out.cov = eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
    out.cov = (0.5 * (out.cov + out.cov.transpose())).eval();
    if (stats) ++stats->clamp_count;
  }
  for (int a = 0; a < e; ++a) {
    if (out.cov(a, a) < kVarianceFloor) {
      out.cov(a, a) = kVarianceFloor;
      if (stats) ++stats->clamp_count;
    }
  }
  return out;
}

}  // namespace detail
}  // namespace spmpc::propagation
