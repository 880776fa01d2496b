#include "detail.hpp"

#include <cmath>

namespace spmpc::propagation {

namespace {

double control_kernel(const Vec& ui, const Vec& u, const Vec& ell_u) {
  return std::exp(-0.5 * ((ui - u).array() / ell_u.array()).square().sum());
}

double state_kernel(const Vec& xi, const Vec& xj, double sf2, const Vec& lambda) {
  return sf2 * std::exp(-0.5 * ((xi - xj).array().square() / lambda.array()).sum());
}

}  // namespace

BeliefState propagate_reference(const gp::GPModel& model, const BeliefState& b, const Vec& u,
                                PropagationStats* stats, MomentMatchWorkspace* ws) {
  detail::check_inputs(model, b, u);
  const int e = model.output_dim();
  const Eigen::Index d = model.state_dim();
  const Eigen::Index m = model.support_size();
  const auto& hp = model.hyperparams();
  const Mat xs = model.support().leftCols(d);
  const Mat us = model.support().rightCols(model.control_dim());
  const Vec& mu = b.mean;
  const Mat& sigma = b.cov;
  const Mat eye = Mat::Identity(d, d);
  const bool delta = model.target_mode() == gp::TargetMode::delta;

  std::vector<Vec> lambda(static_cast<std::size_t>(e));
  std::vector<Vec> cu(static_cast<std::size_t>(e));
  std::vector<Vec> l(static_cast<std::size_t>(e));
  detail::RawMoments raw{Vec(e), Mat::Zero(e, e), Mat::Zero(d, delta ? e : 0)};

  for (int a = 0; a < e; ++a) {
    const auto& h = hp.outputs[a];
    lambda[a] = h.length_scales.head(d).array().square();
    const Vec ell_u = h.length_scales.tail(model.control_dim());
    const Mat lam = lambda[a].asDiagonal();
    const Mat lam_inv = lambda[a].cwiseInverse().asDiagonal();
    const Mat s_plus_l_inv = (sigma + lam).inverse();
    const double det = (sigma * lam_inv + eye).determinant();

    cu[a].resize(m);
    l[a].resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const Vec xi = xs.row(i).transpose();
      cu[a](i) = control_kernel(us.row(i).transpose(), u, ell_u);
      const Vec dx = xi - mu;
      l[a](i) = cu[a](i) * h.signal_var / std::sqrt(det) * std::exp(-0.5 * dx.dot(s_plus_l_inv * dx));
    }
    raw.mean(a) = model.beta(a).dot(l[a]);
    if (delta) {
      Vec acc = Vec::Zero(d);
      for (Eigen::Index i = 0; i < m; ++i) acc += model.beta(a)(i) * l[a](i) * (xs.row(i).transpose() - mu);
      raw.io_cov.col(a) = sigma * s_plus_l_inv * acc;
    }
  }

  if (ws) {
    ws->l = l;
    ws->control_weight = cu;
    ws->q.assign(static_cast<std::size_t>(e * (e + 1) / 2), Mat());
    ws->input_output_cov = Eigen::Map<const Vec>(raw.io_cov.data(), raw.io_cov.size());
  }

  for (int a = 0; a < e; ++a) {
    const auto& ha = hp.outputs[a];
    const Mat lam_a = lambda[a].asDiagonal();
    const Mat lam_a_inv = lambda[a].cwiseInverse().asDiagonal();

    // Diagonal block: L_ij with z_ij = (x_i + x_j) / 2.
    {
      const double det = (2.0 * sigma * lam_a_inv + eye).determinant();
      const Mat expo = (sigma + 0.5 * lam_a).inverse() * sigma * lam_a_inv;
      Mat big_l(m, m);
      for (Eigen::Index i = 0; i < m; ++i) {
        const Vec xi = xs.row(i).transpose();
        const double ki = state_kernel(xi, mu, ha.signal_var, lambda[a]);
        for (Eigen::Index j = 0; j < m; ++j) {
          const Vec xj = xs.row(j).transpose();
          const double kj = state_kernel(xj, mu, ha.signal_var, lambda[a]);
          const Vec z = 0.5 * (xi + xj) - mu;
          big_l(i, j) = cu[a](i) * cu[a](j) * ki * kj / std::sqrt(det) * std::exp(z.dot(expo * z));
        }
      }
      raw.cov(a, a) = model.beta(a).dot(big_l * model.beta(a)) + ha.signal_var -
                      (model.inverse_gram(a) * big_l).trace() - raw.mean(a) * raw.mean(a);
      if (ws) ws->q[static_cast<std::size_t>(pair_index(a, a, e))] = std::move(big_l);
    }

    // Off-diagonal blocks: Q_ij with z'_ij and R.
    for (int c = a + 1; c < e; ++c) {
      const auto& hc = hp.outputs[c];
      const Mat lam_c = lambda[c].asDiagonal();
      const Mat lam_c_inv = lambda[c].cwiseInverse().asDiagonal();
      const Mat lam_sum_inv = (lam_a + lam_c).inverse();
      const Mat r = (lam_a_inv + lam_c_inv).inverse() + sigma;
      const Mat r_inv = r.inverse();
      const double det = ((lam_a_inv + lam_c_inv) * sigma + eye).determinant();
      Mat q(m, m);
      for (Eigen::Index i = 0; i < m; ++i) {
        const Vec xi = xs.row(i).transpose();
        for (Eigen::Index j = 0; j < m; ++j) {
          const Vec xj = xs.row(j).transpose();
          const Vec dij = xi - xj;
          const Vec zp = lam_c * lam_sum_inv * xi + lam_a * lam_sum_inv * xj - mu;
          q(i, j) = ha.signal_var * hc.signal_var * cu[a](i) * cu[c](j) / std::sqrt(det) *
                    std::exp(-0.5 * dij.dot(lam_sum_inv * dij)) * std::exp(-0.5 * zp.dot(r_inv * zp));
        }
      }
      const double v = model.beta(a).dot(q * model.beta(c)) - raw.mean(a) * raw.mean(c);
      raw.cov(a, c) = v;
      raw.cov(c, a) = v;
      if (ws) ws->q[static_cast<std::size_t>(pair_index(a, c, e))] = std::move(q);
    }
  }
  return detail::finish(model, b, std::move(raw), stats);
}

}  // namespace spmpc::propagation
