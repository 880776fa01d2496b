#include "detail.hpp"

#include <cmath>

namespace spmpc::propagation {

namespace {

struct OutputTerms {
  Vec log_k;       // log k_a(x_i, mu), state factor including sf2
  Vec log_c;       // log k_a(u_i, u*)
  Vec inv_lambda;  // 1 / ell_x^2
};

}  // namespace

BeliefState propagate(const gp::GPModel& model, const BeliefState& b, const Vec& u, PropagationStats* stats,
                      MomentMatchWorkspace* ws) {
  detail::check_inputs(model, b, u);
  const int e = model.output_dim();
  const Eigen::Index d = model.state_dim();
  const Eigen::Index m = model.support_size();
  const auto& hp = model.hyperparams();
  const Mat& support = model.support();
  const bool delta = model.target_mode() == gp::TargetMode::delta;

  const Mat nu = support.leftCols(d).rowwise() - b.mean.transpose();
  const Mat du = support.rightCols(model.control_dim()).rowwise() - u.transpose();
  const Mat& sigma = b.cov;
  const bool deterministic = sigma.isZero(0.0);

  std::vector<OutputTerms> terms(static_cast<std::size_t>(e));
  detail::RawMoments raw{Vec(e), Mat::Zero(e, e), Mat::Zero(d, delta ? e : 0)};
  std::vector<Vec> l(static_cast<std::size_t>(e));

  for (int a = 0; a < e; ++a) {
    const auto& h = hp.outputs[a];
    auto& t = terms[static_cast<std::size_t>(a)];
    const Vec ell_x = h.length_scales.head(d);
    const Vec ell_u = h.length_scales.tail(model.control_dim());
    t.inv_lambda = ell_x.array().square().inverse();
    t.log_c = -0.5 * (du * ell_u.cwiseInverse().asDiagonal()).rowwise().squaredNorm();
    t.log_k = (std::log(h.signal_var) - 0.5 * (nu * ell_x.cwiseInverse().asDiagonal()).rowwise().squaredNorm().array())
                  .matrix();

    Vec& la = l[static_cast<std::size_t>(a)];
    if (deterministic) {
      la = (t.log_k + t.log_c).array().exp();
    } else {
      // l_a,i = c_i sf2 |Sigma Lambda^-1 + I|^-1/2 exp(-1/2 nu_i^T (Sigma + Lambda)^-1 nu_i)
      Mat ba = sigma;
      ba.diagonal() += ell_x.array().square().matrix();
      const Eigen::LLT<Mat> llt(ba);
      if (llt.info() != Eigen::Success) throw NumericalFailure("Sigma + Lambda not positive definite", a, a);
      const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum() + t.inv_lambda.array().log().sum();
      const Mat w = llt.matrixL().solve(nu.transpose());
      const Vec quad = w.colwise().squaredNorm().transpose();
      la = (std::log(h.signal_var) + t.log_c.array() - 0.5 * quad.array() - 0.5 * logdet).exp();
      if (delta) {
        // cov(x*, f_a) = Sigma (Sigma + Lambda)^-1 sum_i beta_i l_i (x_i - mu)
        const Vec weighted = nu.transpose() * model.beta(a).cwiseProduct(la);
        raw.io_cov.col(a) = sigma * llt.solve(weighted);
      }
    }
    raw.mean(a) = model.beta(a).dot(la);
  }

  if (ws) {
    ws->l = l;
    ws->control_weight.clear();
    for (const auto& t : terms) ws->control_weight.push_back(t.log_c.array().exp());
    ws->q.assign(static_cast<std::size_t>(e * (e + 1) / 2), Mat());
    ws->input_output_cov = Eigen::Map<const Vec>(raw.io_cov.data(), raw.io_cov.size());
  }

  if (deterministic && !ws) {
    for (int a = 0; a < e; ++a) {
      const Vec& la = l[static_cast<std::size_t>(a)];
      raw.cov(a, a) = hp.outputs[a].signal_var - la.dot(model.inverse_gram(a) * la);
    }
    return detail::finish(model, b, std::move(raw), stats);
  }

  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a < e; ++a) {
    for (int c = a; c < e; ++c) pairs.emplace_back(a, c);
  }
  const int npairs = static_cast<int>(pairs.size());
  Vec pair_values(npairs);

#pragma omp parallel for schedule(static) if (m >= 128)
  for (int p = 0; p < npairs; ++p) {
    const auto [a, c] = pairs[static_cast<std::size_t>(p)];
    const auto& ta = terms[static_cast<std::size_t>(a)];
    const auto& tc = terms[static_cast<std::size_t>(c)];

    // Q_ij = k_a(x_i,mu) k_c(x_j,mu) c_a,i c_c,j |R|^-1/2 exp(1/2 z_ij^T R^-1 Sigma z_ij),
    // R = Sigma (Lambda_a^-1 + Lambda_c^-1) + I, z_ij = Lambda_a^-1 nu_i + Lambda_c^-1 nu_j.
    Mat r = sigma * (ta.inv_lambda + tc.inv_lambda).asDiagonal();
    r.diagonal().array() += 1.0;
    const Eigen::PartialPivLU<Mat> lu(r);
    Mat t = lu.solve(sigma);
    t = (0.5 * (t + t.transpose())).eval();
    const double logdet_r = std::log(std::abs(lu.determinant()));

    const Mat pa = nu * ta.inv_lambda.asDiagonal();
    const Mat pc = nu * tc.inv_lambda.asDiagonal();
    const Mat pat = pa * t;
    const Vec row_terms = ta.log_k + ta.log_c + 0.5 * pat.cwiseProduct(pa).rowwise().sum();
    const Vec col_terms = tc.log_k + tc.log_c + 0.5 * (pc * t).cwiseProduct(pc).rowwise().sum();
    Mat q = pat * pc.transpose();
    q.colwise() += row_terms;
    q.rowwise() += col_terms.transpose();
    q = (q.array() - 0.5 * logdet_r).exp();

    const Vec& beta_a = model.beta(a);
    const Vec& beta_c = model.beta(c);
    if (a == c) {
      pair_values(p) = beta_a.dot(q * beta_a) + hp.outputs[a].signal_var -
                       model.inverse_gram(a).cwiseProduct(q).sum();
    } else {
      pair_values(p) = beta_a.dot(q * beta_c);
    }
    if (ws) ws->q[static_cast<std::size_t>(pair_index(a, c, e))] = std::move(q);
  }

  for (int p = 0; p < npairs; ++p) {
    const auto [a, c] = pairs[static_cast<std::size_t>(p)];
    const double v = pair_values(p) - raw.mean(a) * raw.mean(c);
    raw.cov(a, c) = v;
    raw.cov(c, a) = v;
  }
  return detail::finish(model, b, std::move(raw), stats);
}

}  // namespace spmpc::propagation
