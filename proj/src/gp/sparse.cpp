#include "spmpc/gp_model.hpp"
#include "spmpc/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace spmpc::gp {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

// Quantities shared by the FITC posterior and its evidence, built from
// K_M = Lm Lm^T, V = Lm^-1 K_MN, Gamma = diag(k_nn - q_nn) + sn2 and
// A = I + V Gamma^-1 V^T = La La^T.
struct FitcFactors {
  Mat k_m;
  Mat k_mn;
  Eigen::LLT<Mat> lm;
  Mat v;
  Vec gamma;
  Eigen::LLT<Mat> la;
  double jitter = 0.0;
};

FitcFactors factorize(const Mat& x, const Mat& pseudo, const OutputHyperparams& hp, int a) {
  FitcFactors f;
  f.k_m = kernel_matrix(pseudo, pseudo, hp);
  f.lm = robust_cholesky(f.k_m, hp.signal_var, a, &f.jitter);
  if (f.jitter > 0.0) f.k_m.diagonal().array() += f.jitter;
  f.k_mn = kernel_matrix(pseudo, x, hp);
  f.v = f.lm.matrixL().solve(f.k_mn);
  const Vec q = f.v.colwise().squaredNorm().transpose();
  f.gamma = (hp.signal_var - q.array()).max(0.0) + hp.noise_var;
  const Mat vg = f.v * f.gamma.cwiseInverse().asDiagonal();
  Mat amat = vg * f.v.transpose();
  amat.diagonal().array() += 1.0;
  f.la = robust_cholesky(amat, 1.0, a);
  return f;
}

std::vector<Eigen::Index> uniform_rows(Eigen::Index n, Eigen::Index m, std::uint64_t seed) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  Rng rng(seed);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto j = i + static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(m));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

GPModel sparsify_with_inputs(const Dataset& data, const GPHyperparams& hp, const Mat& pseudo_inputs,
                             TargetMode mode) {
  data.validate();
  hp.validate();
  if (hp.output_dim() != data.output_dim() || hp.input_dim() != data.input_dim()) {
    throw std::invalid_argument("sparsify: hyperparameter shape does not match data");
  }
  if (pseudo_inputs.cols() != data.input_dim() || pseudo_inputs.rows() < 1) {
    throw std::invalid_argument("sparsify: pseudo-input shape mismatch");
  }
  GPModel m;
  m.state_dim_ = data.state_dim();
  m.control_dim_ = data.control_dim();
  m.sparse_ = true;
  m.mode_ = mode;
  m.hp_ = hp;
  m.data_ = data;
  m.support_ = pseudo_inputs;

  const Eigen::Index mm = pseudo_inputs.rows();
  const int dims = data.output_dim();
  m.beta_.resize(dims);
  m.inv_gram_.resize(dims);
  m.jitter_.resize(dims);
  for (int a = 0; a < dims; ++a) {
    const auto f = factorize(data.inputs(), pseudo_inputs, hp.outputs[a], a);
    m.jitter_[a] = f.jitter;
    const Vec y = data.target_column(a);
    // beta = Lm^-T A^-1 V Gamma^-1 y
    const Vec r = f.v * y.cwiseQuotient(f.gamma);
    m.beta_[a] = f.lm.matrixU().solve(f.la.solve(r));
    // G = Lm^-T (I - A^-1) Lm^-1
    const Mat eye = Mat::Identity(mm, mm);
    const Mat inner = eye - f.la.solve(eye);
    const Mat lm_inv = f.lm.matrixL().solve(eye);
    Mat g = lm_inv.transpose() * inner * lm_inv;
    m.inv_gram_[a] = 0.5 * (g + g.transpose());
    if (!m.beta_[a].allFinite() || !m.inv_gram_[a].allFinite()) throw NumericalFailure("non-finite sparse GP", a);
  }
  return m;
}

double fitc_log_likelihood(const Dataset& data, int a, const OutputHyperparams& hp, const Mat& pseudo, Mat* grad) {
  const Mat& x = data.inputs();
  const Vec y = data.target_column(a);
  const Eigen::Index n = x.rows();
  const auto f = factorize(x, pseudo, hp, a);

  // C = V^T V + Gamma, C^-1 = Gamma^-1 - Gamma^-1 V^T A^-1 V Gamma^-1
  const Vec ginv = f.gamma.cwiseInverse();
  const Mat u = f.la.matrixL().solve(f.v * ginv.asDiagonal());  // La^-1 V Gamma^-1
  const Vec yg = y.cwiseProduct(ginv);
  const Vec alpha = yg - ginv.cwiseProduct(f.v.transpose() * f.la.solve(f.v * yg));
  const double logdet = 2.0 * f.la.matrixLLT().diagonal().array().log().sum() + f.gamma.array().log().sum();
  const double lml = -0.5 * y.dot(alpha) - 0.5 * logdet - 0.5 * static_cast<double>(n) * kLog2Pi;
  if (!std::isfinite(lml)) throw NumericalFailure("non-finite FITC evidence", a);

  if (grad) {
    const Eigen::Index mm = pseudo.rows();
    const Eigen::Index d = pseudo.cols();
    // B = K_M^-1 K_MN
    const Mat b = f.lm.matrixU().solve(f.v);
    const Vec cinv_diag = ginv - u.colwise().squaredNorm().transpose();
    const Vec w_diag = alpha.cwiseAbs2() - cinv_diag;
    // B C^-1 = B Gamma^-1 - (B Gamma^-1 V^T) A^-1 (V Gamma^-1)
    const Mat bg = b * ginv.asDiagonal();
    const Mat b_cinv = bg - (bg * f.v.transpose()) * f.la.solve(f.v * ginv.asDiagonal());
    // dL/dK_MN = B W~,  dL/dK_M = -1/2 B W~ B^T, with W~ = alpha alpha^T - C^-1 off-diagonal.
    const Mat g_mn = (b * alpha) * alpha.transpose() - b_cinv - b * w_diag.asDiagonal();
    const Mat g_m = -0.5 * g_mn * b.transpose();

    const Mat e = 2.0 * g_m.cwiseProduct(f.k_m);
    const Mat fm = g_mn.cwiseProduct(f.k_mn);
    const Vec e_rows = e.rowwise().sum();
    const Vec f_rows = fm.rowwise().sum();
    grad->resize(mm, d);
    for (Eigen::Index j = 0; j < d; ++j) {
      const double inv2 = 1.0 / (hp.length_scales(j) * hp.length_scales(j));
      const Vec pj = pseudo.col(j);
      grad->col(j) = -inv2 * (e_rows.cwiseProduct(pj) - e * pj + f_rows.cwiseProduct(pj) - fm * x.col(j));
    }
  }
  return lml;
}

GPModel sparsify(const Dataset& data, const GPHyperparams& hp, Eigen::Index m, const SparseOptions& options,
                 TargetMode mode) {
  data.validate();
  if (m < 1) throw std::invalid_argument("sparsify: pseudo-input count must be >= 1");
  if (m > data.size()) throw std::invalid_argument("sparsify: more pseudo-inputs than training points");

  const auto rows = uniform_rows(data.size(), m, options.seed);
  Mat pseudo(m, data.input_dim());
  for (Eigen::Index i = 0; i < m; ++i) pseudo.row(i) = data.inputs().row(rows[static_cast<std::size_t>(i)]);

  if (options.optimize_inputs && options.budget > 0) {
    // Optimize in length-scale units so every coordinate is similarly scaled.
    const Eigen::Index d = data.input_dim();
    Vec scale = Vec::Zero(d);
    for (const auto& o : hp.outputs) scale += o.length_scales.array().log().matrix();
    scale = (scale / static_cast<double>(hp.output_dim())).array().exp();
    const auto flat = [&](const Mat& p) {
      const Mat ps = p * scale.cwiseInverse().asDiagonal();
      return Eigen::Map<const Vec>(ps.data(), ps.size()).eval();
    };
    const auto shape = [&](const Vec& v) { return (Eigen::Map<const Mat>(v.data(), m, d) * scale.asDiagonal()).eval(); };
    optim::Objective objective = [&](const Vec& v, Vec* g) {
      const Mat p = shape(v);
      double total = 0.0;
      Mat gsum = Mat::Zero(m, d);
      try {
        for (int a = 0; a < data.output_dim(); ++a) {
          Mat ga;
          total += fitc_log_likelihood(data, a, hp.outputs[a], p, g ? &ga : nullptr);
          if (g) gsum += ga;
        }
      } catch (const NumericalFailure&) {
        if (g) g->setZero(v.size());
        return std::numeric_limits<double>::infinity();
      }
      if (g) {
        const Mat gs = -(gsum * scale.asDiagonal());
        *g = Eigen::Map<const Vec>(gs.data(), gs.size());
      }
      return -total;
    };
    const Vec span = data.inputs().colwise().maxCoeff() - data.inputs().colwise().minCoeff();
    Mat lo_m(m, d), hi_m(m, d);
    for (Eigen::Index j = 0; j < d; ++j) {
      lo_m.col(j).setConstant(data.inputs().col(j).minCoeff() - 0.1 * span(j));
      hi_m.col(j).setConstant(data.inputs().col(j).maxCoeff() + 0.1 * span(j));
    }
    optim::BoxOptions bo;
    bo.max_iterations = options.budget;
    bo.relative_tolerance = 1e-12;
    bo.max_step = 1.0;
    const auto res = optim::minimize_box(objective, flat(pseudo), flat(lo_m), flat(hi_m), bo);
    pseudo = shape(res.x);
  }
  return sparsify_with_inputs(data, hp, pseudo, mode);
}

}  // namespace spmpc::gp
