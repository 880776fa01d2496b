#include "spmpc/gp_model.hpp"
#include "spmpc/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace spmpc::gp {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

double column_variance(const Eigen::Ref<const Vec>& v) {
  if (v.size() < 2) return 0.0;
  const double mean = v.mean();
  return (v.array() - mean).square().sum() / static_cast<double>(v.size() - 1);
}

// Indices of a uniform random subsample of size m (sorted), deterministic in seed.
std::vector<Eigen::Index> subsample(Eigen::Index n, Eigen::Index m, std::uint64_t seed) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  if (m >= n) return idx;
  Rng rng(seed);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto j = i + static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(m));
  std::sort(idx.begin(), idx.end());
  return idx;
}

Vec pack(const OutputHyperparams& hp) {
  const Eigen::Index d = hp.length_scales.size();
  Vec theta(d + 2);
  theta.head(d) = hp.length_scales.array().log();
  theta(d) = std::log(hp.signal_var);
  theta(d + 1) = std::log(hp.noise_var);
  return theta;
}

OutputHyperparams unpack(const Vec& theta) {
  const Eigen::Index d = theta.size() - 2;
  OutputHyperparams hp;
  hp.length_scales = theta.head(d).array().exp();
  hp.signal_var = std::exp(theta(d));
  hp.noise_var = std::exp(theta(d + 1));
  return hp;
}

}  // namespace

GPHyperparams initial_hyperparams(const Dataset& data) {
  data.validate();
  GPHyperparams hp;
  const Eigen::Index d = data.input_dim();
  Vec ell(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double sd = std::sqrt(column_variance(data.inputs().col(j)));
    ell(j) = sd > 1e-12 ? sd : 1.0;
  }
  for (int a = 0; a < data.output_dim(); ++a) {
    const double var = std::max(column_variance(data.targets().col(a)), 1e-10);
    hp.outputs.push_back({var, ell, 0.01 * var});
  }
  return hp;
}

double log_marginal_likelihood(const Dataset& data, int a, const OutputHyperparams& hp, Vec* grad) {
  const Mat& x = data.inputs();
  const Vec y = data.target_column(a);
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();

  const Mat k = kernel_matrix(x, x, hp);
  Mat ky = k;
  ky.diagonal().array() += hp.noise_var;
  const auto llt = robust_cholesky(ky, hp.signal_var, a);
  const Vec alpha = llt.solve(y);
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double lml = -0.5 * y.dot(alpha) - 0.5 * logdet - 0.5 * static_cast<double>(n) * kLog2Pi;
  if (!std::isfinite(lml)) throw NumericalFailure("non-finite log marginal likelihood", a);

  if (grad) {
    // dL/dtheta = 0.5 tr((alpha alpha^T - Ky^-1) dKy/dtheta)
    const Mat w = alpha * alpha.transpose() - llt.solve(Mat::Identity(n, n));
    const Mat wk = w.cwiseProduct(k);
    grad->resize(d + 2);
    for (Eigen::Index j = 0; j < d; ++j) {
      const double inv2 = 1.0 / (hp.length_scales(j) * hp.length_scales(j));
      double acc = 0.0;
      for (Eigen::Index c = 0; c < n; ++c) {
        const double xc = x(c, j);
        for (Eigen::Index r = 0; r < n; ++r) {
          const double diff = x(r, j) - xc;
          acc += wk(r, c) * diff * diff;
        }
      }
      (*grad)(j) = 0.5 * acc * inv2;
    }
    (*grad)(d) = 0.5 * wk.sum();
    (*grad)(d + 1) = 0.5 * hp.noise_var * w.trace();
  }
  return lml;
}

GPHyperparams fit_hyperparameters(const Dataset& data, const GPHyperparams& init, int budget,
                                  const FitOptions& options) {
  data.validate();
  init.validate();
  if (data.size() < 2) throw std::invalid_argument("fit_hyperparameters: need at least two samples");
  if (budget < 1) throw std::invalid_argument("fit_hyperparameters: budget must be >= 1");
  if (init.output_dim() != data.output_dim() || init.input_dim() != data.input_dim()) {
    throw std::invalid_argument("fit_hyperparameters: hyperparameter shape does not match data");
  }

  const bool use_subset = data.size() > options.max_points;
  const Dataset fit_data =
      use_subset ? data.subset(subsample(data.size(), options.max_points, options.seed)) : data;

  GPHyperparams out = init;
  const int dims = data.output_dim();
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(dims));

#pragma omp parallel for schedule(dynamic)
  for (int a = 0; a < dims; ++a) {
    try {
      const OutputHyperparams& start = init.outputs[a];
      const Vec theta0 = pack(start);
      const Eigen::Index d = start.length_scales.size();
      const double target_var = std::max(column_variance(fit_data.targets().col(a)), 1e-10);

      Vec lo(theta0.size()), hi(theta0.size());
      lo.head(d) = theta0.head(d).array() - 7.0;
      hi.head(d) = theta0.head(d).array() + 7.0;
      lo(d) = theta0(d) - 10.0;
      hi(d) = theta0(d) + 10.0;
      lo(d + 1) = std::min(std::log(options.noise_floor * target_var), theta0(d + 1));
      hi(d + 1) = std::max(std::log(10.0 * target_var), theta0(d + 1));

      const double lml0 = log_marginal_likelihood(fit_data, a, start);

      optim::Objective objective = [&](const Vec& theta, Vec* g) {
        try {
          Vec grad;
          const double v = -log_marginal_likelihood(fit_data, a, unpack(theta), g ? &grad : nullptr);
          if (g) *g = -grad;
          return v;
        } catch (const NumericalFailure&) {
          if (g) g->setZero(theta.size());
          return std::numeric_limits<double>::infinity();
        }
      };
      optim::BoxOptions bo;
      bo.max_iterations = budget;
      bo.max_step = 2.0;
      bo.gradient_tolerance = 1e-5;
      bo.relative_tolerance = 1e-12;
      const auto res = optim::minimize_box(objective, theta0, lo, hi, bo);

      OutputHyperparams fitted = unpack(res.x);
      if (!(-res.value >= lml0)) fitted = start;
      if (use_subset) {
        // The subsample drives the search; keep the result only if the full
        // data agrees that it is an improvement.
        const double full0 = log_marginal_likelihood(data, a, start);
        double full1 = -std::numeric_limits<double>::infinity();
        try {
          full1 = log_marginal_likelihood(data, a, fitted);
        } catch (const NumericalFailure&) {
        }
        if (!(full1 >= full0)) fitted = start;
      }
      out.outputs[a] = fitted;
    } catch (...) {
      errors[static_cast<std::size_t>(a)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace spmpc::gp
