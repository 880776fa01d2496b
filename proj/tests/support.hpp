// Shared fixtures and independent oracles for the unit tests.
#pragma once

#include "spmpc/gp_model.hpp"
#include "spmpc/propagation.hpp"

#include <cmath>

namespace spmpc::testing {

/// Random smooth dataset: targets are sines of random projections plus noise.
inline gp::Dataset random_dataset(Rng& rng, int n, int d, int u, int e, double noise = 0.05) {
  gp::Dataset data(d, u, e);
  Mat w(e, d + u);
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = rng.normal();
  for (int i = 0; i < n; ++i) {
    Vec x(d + u);
    for (int j = 0; j < d + u; ++j) x(j) = rng.uniform(-2.0, 2.0);
    Vec y(e);
    for (int a = 0; a < e; ++a) y(a) = std::sin(w.row(a).dot(x)) + noise * rng.normal();
    data.add(x, y);
  }
  return data;
}

/// Random hyperparameters with length scales comparable to the input spread.
inline gp::GPHyperparams random_hyperparams(Rng& rng, int inputs, int outputs) {
  gp::GPHyperparams hp;
  for (int a = 0; a < outputs; ++a) {
    Vec ell(inputs);
    for (int j = 0; j < inputs; ++j) ell(j) = rng.uniform(0.7, 2.5);
    hp.outputs.push_back({rng.uniform(0.5, 2.0), ell, rng.uniform(0.005, 0.05)});
  }
  return hp;
}

/// Squared-exponential kernel written out independently of the library.
inline double se_kernel(const Vec& a, const Vec& b, const gp::OutputHyperparams& h) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    const double r = (a(j) - b(j)) / h.length_scales(j);
    s += r * r;
  }
  return h.signal_var * std::exp(-0.5 * s);
}

/// Random SPD matrix with eigenvalues in roughly [lo, hi].
inline Mat random_spd(Rng& rng, int d, double lo, double hi) {
  Mat a(d, d);
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = rng.normal();
  const Eigen::HouseholderQR<Mat> qr(a);
  const Mat q = qr.householderQ();
  Vec lam(d);
  for (int i = 0; i < d; ++i) lam(i) = rng.uniform(lo, hi);
  return q * lam.asDiagonal() * q.transpose();
}

}  // namespace spmpc::testing
