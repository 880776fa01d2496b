/**
 * @file gp_model.hpp
 * @brief Per-output-dimension Gaussian-process dynamics models.
 *
 * Each output dimension a has its own squared-exponential kernel
 *
 *   k_a(x, x') = sf2_a * exp(-0.5 * sum_d (x_d - x'_d)^2 / ell_{a,d}^2)
 *
 * over the concatenated (state, control) input. Models are immutable after
 * construction and safe to query from several threads.
 *
 * Dense and sparse (pseudo-input / FITC) models share one representation:
 * a support set S, weights beta_a and a matrix G_a such that
 *
 *   mean_a(x*)     = k_a(S, x*)^T beta_a
 *   variance_a(x*) = k_a(x*, x*) - k_a(S, x*)^T G_a k_a(S, x*)
 *
 * For the dense model S is the training input set and G_a = (K_a + sn2_a I)^-1.
 * For the sparse model S holds M pseudo-inputs and G_a = K_M^-1 - Q_M^-1.
 * The moment-matching code relies only on this representation.
 */
#pragma once

#include "spmpc/common.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace spmpc::gp {

/// Training tuples (state, control) -> target. Inputs are stored row-wise as
/// [state | control]; targets row-wise, one column per output dimension.
class Dataset {
public:
  Dataset() = default;
  Dataset(int state_dim, int control_dim, int output_dim);

  void add(const Vec& state, const Vec& control, const Vec& target);
  void add(const Vec& input, const Vec& target);

  int state_dim() const { return state_dim_; }
  int control_dim() const { return control_dim_; }
  int input_dim() const { return state_dim_ + control_dim_; }
  int output_dim() const { return output_dim_; }
  Eigen::Index size() const { return inputs_.rows(); }

  const Mat& inputs() const { return inputs_; }
  const Mat& targets() const { return targets_; }
  Vec target_column(int a) const { return targets_.col(a); }

  Dataset subset(const std::vector<Eigen::Index>& rows) const;

  /// Throws std::invalid_argument when the shape invariants do not hold.
  void validate() const;

private:
  int state_dim_ = 0;
  int control_dim_ = 0;
  int output_dim_ = 0;
  Mat inputs_;
  Mat targets_;
};

struct OutputHyperparams {
  double signal_var = 1.0;  // sf2, target units^2
  Vec length_scales;        // ell per input dimension, input units
  double noise_var = 1e-2;  // sn2, target units^2
};

struct GPHyperparams {
  std::vector<OutputHyperparams> outputs;

  int output_dim() const { return static_cast<int>(outputs.size()); }
  int input_dim() const { return outputs.empty() ? 0 : static_cast<int>(outputs.front().length_scales.size()); }
  void validate() const;
};

/// Squared-exponential kernel for output dimension `a`.
double kernel_eval(const Vec& xi, const Vec& xj, const GPHyperparams& hp, int a);
double kernel_eval(const Vec& xi, const Vec& xj, const OutputHyperparams& hp);

/// Cross-covariance matrix k(A_i, B_j) for row-wise inputs.
Mat kernel_matrix(const Mat& a, const Mat& b, const OutputHyperparams& hp);

/// Scale-free defaults: ell = input standard deviation, sf2 = target
/// variance, sn2 = 1% of target variance.
GPHyperparams initial_hyperparams(const Dataset& data);

/// Log marginal likelihood of output dimension `a`. When `grad` is non-null it
/// receives the gradient w.r.t. [log ell_1..log ell_D, log sf2, log sn2].
double log_marginal_likelihood(const Dataset& data, int a, const OutputHyperparams& hp, Vec* grad = nullptr);

struct FitOptions {
  /// Evidence maximization uses at most this many points (uniform subsample).
  Eigen::Index max_points = 300;
  std::uint64_t seed = 0;
  /// Lower bound on sn2 relative to the target variance.
  double noise_floor = 1e-6;
};

/// Evidence maximization in log space, one independent problem per output.
/// Never returns hyperparameters with lower likelihood than `init`.
GPHyperparams fit_hyperparameters(const Dataset& data, const GPHyperparams& init, int budget,
                                  const FitOptions& options = {});

/// How training targets relate to the next state.
enum class TargetMode {
  absolute,  // y = x_{t+1}
  delta,     // y = x_{t+1} - x_t (angles wrapped)
};

std::string to_string(TargetMode mode);
TargetMode target_mode_from_string(const std::string& s);

struct Prediction {
  Vec mean;
  Vec variance;
};

class GPModel {
public:
  GPModel() = default;

  /// Dense posterior over all training inputs.
  static GPModel build(const Dataset& data, const GPHyperparams& hp, TargetMode mode = TargetMode::absolute);

  /// Per-dimension posterior mean and latent variance at `input` = [state | control].
  Prediction predict(const Vec& input) const;

  int state_dim() const { return state_dim_; }
  int control_dim() const { return control_dim_; }
  int input_dim() const { return state_dim_ + control_dim_; }
  int output_dim() const { return static_cast<int>(beta_.size()); }
  Eigen::Index support_size() const { return support_.rows(); }
  bool is_sparse() const { return sparse_; }
  TargetMode target_mode() const { return mode_; }

  const Mat& support() const { return support_; }
  const Vec& beta(int a) const { return beta_.at(a); }
  const Mat& inverse_gram(int a) const { return inv_gram_.at(a); }
  const GPHyperparams& hyperparams() const { return hp_; }
  const Dataset& training_data() const { return data_; }
  /// Jitter actually added to the Gram diagonal of dimension `a`.
  double jitter(int a) const { return jitter_.at(a); }

private:
  friend GPModel sparsify_with_inputs(const Dataset&, const GPHyperparams&, const Mat&, TargetMode);

  int state_dim_ = 0;
  int control_dim_ = 0;
  bool sparse_ = false;
  TargetMode mode_ = TargetMode::absolute;
  GPHyperparams hp_;
  Dataset data_;
  Mat support_;
  std::vector<Vec> beta_;
  std::vector<Mat> inv_gram_;
  std::vector<double> jitter_;
};

struct SparseOptions {
  /// Refine pseudo-input locations by maximizing the summed FITC evidence.
  bool optimize_inputs = false;
  int budget = 30;
  std::uint64_t seed = 0;
};

/// Pseudo-input approximation with M inputs, initialized by uniform
/// subsampling of the training inputs.
GPModel sparsify(const Dataset& data, const GPHyperparams& hp, Eigen::Index m, const SparseOptions& options = {},
                 TargetMode mode = TargetMode::absolute);

/// Sparse model with caller-chosen pseudo-inputs (rows of `pseudo_inputs`).
GPModel sparsify_with_inputs(const Dataset& data, const GPHyperparams& hp, const Mat& pseudo_inputs,
                             TargetMode mode = TargetMode::absolute);

/// FITC log evidence of dimension `a`; optional gradient w.r.t. the pseudo-inputs.
double fitc_log_likelihood(const Dataset& data, int a, const OutputHyperparams& hp, const Mat& pseudo_inputs,
                           Mat* grad = nullptr);

/// Cholesky with the escalating-jitter policy: first without jitter, then
/// 1e-8 * scale growing by 10x up to 1e-4 * scale. Throws NumericalFailure.
Eigen::LLT<Mat> robust_cholesky(const Mat& k, double scale, int dimension, double* jitter_used = nullptr);

/// Self-describing JSON serialization of dataset, hyperparameters and the
/// pseudo-input set. Doubles round-trip bit-exactly.
void save_model(const GPModel& model, const std::string& path);
GPModel load_model(const std::string& path);
std::string serialize_model(const GPModel& model);
GPModel deserialize_model(const std::string& text);

}  // namespace spmpc::gp
