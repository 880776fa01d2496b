#include "spmpc/gp_model.hpp"

namespace spmpc::gp {

Dataset::Dataset(int state_dim, int control_dim, int output_dim)
    : state_dim_(state_dim), control_dim_(control_dim), output_dim_(output_dim),
      inputs_(0, state_dim + control_dim), targets_(0, output_dim) {
  if (state_dim <= 0 || control_dim < 0 || output_dim <= 0) throw std::invalid_argument("Dataset: bad dimensions");
  if (output_dim > state_dim) throw std::invalid_argument("Dataset: output dimension exceeds state dimension");
}

void Dataset::add(const Vec& state, const Vec& control, const Vec& target) {
  if (state.size() != state_dim_ || control.size() != control_dim_) {
    throw std::invalid_argument("Dataset::add: state/control dimension mismatch");
  }
  Vec input(input_dim());
  input << state, control;
  add(input, target);
}

void Dataset::add(const Vec& input, const Vec& target) {
  if (input.size() != input_dim() || target.size() != output_dim_) {
    throw std::invalid_argument("Dataset::add: input/target dimension mismatch");
  }
  const Eigen::Index n = inputs_.rows();
  inputs_.conservativeResize(n + 1, Eigen::NoChange);
  targets_.conservativeResize(n + 1, Eigen::NoChange);
  inputs_.row(n) = input.transpose();
  targets_.row(n) = target.transpose();
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
  Dataset out(state_dim_, control_dim_, output_dim_);
  out.inputs_.resize(static_cast<Eigen::Index>(rows.size()), input_dim());
  out.targets_.resize(static_cast<Eigen::Index>(rows.size()), output_dim_);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.inputs_.row(static_cast<Eigen::Index>(i)) = inputs_.row(rows[i]);
    out.targets_.row(static_cast<Eigen::Index>(i)) = targets_.row(rows[i]);
  }
  return out;
}

void Dataset::validate() const {
  if (inputs_.rows() < 1) throw std::invalid_argument("Dataset: empty");
  if (inputs_.rows() != targets_.rows()) throw std::invalid_argument("Dataset: inputs/targets length mismatch");
  if (output_dim_ > state_dim_) throw std::invalid_argument("Dataset: output dimension exceeds state dimension");
  if (inputs_.cols() != input_dim() || targets_.cols() != output_dim_) {
    throw std::invalid_argument("Dataset: column count mismatch");
  }
}

}  // namespace spmpc::gp
