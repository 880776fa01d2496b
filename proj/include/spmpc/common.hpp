/**
 * @file common.hpp
 * @brief Shared aliases, error types and small numeric helpers.
 */
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace spmpc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Raised when a factorization or likelihood evaluation produces non-finite
/// or indefinite results. Carries the output dimension (or -1) and, for
/// covariance entries, the second dimension of the offending pair.
class NumericalFailure : public std::runtime_error {
public:
  NumericalFailure(const std::string& what, int dimension = -1, int other = -1)
      : std::runtime_error(what), dimension_(dimension), other_(other) {}

  int dimension() const { return dimension_; }
  int other_dimension() const { return other_; }

private:
  int dimension_;
  int other_;
};

/// Wraps an angle in degrees into (-180, 180].
double wrap_degrees(double deg);

inline constexpr double kDegToRad = 0.017453292519943295;
inline constexpr double kRadToDeg = 57.29577951308232;

/// Deterministic 64-bit mixer used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

/// Sub-seed for stream `stream`, item `index` under a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

/// Small portable RNG: splitmix-seeded xoshiro256**. Uniform draws use the top
/// 53 bits so sequences are identical across standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next();
  double uniform01();  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  double normal();
  std::size_t index(std::size_t n);  // uniform in [0, n)

private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace spmpc
