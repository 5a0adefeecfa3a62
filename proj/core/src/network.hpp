#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace counterpol::detail {

/// Layer widths of a dense tanh network: {inputs, hidden..., outputs}. The
/// output layer is linear. Parameters are laid out layer by layer as a
/// row-major (out x in) weight block followed by the bias vector.
struct MlpShape {
  std::vector<std::size_t> sizes;

  std::size_t layers() const { return sizes.size() - 1; }
  std::size_t inputs() const { return sizes.front(); }
  std::size_t outputs() const { return sizes.back(); }
  std::size_t param_count() const;
};

/// Reusable activation storage for forward/backward passes over one shape.
class MlpWorkspace {
 public:
  /// Returns the linear output layer; valid until the next forward().
  std::span<const double> forward(const MlpShape& shape, std::span<const double> theta,
                                  std::span<const double> input);

  /// Accumulates weight * d(out . dout)/d(theta) into grad for the input of
  /// the most recent forward().
  void backward(const MlpShape& shape, std::span<const double> theta,
                std::span<const double> dout, double weight, std::span<double> grad);

 private:
  std::vector<Eigen::VectorXd> acts_;
  Eigen::VectorXd delta_;
  Eigen::VectorXd prev_;
};

}  // namespace counterpol::detail
