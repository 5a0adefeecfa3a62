#include "network.hpp"

namespace counterpol::detail {

namespace {

using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using RowMajorMutMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

}  // namespace

std::size_t MlpShape::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) n += sizes[l + 1] * (sizes[l] + 1);
  return n;
}

std::span<const double> MlpWorkspace::forward(const MlpShape& shape,
                                              std::span<const double> theta,
                                              std::span<const double> input) {
  const std::size_t n_layers = shape.layers();
  acts_.resize(n_layers + 1);
  acts_[0] = Eigen::Map<const Eigen::VectorXd>(input.data(),
                                               static_cast<Eigen::Index>(input.size()));

  std::size_t offset = 0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto in = static_cast<Eigen::Index>(shape.sizes[l]);
    const auto out = static_cast<Eigen::Index>(shape.sizes[l + 1]);
    RowMajorMap w(theta.data() + offset, out, in);
    Eigen::Map<const Eigen::VectorXd> b(theta.data() + offset + out * in, out);
    offset += static_cast<std::size_t>(out * (in + 1));

    acts_[l + 1].noalias() = w * acts_[l];
    acts_[l + 1] += b;
    if (l + 1 < n_layers) acts_[l + 1] = acts_[l + 1].array().tanh();
  }
  const auto& y = acts_.back();
  return {y.data(), static_cast<std::size_t>(y.size())};
}

void MlpWorkspace::backward(const MlpShape& shape, std::span<const double> theta,
                            std::span<const double> dout, double weight,
                            std::span<double> grad) {
  const std::size_t n_layers = shape.layers();
  delta_ = weight * Eigen::Map<const Eigen::VectorXd>(dout.data(),
                                                      static_cast<Eigen::Index>(dout.size()));

  // Offsets of each layer's block, walked in reverse.
  std::size_t offset = shape.param_count();
  for (std::size_t l = n_layers; l-- > 0;) {
    const auto in = static_cast<Eigen::Index>(shape.sizes[l]);
    const auto out = static_cast<Eigen::Index>(shape.sizes[l + 1]);
    offset -= static_cast<std::size_t>(out * (in + 1));

    RowMajorMutMap gw(grad.data() + offset, out, in);
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + offset + out * in, out);
    gw.noalias() += delta_ * acts_[l].transpose();
    gb += delta_;

    if (l > 0) {
      RowMajorMap w(theta.data() + offset, out, in);
      prev_.noalias() = w.transpose() * delta_;
      delta_ = prev_.array() * (1.0 - acts_[l].array().square());
    }
  }
}

}  // namespace counterpol::detail
