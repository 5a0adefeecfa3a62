#include <cmath>
#include <stdexcept>

#include "counterpol/trainer.hpp"
#include "network.hpp"

namespace counterpol {

namespace detail {

MlpShape value_shape(const ValueArch& arch) {
  MlpShape shape;
  shape.sizes.push_back(arch.obs_dim);
  shape.sizes.insert(shape.sizes.end(), arch.hidden_sizes.begin(), arch.hidden_sizes.end());
  shape.sizes.push_back(1);
  return shape;
}

}  // namespace detail

std::size_t ValueArch::param_count() const { return detail::value_shape(*this).param_count(); }

ValueParams init_value_params(const ValueArch& arch, std::uint64_t seed) {
  if (arch.obs_dim == 0 || arch.hidden_sizes.empty()) {
    throw std::invalid_argument("ValueArch: need obs_dim > 0 and at least one hidden layer");
  }
  const auto shape = detail::value_shape(arch);
  ValueParams v{arch, std::vector<double>(shape.param_count(), 0.0)};
  Rng rng(seed);
  std::size_t offset = 0;
  for (std::size_t l = 0; l < shape.layers(); ++l) {
    const std::size_t in = shape.sizes[l];
    const std::size_t out = shape.sizes[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t i = 0; i < out * in; ++i) v.theta[offset + i] = dist(rng);
    offset += out * (in + 1);
  }
  return v;
}

double value_forward(const ValueParams& vparams, std::span<const double> obs) {
  if (obs.size() != vparams.arch.obs_dim) {
    throw std::invalid_argument("value_forward: observation has wrong dimension");
  }
  detail::MlpWorkspace ws;
  return ws.forward(detail::value_shape(vparams.arch), vparams.theta, obs)[0];
}

GradVector grad_value(const ValueParams& vparams, std::span<const double> obs) {
  if (obs.size() != vparams.arch.obs_dim) {
    throw std::invalid_argument("grad_value: observation has wrong dimension");
  }
  const auto shape = detail::value_shape(vparams.arch);
  detail::MlpWorkspace ws;
  ws.forward(shape, vparams.theta, obs);
  GradVector grad(vparams.theta.size(), 0.0);
  const double one = 1.0;
  ws.backward(shape, vparams.theta, {&one, 1}, 1.0, grad);
  return grad;
}

}  // namespace counterpol
