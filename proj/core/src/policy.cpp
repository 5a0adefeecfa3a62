#include "counterpol/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "network.hpp"

namespace counterpol {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2 pi)

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

detail::MlpShape shape_of(const PolicyArch& arch) {
  detail::MlpShape shape;
  shape.sizes.push_back(arch.obs_dim);
  shape.sizes.insert(shape.sizes.end(), arch.hidden_sizes.begin(), arch.hidden_sizes.end());
  shape.sizes.push_back(arch.network_outputs());
  return shape;
}

std::size_t global_log_std_count(const PolicyArch& arch) {
  if (const auto* g = std::get_if<GaussianHead>(&arch.head); g && g->global_log_std) {
    return g->action_dim;
  }
  return 0;
}

const std::vector<double>& continuous(const Action& action) {
  const auto* u = std::get_if<std::vector<double>>(&action);
  if (u == nullptr) throw std::invalid_argument("Gaussian head expects a continuous action");
  return *u;
}

std::size_t discrete(const Action& action, std::size_t n) {
  const auto* a = std::get_if<std::size_t>(&action);
  if (a == nullptr) throw std::invalid_argument("categorical head expects a discrete action");
  if (*a >= n) throw std::invalid_argument("discrete action out of range");
  return *a;
}

}  // namespace

std::size_t PolicyArch::network_outputs() const {
  return std::visit(Overloaded{
                        [](const CategoricalHead& h) { return h.n_actions; },
                        [](const GaussianHead& h) {
                          return h.global_log_std ? h.action_dim : 2 * h.action_dim;
                        },
                    },
                    head);
}

std::size_t PolicyArch::network_param_count() const { return shape_of(*this).param_count(); }

std::size_t PolicyArch::param_count() const {
  return network_param_count() + global_log_std_count(*this);
}

void PolicyArch::validate() const {
  if (obs_dim == 0) throw std::invalid_argument("PolicyArch: obs_dim must be positive");
  if (hidden_sizes.empty()) throw std::invalid_argument("PolicyArch: hidden_sizes is empty");
  for (auto h : hidden_sizes) {
    if (h == 0) throw std::invalid_argument("PolicyArch: zero-width hidden layer");
  }
  std::visit(Overloaded{
                 [](const CategoricalHead& h) {
                   if (h.n_actions < 2) throw std::invalid_argument("PolicyArch: n_actions < 2");
                 },
                 [](const GaussianHead& h) {
                   if (h.action_dim < 1) throw std::invalid_argument("PolicyArch: action_dim < 1");
                 },
             },
             head);
}

PolicyArch default_arch(const EnvSpec& spec, std::vector<std::size_t> hidden_sizes) {
  PolicyArch arch;
  arch.obs_dim = spec.obs_dim;
  arch.hidden_sizes = std::move(hidden_sizes);
  arch.head = std::visit(Overloaded{
                             [](const DiscreteSpace& s) -> PolicyHead {
                               return CategoricalHead{s.n};
                             },
                             [](const BoxSpace& s) -> PolicyHead {
                               return GaussianHead{s.dim, true};
                             },
                         },
                         spec.action_space);
  return arch;
}

void PolicyParams::validate() const {
  arch.validate();
  if (theta.size() != arch.param_count()) {
    throw std::invalid_argument("PolicyParams: theta has " + std::to_string(theta.size()) +
                                " entries, architecture needs " +
                                std::to_string(arch.param_count()));
  }
  for (double v : theta) {
    if (!std::isfinite(v)) throw std::invalid_argument("PolicyParams: non-finite parameter");
  }
}

Categorical categorical_from_probs(std::vector<double> probs) {
  Categorical c;
  c.log_probs.resize(probs.size());
  std::transform(probs.begin(), probs.end(), c.log_probs.begin(),
                 [](double p) { return std::log(p); });
  c.probs = std::move(probs);
  return c;
}

Categorical categorical_from_logits(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - m);
  const double lse = m + std::log(sum);
  Categorical c;
  c.log_probs.resize(logits.size());
  c.probs.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    c.log_probs[i] = logits[i] - lse;
    c.probs[i] = std::exp(c.log_probs[i]);
  }
  return c;
}

DiagGaussian gaussian_from_std(std::vector<double> mean, std::vector<double> std) {
  DiagGaussian g;
  g.log_std.resize(std.size());
  std::transform(std.begin(), std.end(), g.log_std.begin(), [](double s) { return std::log(s); });
  g.mean = std::move(mean);
  g.std = std::move(std);
  return g;
}

PolicyParams init_params(const PolicyArch& arch, std::uint64_t seed) {
  arch.validate();
  PolicyParams params{arch, std::vector<double>(arch.param_count(), 0.0)};
  const auto shape = shape_of(arch);
  Rng rng(seed);
  std::size_t offset = 0;
  for (std::size_t l = 0; l < shape.layers(); ++l) {
    const std::size_t in = shape.sizes[l];
    const std::size_t out = shape.sizes[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    const double gain = (l + 1 == shape.layers()) ? kOutputInitGain : 1.0;
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t i = 0; i < out * in; ++i) params.theta[offset + i] = gain * dist(rng);
    offset += out * (in + 1);  // biases stay zero
  }
  return params;
}

struct PolicyEvaluator::Impl {
  detail::MlpShape shape;
  detail::MlpWorkspace workspace;
};

PolicyEvaluator::PolicyEvaluator(const PolicyParams& params)
    : params_(&params), impl_(std::make_unique<Impl>()) {
  params.arch.validate();
  if (params.theta.size() != params.arch.param_count()) {
    throw std::invalid_argument("PolicyEvaluator: theta length does not match architecture");
  }
  impl_->shape = shape_of(params.arch);
  head_grad_.assign(params.arch.network_outputs(), 0.0);
  log_std_grad_.assign(global_log_std_count(params.arch), 0.0);
}

PolicyEvaluator::~PolicyEvaluator() = default;

const PolicyDistribution& PolicyEvaluator::evaluate(std::span<const double> obs) {
  const auto& arch = params_->arch;
  if (obs.size() != arch.obs_dim) {
    throw std::invalid_argument("forward: observation has wrong dimension");
  }
  for (double v : obs) {
    if (!std::isfinite(v)) throw std::invalid_argument("forward: non-finite observation");
  }
  const auto out = impl_->workspace.forward(impl_->shape, params_->theta, obs);

  if (std::holds_alternative<CategoricalHead>(arch.head)) {
    dist_ = categorical_from_logits(out);
  } else {
    const auto& head = std::get<GaussianHead>(arch.head);
    const std::size_t d = head.action_dim;
    DiagGaussian g;
    g.mean.assign(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(d));
    if (head.global_log_std) {
      const auto tail = params_->theta.end() - static_cast<std::ptrdiff_t>(d);
      g.log_std.assign(tail, params_->theta.end());
    } else {
      g.log_std.assign(out.begin() + static_cast<std::ptrdiff_t>(d), out.end());
    }
    g.std.resize(d);
    std::transform(g.log_std.begin(), g.log_std.end(), g.std.begin(),
                   [](double s) { return std::exp(s); });
    dist_ = std::move(g);
  }
  std::fill(head_grad_.begin(), head_grad_.end(), 0.0);
  std::fill(log_std_grad_.begin(), log_std_grad_.end(), 0.0);
  return dist_;
}

void PolicyEvaluator::add_log_prob_direction(const Action& action, double weight) {
  if (const auto* c = std::get_if<Categorical>(&dist_)) {
    const std::size_t a = discrete(action, c->probs.size());
    for (std::size_t i = 0; i < c->probs.size(); ++i) head_grad_[i] -= weight * c->probs[i];
    head_grad_[a] += weight;
    return;
  }
  const auto& g = std::get<DiagGaussian>(dist_);
  const auto& u = continuous(action);
  const std::size_t d = g.mean.size();
  if (u.size() != d) throw std::invalid_argument("continuous action has wrong dimension");
  const bool global = !log_std_grad_.empty();
  for (std::size_t i = 0; i < d; ++i) {
    const double z = (u[i] - g.mean[i]) / g.std[i];
    head_grad_[i] += weight * z / g.std[i];
    const double dlogstd = weight * (z * z - 1.0);
    if (global) {
      log_std_grad_[i] += dlogstd;
    } else {
      head_grad_[d + i] += dlogstd;
    }
  }
}

void PolicyEvaluator::add_kl_direction(const PolicyDistribution& pivot, double weight) {
  if (const auto* c = std::get_if<Categorical>(&dist_)) {
    const auto* p0 = std::get_if<Categorical>(&pivot);
    if (p0 == nullptr || p0->probs.size() != c->probs.size()) {
      throw std::invalid_argument("KL gradient: pivot distribution does not match head");
    }
    // d/dz_i of sum_j p0_j (ln p0_j - ln p_j) = p_i - p0_i
    for (std::size_t i = 0; i < c->probs.size(); ++i) {
      head_grad_[i] += weight * (c->probs[i] - p0->probs[i]);
    }
    return;
  }
  const auto& g = std::get<DiagGaussian>(dist_);
  const auto* g0 = std::get_if<DiagGaussian>(&pivot);
  if (g0 == nullptr || g0->mean.size() != g.mean.size()) {
    throw std::invalid_argument("KL gradient: pivot distribution does not match head");
  }
  const std::size_t d = g.mean.size();
  const bool global = !log_std_grad_.empty();
  for (std::size_t i = 0; i < d; ++i) {
    const double var = g.std[i] * g.std[i];
    const double diff = g.mean[i] - g0->mean[i];
    head_grad_[i] += weight * diff / var;
    const double dlogstd = weight * (1.0 - (g0->std[i] * g0->std[i] + diff * diff) / var);
    if (global) {
      log_std_grad_[i] += dlogstd;
    } else {
      head_grad_[d + i] += dlogstd;
    }
  }
}

void PolicyEvaluator::backpropagate(std::span<double> grad) {
  if (grad.size() != params_->theta.size()) {
    throw std::invalid_argument("backpropagate: gradient buffer has wrong length");
  }
  impl_->workspace.backward(impl_->shape, params_->theta, head_grad_, 1.0, grad);
  const std::size_t tail = grad.size() - log_std_grad_.size();
  for (std::size_t i = 0; i < log_std_grad_.size(); ++i) grad[tail + i] += log_std_grad_[i];
  std::fill(head_grad_.begin(), head_grad_.end(), 0.0);
  std::fill(log_std_grad_.begin(), log_std_grad_.end(), 0.0);
}

PolicyDistribution forward(const PolicyParams& params, std::span<const double> obs) {
  PolicyEvaluator eval(params);
  return eval.evaluate(obs);
}

Action sample(const PolicyDistribution& dist, Rng& rng) {
  if (const auto* c = std::get_if<Categorical>(&dist)) {
    std::discrete_distribution<std::size_t> pick(c->probs.begin(), c->probs.end());
    return pick(rng);
  }
  const auto& g = std::get<DiagGaussian>(dist);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> u(g.mean.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = g.mean[i] + g.std[i] * normal(rng);
  return u;
}

double log_prob(const PolicyDistribution& dist, const Action& action) {
  if (const auto* c = std::get_if<Categorical>(&dist)) {
    return c->log_probs[discrete(action, c->probs.size())];
  }
  const auto& g = std::get<DiagGaussian>(dist);
  const auto& u = continuous(action);
  if (u.size() != g.mean.size()) throw std::invalid_argument("continuous action has wrong dimension");
  double lp = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double z = (u[i] - g.mean[i]) / g.std[i];
    lp += -0.5 * z * z - g.log_std[i] - kHalfLog2Pi;
  }
  return lp;
}

double kl_divergence(const PolicyDistribution& dist0, const PolicyDistribution& dist1) {
  if (dist0.index() != dist1.index()) {
    throw std::invalid_argument("kl_divergence: mismatched distribution types");
  }
  double kl = 0.0;
  if (const auto* p0 = std::get_if<Categorical>(&dist0)) {
    const auto& p1 = std::get<Categorical>(dist1);
    if (p0->probs.size() != p1.probs.size()) {
      throw std::invalid_argument("kl_divergence: mismatched action counts");
    }
    for (std::size_t i = 0; i < p0->probs.size(); ++i) {
      if (p0->probs[i] > 0.0) kl += p0->probs[i] * (p0->log_probs[i] - p1.log_probs[i]);
    }
  } else {
    const auto& g0 = std::get<DiagGaussian>(dist0);
    const auto& g1 = std::get<DiagGaussian>(dist1);
    if (g0.mean.size() != g1.mean.size()) {
      throw std::invalid_argument("kl_divergence: mismatched action dimensions");
    }
    for (std::size_t i = 0; i < g0.mean.size(); ++i) {
      const double diff = g0.mean[i] - g1.mean[i];
      kl += (g1.log_std[i] - g0.log_std[i]) +
            (g0.std[i] * g0.std[i] + diff * diff) / (2.0 * g1.std[i] * g1.std[i]) - 0.5;
    }
  }
  return std::max(kl, 0.0);
}

GradVector grad_log_prob(const PolicyParams& params, std::span<const double> obs,
                         const Action& action) {
  PolicyEvaluator eval(params);
  eval.evaluate(obs);
  eval.add_log_prob_direction(action, 1.0);
  GradVector grad(params.theta.size(), 0.0);
  eval.backpropagate(grad);
  return grad;
}

GradVector grad_kl(const PolicyParams& pivot, const PolicyParams& params,
                   std::span<const double> obs) {
  if (!(pivot.arch == params.arch)) {
    throw std::invalid_argument("grad_kl: pivot and params have different architectures");
  }
  const PolicyDistribution pivot_dist = forward(pivot, obs);
  PolicyEvaluator eval(params);
  eval.evaluate(obs);
  eval.add_kl_direction(pivot_dist, 1.0);
  GradVector grad(params.theta.size(), 0.0);
  eval.backpropagate(grad);
  return grad;
}

}  // namespace counterpol
