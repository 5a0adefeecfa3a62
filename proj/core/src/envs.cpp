#include "counterpol/envs.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace counterpol {

namespace {

constexpr double kPi = std::numbers::pi;

class CartPole final : public Environment {
 public:
  static constexpr double kGravity = 9.8;
  static constexpr double kMassCart = 1.0;
  static constexpr double kMassPole = 0.1;
  static constexpr double kTotalMass = kMassPole + kMassCart;
  static constexpr double kLength = 0.5;  // half the pole length
  static constexpr double kPoleMassLength = kMassPole * kLength;
  static constexpr double kForceMag = 10.0;
  static constexpr double kTau = 0.02;
  static constexpr double kThetaThreshold = 12.0 * 2.0 * kPi / 360.0;
  static constexpr double kXThreshold = 2.4;

  CartPole() : Environment(make_spec(EnvId::kCartPole)) {}

 protected:
  std::vector<double> initial_state(Rng& rng) const override {
    std::uniform_real_distribution<double> dist(-0.05, 0.05);
    std::vector<double> s(4);
    for (auto& v : s) v = dist(rng);
    return s;
  }

  Observation observe(std::span<const double> s) const override {
    return {s.begin(), s.end()};
  }

  Dynamics advance(std::span<const double> s, const Action& action) const override {
    const double x = s[0], x_dot = s[1], theta = s[2], theta_dot = s[3];
    const double force = std::get<std::size_t>(action) == 1 ? kForceMag : -kForceMag;
    const double costheta = std::cos(theta);
    const double sintheta = std::sin(theta);
    const double temp =
        (force + kPoleMassLength * theta_dot * theta_dot * sintheta) / kTotalMass;
    const double thetaacc =
        (kGravity * sintheta - costheta * temp) /
        (kLength * (4.0 / 3.0 - kMassPole * costheta * costheta / kTotalMass));
    const double xacc = temp - kPoleMassLength * thetaacc * costheta / kTotalMass;

    Dynamics d;
    d.next = {x + kTau * x_dot, x_dot + kTau * xacc, theta + kTau * theta_dot,
              theta_dot + kTau * thetaacc};
    d.terminated = d.next[0] < -kXThreshold || d.next[0] > kXThreshold ||
                   d.next[2] < -kThetaThreshold || d.next[2] > kThetaThreshold;
    d.reward = 1.0;
    return d;
  }
};

class Acrobot final : public Environment {
 public:
  static constexpr double kDt = 0.2;
  static constexpr double kLinkLength1 = 1.0;
  static constexpr double kLinkMass1 = 1.0;
  static constexpr double kLinkMass2 = 1.0;
  static constexpr double kLinkComPos1 = 0.5;
  static constexpr double kLinkComPos2 = 0.5;
  static constexpr double kLinkMoi = 1.0;
  static constexpr double kMaxVel1 = 4.0 * kPi;
  static constexpr double kMaxVel2 = 9.0 * kPi;
  static constexpr double kGravity = 9.8;
  static constexpr std::array<double, 3> kTorques{-1.0, 0.0, 1.0};

  Acrobot() : Environment(make_spec(EnvId::kAcrobot)) {}

 protected:
  using State = std::array<double, 4>;

  std::vector<double> initial_state(Rng& rng) const override {
    std::uniform_real_distribution<double> dist(-0.1, 0.1);
    std::vector<double> s(4);
    for (auto& v : s) v = dist(rng);
    return s;
  }

  Observation observe(std::span<const double> s) const override {
    return {std::cos(s[0]), std::sin(s[0]), std::cos(s[1]), std::sin(s[1]), s[2], s[3]};
  }

  Dynamics advance(std::span<const double> s, const Action& action) const override {
    const double torque = kTorques[std::get<std::size_t>(action)];
    State y{s[0], s[1], s[2], s[3]};

    // Single classic RK4 step over [0, dt]; torque is held constant.
    constexpr double dt2 = kDt / 2.0;
    const State k1 = derivs(y, torque);
    const State k2 = derivs(axpy(y, dt2, k1), torque);
    const State k3 = derivs(axpy(y, dt2, k2), torque);
    const State k4 = derivs(axpy(y, kDt, k3), torque);
    State ns;
    for (std::size_t i = 0; i < 4; ++i) {
      ns[i] = y[i] + kDt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }

    ns[0] = wrap(ns[0], -kPi, kPi);
    ns[1] = wrap(ns[1], -kPi, kPi);
    ns[2] = std::clamp(ns[2], -kMaxVel1, kMaxVel1);
    ns[3] = std::clamp(ns[3], -kMaxVel2, kMaxVel2);

    Dynamics d;
    d.next.assign(ns.begin(), ns.end());
    d.terminated = -std::cos(ns[0]) - std::cos(ns[1] + ns[0]) > 1.0;
    d.reward = d.terminated ? 0.0 : -1.0;
    return d;
  }

 private:
  static State axpy(const State& y, double a, const State& k) {
    return {y[0] + a * k[0], y[1] + a * k[1], y[2] + a * k[2], y[3] + a * k[3]};
  }

  static double wrap(double x, double lo, double hi) {
    const double diff = hi - lo;
    while (x > hi) x -= diff;
    while (x < lo) x += diff;
    return x;
  }

  // "book" variant of the two-link equations of motion.
  static State derivs(const State& s, double a) {
    constexpr double m1 = kLinkMass1, m2 = kLinkMass2, l1 = kLinkLength1;
    constexpr double lc1 = kLinkComPos1, lc2 = kLinkComPos2;
    constexpr double I1 = kLinkMoi, I2 = kLinkMoi, g = kGravity;
    const double theta1 = s[0], theta2 = s[1], dtheta1 = s[2], dtheta2 = s[3];
    const double d1 =
        m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2 * l1 * lc2 * std::cos(theta2)) + I1 + I2;
    const double d2 = m2 * (lc2 * lc2 + l1 * lc2 * std::cos(theta2)) + I2;
    const double phi2 = m2 * lc2 * g * std::cos(theta1 + theta2 - kPi / 2.0);
    const double phi1 = -m2 * l1 * lc2 * dtheta2 * dtheta2 * std::sin(theta2) -
                        2 * m2 * l1 * lc2 * dtheta2 * dtheta1 * std::sin(theta2) +
                        (m1 * lc1 + m2 * l1) * g * std::cos(theta1 - kPi / 2.0) + phi2;
    const double ddtheta2 =
        (a + d2 / d1 * phi1 - m2 * l1 * lc2 * dtheta1 * dtheta1 * std::sin(theta2) - phi2) /
        (m2 * lc2 * lc2 + I2 - d2 * d2 / d1);
    const double ddtheta1 = -(d2 * ddtheta2 + phi1) / d1;
    return {dtheta1, dtheta2, ddtheta1, ddtheta2};
  }
};

class Pendulum final : public Environment {
 public:
  static constexpr double kMaxSpeed = 8.0;
  static constexpr double kMaxTorque = 2.0;
  static constexpr double kDt = 0.05;
  static constexpr double kGravity = 10.0;
  static constexpr double kMass = 1.0;
  static constexpr double kLength = 1.0;

  Pendulum() : Environment(make_spec(EnvId::kPendulum)) {}

 protected:
  std::vector<double> initial_state(Rng& rng) const override {
    std::uniform_real_distribution<double> angle(-kPi, kPi);
    std::uniform_real_distribution<double> speed(-1.0, 1.0);
    const double th = angle(rng);
    const double thdot = speed(rng);
    return {th, thdot};
  }

  Observation observe(std::span<const double> s) const override {
    return {std::cos(s[0]), std::sin(s[0]), s[1]};
  }

  Dynamics advance(std::span<const double> s, const Action& action) const override {
    const double th = s[0], thdot = s[1];
    const double u = std::get<std::vector<double>>(action)[0];
    const double an = angle_normalize(th);
    const double cost = an * an + 0.1 * thdot * thdot + 0.001 * u * u;

    double newthdot =
        thdot + (3.0 * kGravity / (2.0 * kLength) * std::sin(th) +
                 3.0 / (kMass * kLength * kLength) * u) * kDt;
    newthdot = std::clamp(newthdot, -kMaxSpeed, kMaxSpeed);
    const double newth = th + newthdot * kDt;

    Dynamics d;
    d.next = {newth, newthdot};
    d.reward = -cost;
    d.terminated = false;
    return d;
  }
};

}  // namespace

ResetResult Environment::reset(std::uint64_t seed) const {
  Rng rng(seed);
  ResetResult r;
  r.state.internal = initial_state(rng);
  r.state.step_count = 0;
  r.observation = observe(r.state.internal);
  return r;
}

Transition Environment::step(const EnvState& state, const Action& action) const {
  if (state.finished) {
    throw std::logic_error(spec_.name + ": step() called on a finished episode");
  }

  const Action checked = std::visit(
      [&](const auto& space) -> Action {
        using Space = std::decay_t<decltype(space)>;
        if constexpr (std::is_same_v<Space, DiscreteSpace>) {
          const auto* idx = std::get_if<std::size_t>(&action);
          if (idx == nullptr || *idx >= space.n) {
            throw InvalidAction(spec_.name + ": discrete action out of range");
          }
          return *idx;
        } else {
          const auto* u = std::get_if<std::vector<double>>(&action);
          if (u == nullptr || u->size() != space.dim) {
            throw InvalidAction(spec_.name + ": continuous action has wrong dimension");
          }
          std::vector<double> clipped(*u);
          for (auto& v : clipped) {
            if (std::isnan(v)) throw InvalidAction(spec_.name + ": NaN action");
            v = std::clamp(v, space.low, space.high);
          }
          return clipped;
        }
      },
      spec_.action_space);

  Dynamics d = advance(state.internal, checked);

  Transition t;
  t.state.internal = std::move(d.next);
  t.state.step_count = state.step_count + 1;
  t.result.observation = observe(t.state.internal);
  t.result.reward = d.reward;
  t.result.terminated = d.terminated;
  t.result.truncated = !d.terminated && t.state.step_count >= spec_.max_episode_steps;
  t.state.finished = t.result.terminated || t.result.truncated;
  return t;
}

EnvSpec make_spec(EnvId id) {
  switch (id) {
    case EnvId::kCartPole:
      return {"cartpole", 4, DiscreteSpace{2}, 500, 500.0};
    case EnvId::kAcrobot:
      return {"acrobot", 6, DiscreteSpace{3}, 500, std::nullopt};
    case EnvId::kPendulum:
      return {"pendulum", 3, BoxSpace{-2.0, 2.0, 1}, 200, std::nullopt};
  }
  throw std::invalid_argument("unknown EnvId");
}

std::unique_ptr<Environment> make_environment(EnvId id) {
  switch (id) {
    case EnvId::kCartPole:
      return std::make_unique<CartPole>();
    case EnvId::kAcrobot:
      return std::make_unique<Acrobot>();
    case EnvId::kPendulum:
      return std::make_unique<Pendulum>();
  }
  throw std::invalid_argument("unknown EnvId");
}

std::optional<double> max_return(const EnvSpec& spec) { return spec.known_max_return; }

std::optional<EnvId> parse_env_id(std::string_view text) {
  if (text == "cartpole") return EnvId::kCartPole;
  if (text == "acrobot") return EnvId::kAcrobot;
  if (text == "pendulum") return EnvId::kPendulum;
  return std::nullopt;
}

std::string_view env_name(EnvId id) {
  switch (id) {
    case EnvId::kCartPole:
      return "cartpole";
    case EnvId::kAcrobot:
      return "acrobot";
    case EnvId::kPendulum:
      return "pendulum";
  }
  return "unknown";
}

double angle_normalize(double x) {
  constexpr double two_pi = 2.0 * kPi;
  double m = std::fmod(x + kPi, two_pi);
  if (m < 0.0) m += two_pi;
  return m - kPi;
}

}  // namespace counterpol
