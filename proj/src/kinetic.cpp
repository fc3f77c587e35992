#include "mfg/kinetic.hpp"

#include <cmath>
#include <random>

namespace mfg {

Flow::Flow(std::vector<double> times, std::vector<SimplexVector> states,
           std::string policy_id)
    : times_(std::move(times)),
      states_(std::move(states)),
      policy_id_(std::move(policy_id)) {
  if (times_.empty() || times_.size() != states_.size())
    throw DomainError("flow needs matching, non-empty time and state lists");
  for (size_t m = 1; m < times_.size(); ++m)
    if (!(times_[m] > times_[m - 1]))
      throw DomainError("flow times must be strictly increasing");
}

Vec Flow::at(double t) const {
  const double slack = 1e-9 * std::max(1.0, std::abs(t1()));
  if (t < t0() - slack || t > t1() + slack)
    throw DomainError("flow queried at t = " + std::to_string(t) +
                      " outside [" + std::to_string(t0()) + ", " +
                      std::to_string(t1()) + "]");
  t = std::min(std::max(t, t0()), t1());
  const int M = size() - 1;
  if (M == 0) return states_[0].coords();

  const double h = (t1() - t0()) / M;
  int cell = std::min(M - 1, std::max(0, static_cast<int>((t - t0()) / h)));

  int i0, count;
  if (M >= 3) {
    i0 = std::min(std::max(cell - 1, 0), M - 3);
    count = 4;  // local cubic through the four nearest nodes
  } else {
    i0 = cell;
    count = 2;  // short grids fall back to linear
  }

  Vec out = Vec::Zero(states_[0].coords().size());
  for (int a = 0; a < count; ++a) {
    double w = 1.0;
    for (int b = 0; b < count; ++b) {
      if (a == b) continue;
      w *= (t - times_[i0 + b]) / (times_[i0 + a] - times_[i0 + b]);
    }
    out += w * states_[i0 + a].coords();
  }
  for (int i = 0; i < out.size(); ++i)
    if (out(i) < 0.0) out(i) = 0.0;
  return out;
}

StateCurve Flow::curve() const {
  return [this](double t) { return at(t); };
}

Observable make_observable(std::string name, int k,
                           std::function<double(const Vec&)> value,
                           std::function<Vec(const Vec&)> gradient) {
  if (k < 1) throw DomainError("observable needs k >= 1");
  Observable f{std::move(name), std::move(value), std::move(gradient)};

  // Registration check: analytic gradient vs central differences at ten
  // seeded random simplex points.
  std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
  auto unit = [&rng]() {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
  };
  const double h = 1e-5;
  for (int trial = 0; trial < 10; ++trial) {
    Vec x(k);
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
      x(i) = -std::log(1.0 - unit());
      sum += x(i);
    }
    x /= sum;
    Vec g = f.gradient(x);
    if (g.size() != k)
      throw DomainError("observable '" + f.name +
                        "': gradient has the wrong dimension");
    Vec fd(k);
    for (int i = 0; i < k; ++i) {
      Vec xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      fd(i) = (f.value(xp) - f.value(xm)) / (2 * h);
    }
    double rel = (fd - g).norm() / std::max(1.0, g.norm());
    if (!(rel <= 1e-6))
      throw DomainError("observable '" + f.name +
                        "': analytic gradient disagrees with central "
                        "differences (relative error " +
                        std::to_string(rel) + ")");
  }
  return f;
}

Flow solve_kinetic(const ModelSpec& spec, const PolicyCurve& policy_curve,
                   const SimplexVector& x0, double t0, double t1, double dt,
                   std::string policy_id) {
  if (dt == 0.0) dt = default_dt(spec);
  if (t1 > spec.horizon + 1e-9 || t0 < -1e-9)
    throw DomainError("kinetic window must lie inside [0, T]");
  TimeGrid grid = make_time_grid(t0, t1, dt);

  auto rhs = [&](double s, const Vec& y) -> Vec {
    return build_q_raw(spec, s, y, policy_curve(s)).transpose() * y;
  };

  std::vector<SimplexVector> states;
  states.reserve(grid.times.size());
  states.push_back(x0);
  Vec y = x0.coords();
  for (int step = 0; step < grid.steps; ++step) {
    double s = grid.times[step];
    double h = grid.h;
    double mass_before = y.sum();
    Vec k1 = rhs(s, y);
    Vec k2 = rhs(s + h / 2, y + (h / 2) * k1);
    Vec k3 = rhs(s + h / 2, y + (h / 2) * k2);
    Vec k4 = rhs(s + h, y + h * k3);
    y += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);

    if (std::abs(y.sum() - mass_before) > 1e-10)
      throw InstabilityError("kinetic step lost mass at s = " +
                             std::to_string(s) + "; use a smaller dt");
    for (int i = 0; i < y.size(); ++i) {
      if (y(i) < -1e-8)
        throw InstabilityError("kinetic solution went negative (" +
                               std::to_string(y(i)) + ") at s = " +
                               std::to_string(s + h) + "; use a smaller dt");
      if (y(i) < 0.0) y(i) = 0.0;
    }
    states.emplace_back(y);
  }
  return Flow(grid.times, std::move(states), std::move(policy_id));
}

double flow_initial_sensitivity(const ModelSpec& spec,
                                const PolicyCurve& policy_curve,
                                const SimplexVector& x0,
                                const SimplexVector& y0, double t1,
                                double dt) {
  double separation = (x0.coords() - y0.coords()).norm();
  if (separation == 0.0)
    throw DomainError(
        "flow_initial_sensitivity needs distinct initial points");
  Flow fx = solve_kinetic(spec, policy_curve, x0, 0.0, t1, dt);
  Flow fy = solve_kinetic(spec, policy_curve, y0, 0.0, t1, dt);
  double worst = 0.0;
  for (int m = 0; m < fx.size(); ++m)
    worst = std::max(
        worst, (fx.state(m).coords() - fy.state(m).coords()).norm());
  return worst / separation;
}

double koopman_apply(const Observable& F, const ModelSpec& spec,
                     const PolicyCurve& policy_curve, double t, double s,
                     const SimplexVector& x, double dt) {
  if (s < t) throw DomainError("koopman_apply needs t <= s");
  if (s == t) return F.value(x.coords());
  if (dt == 0.0) dt = std::min(default_dt(spec), (s - t) / 16.0);
  Flow flow = solve_kinetic(spec, policy_curve, x, t, s, dt);
  return F.value(flow.state(flow.size() - 1).coords());
}

double koopman_generator(const Observable& F, const ModelSpec& spec, double t,
                         const SimplexVector& x, const StatePolicy& u) {
  Vec drift =
      build_q_raw(spec, t, x.coords(), u).transpose() * x.coords();
  return F.gradient(x.coords()).dot(drift);
}

}  // namespace mfg
