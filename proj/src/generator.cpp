#include "mfg/generator.hpp"

#include <cmath>

namespace mfg {

StatePolicy StatePolicy::constant(int k, const Vec& u0) {
  StatePolicy p;
  p.u = Mat::Zero(k, k);
  for (int j = 0; j < k; ++j) p.u.row(j) = u0.transpose();
  return p;
}

StatePolicy StatePolicy::zero(int k) {
  StatePolicy p;
  p.u = Mat::Zero(k, k);
  return p;
}

PolicyCurve constant_policy_curve(StatePolicy p) {
  return [p = std::move(p)](double) { return p; };
}

StateCurve constant_state_curve(Vec x) {
  return [x = std::move(x)](double) { return x; };
}

TimeGrid make_time_grid(double t0, double t1, double dt) {
  if (t1 < t0) throw DomainError("time grid needs t0 <= t1");
  if (!(dt > 0.0)) throw DomainError("time grid needs dt > 0");
  TimeGrid g;
  g.t0 = t0;
  g.t1 = t1;
  double span = t1 - t0;
  if (span == 0.0) {
    g.steps = 0;
    g.h = 0.0;
    g.times = {t0};
    return g;
  }
  g.steps = std::max(1, static_cast<int>(std::ceil(span / dt - 1e-12)));
  g.h = span / g.steps;
  g.times.resize(g.steps + 1);
  for (int m = 0; m <= g.steps; ++m) g.times[m] = t0 + m * g.h;
  g.times.back() = t1;
  return g;
}

namespace {

void require_policy_in_box(const ModelSpec& spec, const StatePolicy& policy) {
  if (policy.k() != spec.k || policy.u.cols() != spec.k)
    throw DomainError("policy must assign a k-vector control to each state");
  for (int j = 0; j < spec.k; ++j) {
    if (!spec.control.contains(policy.control_at(j)))
      throw DomainError("policy control at state " + std::to_string(j + 1) +
                        " lies outside the box U");
  }
}

}  // namespace

Mat build_q_raw(const ModelSpec& spec, double t, const Vec& x,
                const StatePolicy& policy) {
  require_policy_in_box(spec, policy);
  const int k = spec.k;
  Mat q = Mat::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    Vec u = spec.control.project(policy.control_at(i));
    double out = 0.0;
    for (int j = 0; j < k; ++j) {
      if (j == i) continue;
      double r = eval_rate_raw(spec, t, i, j, x) * u(j);
      q(i, j) = r;
      out += r;
    }
    q(i, i) = -out;
  }
  return q;
}

QMatrix build_q_matrix(const ModelSpec& spec, double t, const SimplexVector& x,
                       const StatePolicy& policy) {
  QMatrix qm;
  qm.t = t;
  qm.q = build_q_raw(spec, t, x.coords(), policy);
  return qm;
}

Mat propagate(const ModelSpec& spec, const PolicyCurve& policy_curve,
              const StateCurve& x_curve, double t0, double t1, const Mat& p0,
              double dt) {
  const int k = spec.k;
  if (p0.cols() != k)
    throw DomainError("p0 must have k columns");
  if (t1 > spec.horizon + 1e-9 || t0 < -1e-9)
    throw DomainError("propagation window must lie inside [0, T]");
  for (int r = 0; r < p0.rows(); ++r) {
    double sum = p0.row(r).sum();
    if (std::abs(sum - 1.0) > 1e-9)
      throw DomainError("p0 row " + std::to_string(r + 1) +
                        " is not stochastic within 1e-9");
    if (p0.row(r).minCoeff() < -1e-9)
      throw DomainError("p0 row " + std::to_string(r + 1) +
                        " has a negative entry");
  }

  TimeGrid grid = make_time_grid(t0, t1, dt);
  Mat p = p0;
  auto rhs = [&](double s, const Mat& m) -> Mat {
    return m * build_q_raw(spec, s, x_curve(s), policy_curve(s));
  };
  for (int step = 0; step < grid.steps; ++step) {
    double s = grid.times[step];
    double h = grid.h;
    Mat k1 = rhs(s, p);
    Mat k2 = rhs(s + h / 2, p + (h / 2) * k1);
    Mat k3 = rhs(s + h / 2, p + (h / 2) * k2);
    Mat k4 = rhs(s + h, p + h * k3);
    p += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);

    for (int r = 0; r < p.rows(); ++r) {
      double lowest = p.row(r).minCoeff();
      if (lowest < -1e-8)
        throw InstabilityError(
            "propagation produced a negative probability (" +
            std::to_string(lowest) + ") at s = " + std::to_string(s + h) +
            "; use a smaller dt");
      for (int c = 0; c < k; ++c)
        if (p(r, c) < 0.0) p(r, c) = 0.0;
      double sum = p.row(r).sum();
      if (std::abs(sum - 1.0) > 1e-8)
        throw InstabilityError("row mass drifted by " +
                               std::to_string(sum - 1.0) +
                               " in one step; use a smaller dt");
      p.row(r) /= sum;
    }
  }
  return p;
}

}  // namespace mfg
