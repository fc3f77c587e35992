#include "mfg/hjb.hpp"

#include <cmath>

namespace mfg {

namespace {

int locate_cell(const std::vector<double>& times, double t,
                const char* what) {
  const double slack = 1e-9 * std::max(1.0, std::abs(times.back()));
  if (t < times.front() - slack || t > times.back() + slack)
    throw DomainError(std::string(what) + " queried at t = " +
                      std::to_string(t) + " outside the grid range");
  if (times.size() == 1) return 0;
  double h = (times.back() - times.front()) / (times.size() - 1);
  int cell = static_cast<int>((t - times.front()) / h);
  return std::min(std::max(cell, 0), static_cast<int>(times.size()) - 2);
}

}  // namespace

Vec ValueGrid::at(double t) const {
  int m = locate_cell(times, t, "value grid");
  if (times.size() == 1) return values[0];
  double w = (t - times[m]) / (times[m + 1] - times[m]);
  w = std::min(std::max(w, 0.0), 1.0);
  return (1.0 - w) * values[m] + w * values[m + 1];
}

StatePolicy PolicyGrid::slice(double t) const {
  int m = locate_cell(times, t, "policy grid");
  StatePolicy p;
  if (times.size() == 1) {
    p.u = controls[0].u;
  } else {
    double w = (t - times[m]) / (times[m + 1] - times[m]);
    w = std::min(std::max(w, 0.0), 1.0);
    p.u = (1.0 - w) * controls[m].u + w * controls[m + 1].u;
  }
  for (int j = 0; j < p.u.rows(); ++j)
    p.u.row(j) = box.project(p.u.row(j).transpose()).transpose();
  return p;
}

PolicyCurve PolicyGrid::curve() const {
  return [this](double t) { return slice(t); };
}

Vec policy_at(const PolicyGrid& policy, double t, int j) {
  if (j < 0 || j >= policy.box.k())
    throw DomainError("policy_at: state index out of range");
  return policy.slice(t).control_at(j);
}

std::pair<Vec, double> maximize_quadratic_box(const Vec& c,
                                              const ControlSet& box) {
  Vec u = box.project(0.5 * c);
  double h = c.dot(u) - u.squaredNorm();
  return {std::move(u), h};
}

namespace {

// Coefficient vector of the Hamiltonian's linear part at (t, j, x, V).
Vec hamiltonian_coefficients(const ModelSpec& spec, double t, int j,
                             const Vec& x, const Vec& v_row) {
  Vec c(spec.k);
  for (int l = 0; l < spec.k; ++l) {
    double jc = spec.cost.entry(j, l).eval(t, x);
    if (!std::isfinite(jc))
      throw EvaluationError("cost coefficient J[" + std::to_string(j + 1) +
                            "][" + std::to_string(l + 1) +
                            "] is non-finite at t = " + std::to_string(t));
    if (l == j) {
      c(l) = jc;
    } else {
      c(l) = jc + eval_rate_raw(spec, t, j, l, x) * (v_row(l) - v_row(j));
    }
  }
  return c;
}

}  // namespace

std::pair<Vec, double> maximize_hamiltonian(const ModelSpec& spec, double t,
                                            int j, const SimplexVector& x,
                                            const Vec& v_row) {
  if (j < 0 || j >= spec.k)
    throw DomainError("maximize_hamiltonian: state index out of range");
  if (v_row.size() != spec.k)
    throw DomainError("maximize_hamiltonian: V row must have k entries");
  Vec c = hamiltonian_coefficients(spec, t, j, x.coords(), v_row);
  return maximize_quadratic_box(c, spec.control);
}

std::pair<ValueGrid, PolicyGrid> solve_hjb(const ModelSpec& spec,
                                           const Flow& x_curve, double dt) {
  spec.check_structure();
  if (dt == 0.0) dt = default_dt(spec);
  if (x_curve.t1() < spec.horizon - 1e-9)
    throw DomainError("HJB needs a flow covering [t0, T]");
  TimeGrid grid = make_time_grid(x_curve.t0(), spec.horizon, dt);
  const int M = grid.steps;
  const int k = spec.k;

  auto hamiltonian = [&](double s, const Vec& v) -> Vec {
    Vec x = x_curve.at(s);
    Vec h(k);
    for (int j = 0; j < k; ++j) {
      Vec c = hamiltonian_coefficients(spec, s, j, x, v);
      h(j) = maximize_quadratic_box(c, spec.control).second;
    }
    return h;
  };
  auto argmax_slice = [&](double s, const Vec& v) -> StatePolicy {
    Vec x = x_curve.at(s);
    StatePolicy p;
    p.u = Mat::Zero(k, k);
    for (int j = 0; j < k; ++j) {
      Vec c = hamiltonian_coefficients(spec, s, j, x, v);
      p.u.row(j) = maximize_quadratic_box(c, spec.control).first.transpose();
    }
    return p;
  };

  ValueGrid vg;
  PolicyGrid pg;
  vg.times = grid.times;
  pg.times = grid.times;
  pg.box = spec.control;
  vg.values.assign(M + 1, Vec::Zero(k));
  pg.controls.assign(M + 1, StatePolicy::zero(k));

  vg.values[M] = spec.terminal;  // exact by construction
  pg.controls[M] = argmax_slice(grid.times[M], vg.values[M]);

  Vec v = spec.terminal;
  for (int m = M - 1; m >= 0; --m) {
    double s = grid.times[m + 1];
    double h = -grid.h;  // backward step
    // dV/dt = -H, integrated from tau_{m+1} down to tau_m.
    Vec k1 = -hamiltonian(s, v);
    Vec k2 = -hamiltonian(s + h / 2, v + (h / 2) * k1);
    Vec k3 = -hamiltonian(s + h / 2, v + (h / 2) * k2);
    Vec k4 = -hamiltonian(s + h, v + h * k3);
    v += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
    if (!v.allFinite())
      throw InstabilityError("value function blew up at t = " +
                             std::to_string(grid.times[m]));
    vg.values[m] = v;
    pg.controls[m] = argmax_slice(grid.times[m], v);
  }
  return {std::move(vg), std::move(pg)};
}

}  // namespace mfg
