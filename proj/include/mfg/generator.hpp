#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mfg/model.hpp"

namespace mfg {

/// Controlled generator at one instant: nonnegative off-diagonal entries,
/// diagonal = negative row sum, so every row sums to zero.
struct QMatrix {
  Mat q;
  double t = 0.0;
};

/// One control vector per state (an instantaneous policy slice).
struct StatePolicy {
  Mat u;  // k x k, row j = control applied at state j

  int k() const { return static_cast<int>(u.rows()); }
  Vec control_at(int j) const { return u.row(j).transpose(); }

  static StatePolicy constant(int k, const Vec& u0);
  static StatePolicy zero(int k);
};

using PolicyCurve = std::function<StatePolicy(double)>;
using StateCurve = std::function<Vec(double)>;

PolicyCurve constant_policy_curve(StatePolicy p);
StateCurve constant_state_curve(Vec x);

/// Uniform time grid covering [t0, t1] with step h <= dt (h divides the
/// span exactly).  A zero-length span yields the single node t0.
struct TimeGrid {
  double t0 = 0.0;
  double t1 = 0.0;
  int steps = 0;
  double h = 0.0;
  std::vector<double> times;
};

TimeGrid make_time_grid(double t0, double t1, double dt);

/// q[i][j] = nu_j(t, i, x) * u(i)_j for i != j; diagonal closes the row.
/// Throws DomainError if any per-state control leaves the box.
QMatrix build_q_matrix(const ModelSpec& spec, double t, const SimplexVector& x,
                       const StatePolicy& policy);

/// Stage-point variant that skips the simplex check on x.
Mat build_q_raw(const ModelSpec& spec, double t, const Vec& x,
                const StatePolicy& policy);

/// Integrates d/ds p(s) = p(s) Q(s) from t0 to t1 with the classical
/// 4th-order one-step method at fixed step dt.  p0 is a row vector (1 x k)
/// or a row-stochastic matrix; rows are renormalized each step after
/// asserting the drift stayed below 1e-8.
Mat propagate(const ModelSpec& spec, const PolicyCurve& policy_curve,
              const StateCurve& x_curve, double t0, double t1, const Mat& p0,
              double dt);

}  // namespace mfg
