#pragma once

#include <utility>
#include <vector>

#include "mfg/kinetic.hpp"

namespace mfg {

/// Value function V(t, j) on the shared time grid; the final slice equals
/// the terminal cost bitwise.
struct ValueGrid {
  std::vector<double> times;
  std::vector<Vec> values;  // values[m](j)

  double t0() const { return times.front(); }
  double t1() const { return times.back(); }
  /// Piecewise-linear interpolation in t.
  Vec at(double t) const;
};

/// Feedback law Gamma(t, j) on the shared grid; every stored control lies
/// in the box exactly.
struct PolicyGrid {
  std::vector<double> times;
  std::vector<StatePolicy> controls;
  ControlSet box;

  double t0() const { return times.front(); }
  double t1() const { return times.back(); }
  StatePolicy slice(double t) const;
  PolicyCurve curve() const;
};

/// Unique maximizer of c.u - |u|^2 over the box: clamp(c/2).
std::pair<Vec, double> maximize_quadratic_box(const Vec& c,
                                              const ControlSet& box);

/// Assembles c_l = J_{j,l}(t,x) + nu_l(t,j,x) (V_l - V_j) for l != j and
/// c_j = J_{j,j}(t,x), then maximizes over the box.  Returns (u*, H).
std::pair<Vec, double> maximize_hamiltonian(const ModelSpec& spec, double t,
                                            int j, const SimplexVector& x,
                                            const Vec& v_row);

/// Backward solve of dV/dt = -H(t, j, V, x_t) from the terminal cost, with
/// the maximizer recomputed at every stage.  The flow must reach T.
/// dt = 0 selects default_dt(spec).
std::pair<ValueGrid, PolicyGrid> solve_hjb(const ModelSpec& spec,
                                           const Flow& x_curve, double dt);

/// Piecewise-linear interpolation of the stored controls, re-projected
/// onto the box.  Throws DomainError outside the grid range.
Vec policy_at(const PolicyGrid& policy, double t, int j);

}  // namespace mfg
