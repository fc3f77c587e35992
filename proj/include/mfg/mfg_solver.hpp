#pragma once

#include "mfg/hjb.hpp"

namespace mfg {

/// A consistent pair (flow, policy) with the backward value function and
/// the Picard iteration trace.  The stored flow is the kinetic solve under
/// the stored policy, so replaying the forward pass reproduces it.
struct Equilibrium {
  Flow flow;
  ValueGrid value;
  PolicyGrid policy;
  std::vector<double> residual_history;  // sup_t |x^(n+1) - x^n|_1
  int iterations = 0;
  bool converged = false;
  double tol = 0.0;
  double damping = 0.0;
  double dt = 0.0;
};

/// Damped Picard iteration on the forward/backward pair.  Non-convergence
/// is a first-class result (converged = false, full residual history), not
/// an exception.
Equilibrium solve_mfg(const ModelSpec& spec, const SimplexVector& x0,
                      double tol, int max_iter, double damping,
                      double dt = 0.0);

/// Independently re-solves the kinetic equation under eq.policy and returns
/// the sup over grid times of the l1 distance to eq.flow.
double consistency_residual(const ModelSpec& spec, const Equilibrium& eq);

}  // namespace mfg
