#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mfg/generator.hpp"
#include "mfg/model.hpp"

namespace mfg {

/// Solution curve of the kinetic equation on a uniform time grid, with
/// dense output by local cubic interpolation.
class Flow {
 public:
  Flow(std::vector<double> times, std::vector<SimplexVector> states,
       std::string policy_id);

  int size() const { return static_cast<int>(times_.size()); }
  double time(int m) const { return times_[m]; }
  const SimplexVector& state(int m) const { return states_[m]; }
  const std::vector<double>& times() const { return times_; }
  double t0() const { return times_.front(); }
  double t1() const { return times_.back(); }
  const std::string& policy_id() const { return policy_id_; }

  /// Dense output; entries clamped at 0 if interpolation undershoots by
  /// roundoff.  Throws DomainError outside [t0, t1].
  Vec at(double t) const;
  StateCurve curve() const;

 private:
  std::vector<double> times_;
  std::vector<SimplexVector> states_;
  std::string policy_id_;
};

/// A C^1 functional with caller-supplied analytic gradient.  Construction
/// via make_observable checks the gradient against central differences.
struct Observable {
  std::string name;
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
};

Observable make_observable(std::string name, int k,
                           std::function<double(const Vec&)> value,
                           std::function<Vec(const Vec&)> gradient);

/// Integrates dx/ds = A*[s, x_s, u_s] x_s by the 4th-order one-step method.
/// dt = 0 selects default_dt(spec).
Flow solve_kinetic(const ModelSpec& spec, const PolicyCurve& policy_curve,
                   const SimplexVector& x0, double t0, double t1, double dt,
                   std::string policy_id = "");

/// sup over grid times of |alpha(0,s,x0) - alpha(0,s,y0)| / |x0 - y0|
/// (Euclidean).  Throws DomainError when x0 == y0.
double flow_initial_sensitivity(const ModelSpec& spec,
                                const PolicyCurve& policy_curve,
                                const SimplexVector& x0,
                                const SimplexVector& y0, double t1,
                                double dt = 0.0);

/// F(alpha(t, s, x, u)) via solve_kinetic.
double koopman_apply(const Observable& F, const ModelSpec& spec,
                     const PolicyCurve& policy_curve, double t, double s,
                     const SimplexVector& x, double dt = 0.0);

/// grad F(x) . (A*[t, x, u] x).
double koopman_generator(const Observable& F, const ModelSpec& spec, double t,
                         const SimplexVector& x, const StatePolicy& u);

}  // namespace mfg
