#include "mfg/mfg_solver.hpp"

#include <cmath>

namespace mfg {

namespace {

double sup_l1_distance(const Flow& a, const Flow& b) {
  double worst = 0.0;
  for (int m = 0; m < a.size(); ++m)
    worst = std::max(
        worst,
        (a.state(m).coords() - b.state(m).coords()).cwiseAbs().sum());
  return worst;
}

Flow constant_flow(const std::vector<double>& times, const SimplexVector& x0) {
  std::vector<SimplexVector> states(times.size(), x0);
  return Flow(times, std::move(states), "initial-guess");
}

}  // namespace

Equilibrium solve_mfg(const ModelSpec& spec, const SimplexVector& x0,
                      double tol, int max_iter, double damping, double dt) {
  spec.check_structure();
  if (!(tol > 0.0)) throw DomainError("solve_mfg needs tol > 0");
  if (max_iter < 1) throw DomainError("solve_mfg needs max_iter >= 1");
  if (!(damping > 0.0) || damping > 1.0)
    throw DomainError("solve_mfg needs damping in (0, 1]");
  if (dt == 0.0) dt = default_dt(spec);

  TimeGrid grid = make_time_grid(0.0, spec.horizon, dt);
  Flow current = constant_flow(grid.times, x0);

  std::vector<double> history;
  for (int iter = 1; iter <= max_iter; ++iter) {
    auto [value, policy] = solve_hjb(spec, current, dt);
    Flow forward = solve_kinetic(spec, policy.curve(), x0, 0.0, spec.horizon,
                                 dt, "mfg-iterate-" + std::to_string(iter));
    double residual = damping * sup_l1_distance(forward, current);
    history.push_back(residual);

    if (residual <= tol) {
      return Equilibrium{std::move(forward), std::move(value),
                         std::move(policy), std::move(history),
                         iter,           true,
                         tol,            damping,
                         dt};
    }
    if (iter == max_iter) {
      return Equilibrium{std::move(forward), std::move(value),
                         std::move(policy), std::move(history),
                         iter,           false,
                         tol,            damping,
                         dt};
    }

    std::vector<SimplexVector> blended;
    blended.reserve(grid.times.size());
    for (int m = 0; m < current.size(); ++m)
      blended.emplace_back(Vec((1.0 - damping) * current.state(m).coords() +
                               damping * forward.state(m).coords()));
    current = Flow(grid.times, std::move(blended),
                   "mfg-blend-" + std::to_string(iter));
  }
  throw DomainError("unreachable");  // loop always returns
}

double consistency_residual(const ModelSpec& spec, const Equilibrium& eq) {
  Flow replay =
      solve_kinetic(spec, eq.policy.curve(), eq.flow.state(0), eq.flow.t0(),
                    eq.flow.t1(), eq.dt, "consistency-replay");
  if (replay.size() != eq.flow.size())
    throw DomainError("replayed flow is not grid-aligned with the equilibrium");
  double worst = 0.0;
  for (int m = 0; m < replay.size(); ++m)
    worst = std::max(worst, (replay.state(m).coords() -
                             eq.flow.state(m).coords())
                                .cwiseAbs()
                                .sum());
  return worst;
}

}  // namespace mfg
