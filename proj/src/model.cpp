#include "mfg/model.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace mfg {

namespace {

std::string format_point(const Vec& x) {
  std::string s = "(";
  for (int i = 0; i < x.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", x(i));
    s += buf;
    if (i + 1 < x.size()) s += ", ";
  }
  return s + ")";
}

void compositions(int k, int total, std::vector<int>& partial,
                  std::vector<Vec>& out, int g) {
  if (k == 1) {
    Vec x(static_cast<int>(partial.size()) + 1);
    x(x.size() - 1) = static_cast<double>(total) / g;
    for (size_t i = 0; i < partial.size(); ++i)
      x(static_cast<int>(i)) = static_cast<double>(partial[i]) / g;
    out.push_back(std::move(x));
    return;
  }
  for (int n = 0; n <= total; ++n) {
    partial.push_back(n);
    compositions(k - 1, total - n, partial, out, g);
    partial.pop_back();
  }
}

}  // namespace

SimplexVector::SimplexVector(Vec x) : x_(std::move(x)) {
  if (x_.size() < 1) throw DomainError("simplex vector must be non-empty");
  double sum = 0.0;
  for (int i = 0; i < x_.size(); ++i) {
    if (!std::isfinite(x_(i)))
      throw DomainError("simplex vector has a non-finite entry");
    if (x_(i) < -kSimplexTol)
      throw DomainError("simplex vector entry " + std::to_string(i + 1) +
                        " is negative beyond tolerance: " +
                        std::to_string(x_(i)));
    sum += x_(i);
  }
  if (std::abs(sum - 1.0) > kSimplexTol)
    throw DomainError("simplex vector mass " + std::to_string(sum) +
                      " deviates from 1 beyond tolerance");
}

SimplexVector uniform_law(int k) {
  return SimplexVector(Vec::Constant(k, 1.0 / k));
}

bool ControlSet::contains(const Vec& u, double tol) const {
  if (u.size() != lower.size()) return false;
  for (int i = 0; i < u.size(); ++i)
    if (u(i) < lower(i) - tol || u(i) > upper(i) + tol) return false;
  return true;
}

Vec ControlSet::project(const Vec& u) const {
  return u.cwiseMax(lower).cwiseMin(upper);
}

double ControlSet::max_abs_bound() const {
  return std::max(lower.cwiseAbs().maxCoeff(), upper.cwiseAbs().maxCoeff());
}

RateKernel RateKernel::zero(int k) {
  RateKernel r;
  r.k = k;
  r.off_diagonal.assign(static_cast<size_t>(k) * k, Expression());
  return r;
}

CostSpec CostSpec::zero(int k) {
  CostSpec c;
  c.k = k;
  c.coeff.assign(static_cast<size_t>(k) * k, Expression());
  return c;
}

void ModelSpec::check_structure() const {
  if (k < 2) throw DomainError("model needs k >= 2 states");
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw DomainError("model horizon must be positive and finite");
  if (rates.k != k || cost.k != k)
    throw DomainError("kernel/cost dimension does not match k");
  if (rates.off_diagonal.size() != static_cast<size_t>(k) * k ||
      cost.coeff.size() != static_cast<size_t>(k) * k)
    throw DomainError("kernel/cost entry table has the wrong size");
  if (control.lower.size() != k || control.upper.size() != k)
    throw DomainError("control box must have k components");
  if (terminal.size() != k)
    throw DomainError("terminal cost must have exactly k entries");
  for (int j = 0; j < k; ++j)
    if (!std::isfinite(terminal(j)))
      throw DomainError("terminal cost entry " + std::to_string(j + 1) +
                        " is not finite");
  if (!std::isfinite(rates.nu_max) || rates.nu_max < 0.0)
    throw DomainError("declared rate bound nu_max must be finite and >= 0");
  if (!labels.empty() && labels.size() != static_cast<size_t>(k))
    throw DomainError("labels must name all k states or be absent");
  for (int i = 0; i < k; ++i)
    if (!std::isfinite(control.lower(i)) || !std::isfinite(control.upper(i)))
      throw DomainError("control bounds must be finite");
}

double default_dt(const ModelSpec& spec) { return spec.horizon / 2000.0; }

std::string Violation::describe() const {
  std::ostringstream os;
  os << where << ": " << rule << " at t = " << t << ", x = " << format_point(x)
     << " (value " << value << ")";
  return os.str();
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  if (accepted())
    os << "accepted";
  else
    os << violations.size() << " violation(s)";
  os << "; lipschitz(nu) ~ " << lipschitz_nu << ", lipschitz(J) ~ "
     << lipschitz_cost << ", grid points " << grid_points_used;
  return os.str();
}

std::vector<Vec> simplex_lattice(int k, int subdivisions) {
  if (k < 1 || subdivisions < 1)
    throw DomainError("simplex lattice needs k >= 1 and subdivisions >= 1");
  std::vector<Vec> out;
  std::vector<int> partial;
  compositions(k, subdivisions, partial, out, subdivisions);
  return out;
}

namespace {

struct WorstWitness {
  bool hit = false;
  double t = 0.0;
  Vec x;
  double value = 0.0;

  void offer(double tt, const Vec& xx, double v, bool smaller_is_worse) {
    if (!hit || (smaller_is_worse ? v < value : v > value)) {
      hit = true;
      t = tt;
      x = xx;
      value = v;
    }
  }
};

// Largest coordinate-wise slope seen over the grid; expressions are
// formulas on all of R^k, so the probes may step slightly off the simplex.
double lipschitz_estimate(const Expression& e, const std::vector<Vec>& grid,
                          const std::vector<double>& times) {
  const double h = 1e-5;
  double worst = 0.0;
  for (double t : times) {
    for (const Vec& x : grid) {
      for (int i = 0; i < x.size(); ++i) {
        Vec xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        double fp = e.eval(t, xp);
        double fm = e.eval(t, xm);
        if (!std::isfinite(fp) || !std::isfinite(fm)) continue;
        worst = std::max(worst, std::abs(fp - fm) / (2 * h));
      }
    }
  }
  return worst;
}

}  // namespace

ValidationReport validate_model(const ModelSpec& spec, int grid_points) {
  spec.check_structure();
  if (grid_points < 1) throw DomainError("grid_points must be >= 1");

  ValidationReport report;
  std::vector<Vec> grid = simplex_lattice(spec.k, grid_points);
  report.grid_points_used = static_cast<int>(grid.size());
  const double T = spec.horizon;
  const std::vector<double> times = {0.0, T / 4, T / 2, 3 * T / 4, T};

  auto where_rate = [&](int i, int j) {
    return "rate " + std::to_string(i + 1) + "->" + std::to_string(j + 1);
  };
  auto where_cost = [&](int j, int l) {
    return "cost J[" + std::to_string(j + 1) + "][" + std::to_string(l + 1) +
           "]";
  };

  const double bound_slack = 1e-12 * std::max(1.0, spec.rates.nu_max);

  for (int i = 0; i < spec.k; ++i) {
    for (int j = 0; j < spec.k; ++j) {
      if (i == j) continue;
      WorstWitness nonfinite, negative, unbounded;
      for (double t : times) {
        for (const Vec& x : grid) {
          double v = spec.rates.entry(i, j).eval(t, x);
          if (!std::isfinite(v)) {
            nonfinite.offer(t, x, v, false);
            continue;
          }
          if (v < -kRateClampTol) negative.offer(t, x, v, true);
          if (v > spec.rates.nu_max + bound_slack)
            unbounded.offer(t, x, v, false);
        }
      }
      auto push = [&](const WorstWitness& w, const std::string& rule) {
        if (!w.hit) return;
        Violation viol;
        viol.rule = rule;
        viol.where = where_rate(i, j);
        viol.t = w.t;
        viol.x = w.x;
        viol.value = w.value;
        report.violations.push_back(std::move(viol));
      };
      push(nonfinite, "rate evaluates to a non-finite value");
      push(negative, "rate is negative beyond the clamp tolerance");
      push(unbounded, "rate exceeds the declared bound nu_max = " +
                          std::to_string(spec.rates.nu_max));
    }
  }

  for (int j = 0; j < spec.k; ++j) {
    for (int l = 0; l < spec.k; ++l) {
      WorstWitness nonfinite, negative;
      for (double t : times) {
        for (const Vec& x : grid) {
          double v = spec.cost.entry(j, l).eval(t, x);
          if (!std::isfinite(v)) {
            nonfinite.offer(t, x, v, false);
            continue;
          }
          if (v < -kRateClampTol) negative.offer(t, x, v, true);
        }
      }
      auto push = [&](const WorstWitness& w, const std::string& rule) {
        if (!w.hit) return;
        Violation viol;
        viol.rule = rule;
        viol.where = where_cost(j, l);
        viol.t = w.t;
        viol.x = w.x;
        viol.value = w.value;
        report.violations.push_back(std::move(viol));
      };
      push(nonfinite, "cost coefficient evaluates to a non-finite value");
      push(negative, "cost coefficient is negative (J must map into R+)");
    }
  }

  for (int l = 0; l < spec.k; ++l) {
    if (spec.control.lower(l) > spec.control.upper(l)) {
      Violation viol;
      viol.rule = "control box is empty (lower > upper)";
      viol.where = "control component " + std::to_string(l + 1);
      viol.value = spec.control.lower(l);
      viol.x = Vec::Zero(spec.k);
      report.violations.push_back(std::move(viol));
    }
    if (spec.control.lower(l) < 0.0) {
      Violation viol;
      viol.rule =
          "control lower bound is negative; off-diagonal jump rates scale by "
          "u and must stay nonnegative";
      viol.where = "control component " + std::to_string(l + 1);
      viol.value = spec.control.lower(l);
      viol.x = Vec::Zero(spec.k);
      report.violations.push_back(std::move(viol));
    }
  }

  double lip_nu = 0.0, lip_cost = 0.0;
  for (int i = 0; i < spec.k; ++i)
    for (int j = 0; j < spec.k; ++j) {
      if (i != j)
        lip_nu = std::max(lip_nu,
                          lipschitz_estimate(spec.rates.entry(i, j), grid, times));
      lip_cost = std::max(
          lip_cost, lipschitz_estimate(spec.cost.entry(i, j), grid, times));
    }
  report.lipschitz_nu = lip_nu;
  report.lipschitz_cost = lip_cost;

  report.notes.push_back(
      "generator diagonal is derived as the negative off-diagonal row sum; "
      "kernel diagonal entries are never evaluated");
  report.notes.push_back(
      "Hamiltonian coefficient for the own-state component uses the running "
      "cost J[j][j] only; under the row-sum-zero diagonal the own-state "
      "control does not enter the drift");

  return report;
}

double eval_rate_raw(const ModelSpec& spec, double t, int i, int j,
                     const Vec& x) {
  if (i == j)
    throw DomainError(
        "diagonal rates are derived, never evaluated (asked for i == j)");
  if (i < 0 || i >= spec.k || j < 0 || j >= spec.k)
    throw DomainError("state index out of range in eval_rate");
  const double slack = std::max(1e-9, 1e-12 * spec.horizon);
  if (t < -slack || t > spec.horizon + slack)
    throw DomainError("time " + std::to_string(t) +
                      " outside [0, T] in eval_rate");
  double v = spec.rates.entry(i, j).eval(t, x);
  if (!std::isfinite(v))
    throw EvaluationError("rate " + std::to_string(i + 1) + "->" +
                          std::to_string(j + 1) +
                          " evaluates to a non-finite value at t = " +
                          std::to_string(t) + ", x = " + format_point(x));
  if (v < 0.0) {
    if (v >= -kRateClampTol) return 0.0;
    throw EvaluationError("rate " + std::to_string(i + 1) + "->" +
                          std::to_string(j + 1) + " is negative (" +
                          std::to_string(v) + ") beyond tolerance at t = " +
                          std::to_string(t) + ", x = " + format_point(x));
  }
  return v;
}

double eval_rate(const ModelSpec& spec, double t, int i, int j,
                 const SimplexVector& x) {
  return eval_rate_raw(spec, t, i, j, x.coords());
}

double eval_running_cost(const ModelSpec& spec, double t, int j,
                         const SimplexVector& x, const Vec& u) {
  if (j < 0 || j >= spec.k) throw DomainError("state index out of range");
  if (u.size() != spec.k)
    throw DomainError("control vector must have k components");
  if (!spec.control.contains(u))
    throw DomainError("control lies outside the box U beyond tolerance");
  double s = 0.0;
  for (int l = 0; l < spec.k; ++l) {
    double c = spec.cost.entry(j, l).eval(t, x.coords());
    if (!std::isfinite(c))
      throw EvaluationError("cost coefficient J[" + std::to_string(j + 1) +
                            "][" + std::to_string(l + 1) +
                            "] is non-finite at t = " + std::to_string(t));
    s += c * u(l);
  }
  return s - u.squaredNorm();
}

}  // namespace mfg
