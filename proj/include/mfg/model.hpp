#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "mfg/errors.hpp"
#include "mfg/expr.hpp"

namespace mfg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kSimplexTol = 1e-9;   // entry and mass tolerance
inline constexpr double kRateClampTol = 1e-9; // negative-rate clamp
inline constexpr double kControlTol = 1e-9;   // box membership tolerance

/// A point of the probability simplex in R^k.  Entries may undershoot zero
/// by at most kSimplexTol and the mass may drift from one by the same.
class SimplexVector {
 public:
  explicit SimplexVector(Vec x);

  const Vec& coords() const { return x_; }
  int k() const { return static_cast<int>(x_.size()); }
  double operator[](int i) const { return x_(i); }

 private:
  Vec x_;
};

SimplexVector uniform_law(int k);

/// Coordinate box U = prod [lower_l, upper_l].
struct ControlSet {
  Vec lower;
  Vec upper;

  int k() const { return static_cast<int>(lower.size()); }
  bool contains(const Vec& u, double tol = kControlTol) const;
  Vec project(const Vec& u) const;
  Vec midpoint() const { return 0.5 * (lower + upper); }
  /// Largest |u| any admissible control can take in a component.
  double max_abs_bound() const;
};

/// Off-diagonal jump intensities nu_j(t, i, x).  The diagonal is never
/// stored or evaluated; generators derive it from the row-sum-zero rule.
struct RateKernel {
  int k = 0;
  double nu_max = 0.0;  // declared uniform bound on every entry
  std::vector<Expression> off_diagonal;  // slot i*k + j, i != j

  const Expression& entry(int i, int j) const { return off_diagonal[i * k + j]; }
  Expression& entry(int i, int j) { return off_diagonal[i * k + j]; }
  static RateKernel zero(int k);
};

/// Running-cost coefficients J_{j,l}(t, x); the quadratic penalty -|u|^2
/// is structural and not stored.
struct CostSpec {
  int k = 0;
  std::vector<Expression> coeff;  // slot j*k + l

  const Expression& entry(int j, int l) const { return coeff[j * k + l]; }
  Expression& entry(int j, int l) { return coeff[j * k + l]; }
  static CostSpec zero(int k);
};

struct ModelSpec {
  int k = 0;
  double horizon = 0.0;
  RateKernel rates;
  ControlSet control;
  CostSpec cost;
  Vec terminal;                     // V^T(j)
  std::vector<std::string> labels;  // empty or size k

  /// Structural completeness: k >= 2, horizon > 0, consistent sizes,
  /// finite terminal costs.  Throws DomainError.
  void check_structure() const;
};

/// Step size used when an operation accepts dt = 0 ("auto").
double default_dt(const ModelSpec& spec);

struct Violation {
  std::string rule;   // which invariant failed
  std::string where;  // entry, e.g. "rate 1->2" (1-based as in model files)
  double t = 0.0;
  Vec x;              // witness point
  double value = 0.0;
  std::string describe() const;
};

struct ValidationReport {
  std::vector<Violation> violations;
  double lipschitz_nu = 0.0;    // finite-difference estimate in x
  double lipschitz_cost = 0.0;  // same for the cost coefficients
  int grid_points_used = 0;
  std::vector<std::string> notes;

  bool accepted() const { return violations.empty(); }
  std::string summary() const;
};

/// Samples the machine-checkable parts of Hypotheses A and B on a uniform
/// simplex lattice with `grid_points` subdivisions (vertices included) at
/// times {0, T/4, T/2, 3T/4, T}.  A sampling check, not a proof.
ValidationReport validate_model(const ModelSpec& spec, int grid_points);

/// nu_j(t, i, x); values in [-kRateClampTol, 0) clamp to 0.
double eval_rate(const ModelSpec& spec, double t, int i, int j,
                 const SimplexVector& x);

/// Same without the simplex check on x, for integrator stage points that
/// sit within roundoff of the simplex.
double eval_rate_raw(const ModelSpec& spec, double t, int i, int j,
                     const Vec& x);

/// sum_l J_{j,l}(t,x) u_l - |u|^2.  Throws DomainError if u leaves the box
/// by more than kControlTol.
double eval_running_cost(const ModelSpec& spec, double t, int j,
                         const SimplexVector& x, const Vec& u);

/// All points n/g with n a composition of g into k parts (the uniform
/// simplex lattice, vertices included).
std::vector<Vec> simplex_lattice(int k, int subdivisions);

}  // namespace mfg
