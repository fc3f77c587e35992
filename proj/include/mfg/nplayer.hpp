#pragma once

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "mfg/kinetic.hpp"

namespace mfg {

/// Occupation counts of N exchangeable players over k states.
struct CountState {
  std::vector<int> n;

  int k() const { return static_cast<int>(n.size()); }
  int total() const;
  Vec empirical() const;  // n / N

  bool operator==(const CountState& other) const { return n == other.n; }
};

/// C(N+k-1, k-1) with an overflow guard.
std::uint64_t count_space_size(int k, int N);

/// State cap for exact enumeration; MFG_CAPACITY overrides the default of
/// 2e6.
std::uint64_t capacity_cap();

/// O(k) colexicographic rank/unrank via the combinatorial number system.
class CountIndexer {
 public:
  CountIndexer(int k, int N);

  std::uint64_t size() const { return size_; }
  std::uint64_t rank(const std::vector<int>& n) const;
  CountState unrank(std::uint64_t idx) const;

 private:
  std::uint64_t compositions(int parts, int total) const;
  int k_;
  int N_;
  std::uint64_t size_;
  std::vector<std::vector<std::uint64_t>> binom_;
};

/// All compositions of N into k parts in colexicographic order.
/// Throws CapacityError beyond the configured cap.
std::vector<CountState> enumerate_count_states(int k, int N);

/// The composition nearest to N*x by largest-remainder rounding, so that
/// |n/N - x|_1 <= k/N.
CountState nearest_count_state(const SimplexVector& x, int N);

struct JumpRate {
  std::uint64_t target;
  double rate;
  int from_state;
  int to_state;
};

/// Generator of the exchangeable N-player process on count states:
/// n -> n - e_i + e_j at rate n_i nu_j(t, i, n/N) u(i)_j.  A deviating
/// player is not representable on pure count states; that variant is
/// exposed through the tagged-pair construction (tagged_value).
class EmpiricalGenerator {
 public:
  EmpiricalGenerator(const ModelSpec& spec, PolicyCurve policy, int N);

  const std::vector<CountState>& states() const { return states_; }
  const CountIndexer& indexer() const { return indexer_; }
  int player_count() const { return N_; }

  std::vector<JumpRate> rates(double t, std::uint64_t idx) const;
  void rates_with_policy(double t, const StatePolicy& policy,
                         std::uint64_t idx, std::vector<JumpRate>& out) const;

 private:
  const ModelSpec* spec_;  // must outlive the generator
  PolicyCurve policy_;
  int N_;
  CountIndexer indexer_;
  std::vector<CountState> states_;
};

/// (A^N F)(n/N): the finite-difference jump sum of the empirical generator
/// applied to an observable at one count state.
double apply_empirical_generator(const ModelSpec& spec,
                                 const StatePolicy& policy, double t,
                                 const CountState& n, const Observable& F);

/// Law of the count-state process at one time.
struct CountDistribution {
  int k = 0;
  int N = 0;
  std::shared_ptr<const std::vector<CountState>> states;
  std::vector<double> p;

  Vec mean_empirical() const;
  double expectation(const std::function<double(const Vec&)>& f) const;
};

/// Integrates the forward equation dp/ds = p Q_N(s) on the enumerated
/// space (sparse, 4th-order fixed step) and returns the law at t1.
CountDistribution exact_marginal_law(const ModelSpec& spec,
                                     const PolicyCurve& policy, int N,
                                     const CountState& n0, double t0,
                                     double t1, double dt);

/// Exact-in-law trajectory by thinning against the homogeneous majorant
/// Lambda = N nu_max u_max (k-1).  Identical seeds give identical
/// trajectories.  The initial point is always recorded.
std::vector<std::pair<double, CountState>> simulate_ctmc(
    const ModelSpec& spec, const PolicyCurve& policy, int N,
    const CountState& n0, double t0, double t1, std::uint64_t seed);

/// Expected payoff of one tagged player (possibly deviating) among N:
/// integrates the joint law of (tagged state, counts of the other N-1)
/// and accumulates E[int J(s, tagged, x^N, u~) ds] + E[V^T(tagged_T)].
/// The empirical vector fed to rates and costs includes the tagged player.
double tagged_value(const ModelSpec& spec, const PolicyCurve& common_policy,
                    const PolicyCurve& tagged_policy, int N, int j0,
                    const CountState& n_rest0, double t0, double dt);

}  // namespace mfg
