#include "mfg/nplayer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <random>

namespace mfg {

int CountState::total() const {
  return std::accumulate(n.begin(), n.end(), 0);
}

Vec CountState::empirical() const {
  const int N = total();
  Vec x(k());
  for (int i = 0; i < k(); ++i) x(i) = static_cast<double>(n[i]) / N;
  return x;
}

std::uint64_t count_space_size(int k, int N) {
  if (k < 1 || N < 0) throw DomainError("count_space_size needs k >= 1, N >= 0");
  // C(N+k-1, k-1) built multiplicatively with an overflow guard.
  unsigned __int128 acc = 1;
  for (int i = 1; i <= k - 1; ++i) {
    acc = acc * static_cast<unsigned __int128>(N + i) / i;
    if (acc > static_cast<unsigned __int128>(UINT64_MAX))
      throw CapacityError("count state space size overflows 64 bits");
  }
  return static_cast<std::uint64_t>(acc);
}

std::uint64_t capacity_cap() {
  if (const char* env = std::getenv("MFG_CAPACITY")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end && *end == '\0' && v > 0) return v;
  }
  return 2'000'000ULL;
}

CountIndexer::CountIndexer(int k, int N) : k_(k), N_(N) {
  if (k < 1 || N < 0) throw DomainError("CountIndexer needs k >= 1, N >= 0");
  size_ = count_space_size(k, N);
  // binom_[n][r] = C(n, r) for n <= N+k-1, r <= k-1.
  binom_.assign(N + k, std::vector<std::uint64_t>(k, 0));
  for (int n = 0; n < N + k; ++n) {
    binom_[n][0] = 1;
    for (int r = 1; r < k && r <= n; ++r)
      binom_[n][r] =
          binom_[n - 1][r - 1] + (n - 1 >= r ? binom_[n - 1][r] : 0);
  }
}

std::uint64_t CountIndexer::compositions(int parts, int total) const {
  // C(total + parts - 1, parts - 1)
  return binom_[total + parts - 1][parts - 1];
}

std::uint64_t CountIndexer::rank(const std::vector<int>& n) const {
  if (static_cast<int>(n.size()) != k_)
    throw DomainError("rank: count state has the wrong dimension");
  std::uint64_t r = 0;
  int remaining = N_;
  for (int pos = k_ - 1; pos >= 1; --pos) {
    int c = n[pos];
    if (c < 0 || c > remaining)
      throw DomainError("rank: counts do not sum to N");
    // States with a smaller last coordinate come first in colex order.
    r += compositions(pos + 1, remaining) - compositions(pos + 1, remaining - c);
    remaining -= c;
  }
  if (n[0] != remaining) throw DomainError("rank: counts do not sum to N");
  return r;
}

CountState CountIndexer::unrank(std::uint64_t idx) const {
  if (idx >= size_) throw DomainError("unrank: index out of range");
  CountState s;
  s.n.assign(k_, 0);
  int remaining = N_;
  for (int pos = k_ - 1; pos >= 1; --pos) {
    std::uint64_t skipped = 0;
    int c = 0;
    for (; c <= remaining; ++c) {
      std::uint64_t block = compositions(pos, remaining - c);
      if (idx < skipped + block) break;
      skipped += block;
    }
    s.n[pos] = c;
    idx -= skipped;
    remaining -= c;
  }
  s.n[0] = remaining;
  return s;
}

std::vector<CountState> enumerate_count_states(int k, int N) {
  if (k < 2 || N < 1)
    throw DomainError("enumerate_count_states needs k >= 2, N >= 1");
  std::uint64_t size = count_space_size(k, N);
  if (size > capacity_cap())
    throw CapacityError("count state space has " + std::to_string(size) +
                        " states, above the cap of " +
                        std::to_string(capacity_cap()) +
                        " (set MFG_CAPACITY to override)");
  std::vector<CountState> out;
  out.reserve(size);
  std::vector<int> current(k, 0);
  // Colex order: the last coordinate varies slowest.
  std::function<void(int, int)> gen = [&](int pos, int remaining) {
    if (pos == 0) {
      current[0] = remaining;
      out.push_back(CountState{current});
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      current[pos] = c;
      gen(pos - 1, remaining - c);
    }
  };
  gen(k - 1, N);
  return out;
}

CountState nearest_count_state(const SimplexVector& x, int N) {
  if (N < 1) throw DomainError("nearest_count_state needs N >= 1");
  const int k = x.k();
  std::vector<int> n(k);
  std::vector<std::pair<double, int>> remainders(k);
  int assigned = 0;
  for (int i = 0; i < k; ++i) {
    double target = std::max(0.0, x[i]) * N;
    n[i] = static_cast<int>(std::floor(target));
    assigned += n[i];
    remainders[i] = {target - n[i], i};
  }
  int leftover = N - assigned;
  // Largest remainders win; ties resolve to the lowest index.
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) {
                     return a.first > b.first;
                   });
  for (int r = 0; leftover > 0; r = (r + 1) % k, --leftover)
    ++n[remainders[r].second];
  return CountState{std::move(n)};
}

namespace {

// Containment check plus exact projection, so every downstream rate uses a
// control that lies in the box exactly.
Mat projected_controls(const ModelSpec& spec, const StatePolicy& policy) {
  if (policy.k() != spec.k || policy.u.cols() != spec.k)
    throw DomainError("policy must assign a k-vector control to each state");
  Mat u(spec.k, spec.k);
  for (int i = 0; i < spec.k; ++i) {
    Vec row = policy.control_at(i);
    if (!spec.control.contains(row))
      throw DomainError("policy control at state " + std::to_string(i + 1) +
                        " lies outside the box U");
    u.row(i) = spec.control.project(row).transpose();
  }
  return u;
}

}  // namespace

EmpiricalGenerator::EmpiricalGenerator(const ModelSpec& spec,
                                       PolicyCurve policy, int N)
    : spec_(&spec),
      policy_(std::move(policy)),
      N_(N),
      indexer_(spec.k, N),
      states_(enumerate_count_states(spec.k, N)) {
  spec.check_structure();
}

void EmpiricalGenerator::rates_with_policy(double t, const StatePolicy& policy,
                                           std::uint64_t idx,
                                           std::vector<JumpRate>& out) const {
  out.clear();
  const CountState& s = states_[idx];
  Vec x = s.empirical();
  Mat u = projected_controls(*spec_, policy);
  std::vector<int> scratch = s.n;
  for (int i = 0; i < spec_->k; ++i) {
    if (s.n[i] == 0) continue;
    for (int j = 0; j < spec_->k; ++j) {
      if (j == i) continue;
      double r = s.n[i] * eval_rate_raw(*spec_, t, i, j, x) * u(i, j);
      if (r == 0.0) continue;
      scratch[i] -= 1;
      scratch[j] += 1;
      std::uint64_t target = indexer_.rank(scratch);
      scratch[i] += 1;
      scratch[j] -= 1;
      out.push_back(JumpRate{target, r, i, j});
    }
  }
}

std::vector<JumpRate> EmpiricalGenerator::rates(double t,
                                                std::uint64_t idx) const {
  std::vector<JumpRate> out;
  rates_with_policy(t, policy_(t), idx, out);
  return out;
}

double apply_empirical_generator(const ModelSpec& spec,
                                 const StatePolicy& policy, double t,
                                 const CountState& n, const Observable& F) {
  const int N = n.total();
  Vec x = n.empirical();
  double fx = F.value(x);
  double acc = 0.0;
  Mat u = projected_controls(spec, policy);
  for (int i = 0; i < spec.k; ++i) {
    if (n.n[i] == 0) continue;
    for (int j = 0; j < spec.k; ++j) {
      if (j == i) continue;
      double r = n.n[i] * eval_rate_raw(spec, t, i, j, x) * u(i, j);
      if (r == 0.0) continue;
      Vec moved = x;
      moved(i) -= 1.0 / N;
      moved(j) += 1.0 / N;
      acc += r * (F.value(moved) - fx);
    }
  }
  return acc;
}

Vec CountDistribution::mean_empirical() const {
  Vec mean = Vec::Zero(k);
  for (size_t idx = 0; idx < p.size(); ++idx)
    if (p[idx] != 0.0) mean += p[idx] * (*states)[idx].empirical();
  return mean;
}

double CountDistribution::expectation(
    const std::function<double(const Vec&)>& f) const {
  double acc = 0.0;
  for (size_t idx = 0; idx < p.size(); ++idx)
    if (p[idx] != 0.0) acc += p[idx] * f((*states)[idx].empirical());
  return acc;
}

namespace {

// Static move structure of the count chain: per state, the admissible
// (i, j, target) triples.  Rates are filled in per stage time.
struct CountChainMoves {
  struct Move {
    int from;
    int to;
    std::uint64_t target;
  };
  std::vector<std::uint32_t> offsets;  // size S+1
  std::vector<Move> moves;
};

CountChainMoves build_moves(const std::vector<CountState>& states,
                            const CountIndexer& indexer, int k) {
  CountChainMoves cm;
  cm.offsets.reserve(states.size() + 1);
  cm.offsets.push_back(0);
  std::vector<int> scratch;
  for (const CountState& s : states) {
    scratch = s.n;
    for (int i = 0; i < k; ++i) {
      if (s.n[i] == 0) continue;
      for (int j = 0; j < k; ++j) {
        if (j == i) continue;
        scratch[i] -= 1;
        scratch[j] += 1;
        cm.moves.push_back(
            CountChainMoves::Move{i, j, indexer.rank(scratch)});
        scratch[i] += 1;
        scratch[j] -= 1;
      }
    }
    cm.offsets.push_back(static_cast<std::uint32_t>(cm.moves.size()));
  }
  return cm;
}

void check_law(const Eigen::VectorXd& p, double t) {
  if (p.minCoeff() < -1e-10)
    throw InstabilityError("law developed a negative probability at t = " +
                           std::to_string(t) + "; use a smaller dt");
  if (std::abs(p.sum() - 1.0) > 1e-9)
    throw InstabilityError("law mass drifted at t = " + std::to_string(t) +
                           "; use a smaller dt");
}

}  // namespace

CountDistribution exact_marginal_law(const ModelSpec& spec,
                                     const PolicyCurve& policy, int N,
                                     const CountState& n0, double t0,
                                     double t1, double dt) {
  spec.check_structure();
  if (n0.k() != spec.k || n0.total() != N)
    throw DomainError("initial counts must sum to N over k states");
  if (dt == 0.0) dt = default_dt(spec);

  auto states = std::make_shared<std::vector<CountState>>(
      enumerate_count_states(spec.k, N));
  CountIndexer indexer(spec.k, N);
  CountChainMoves cm = build_moves(*states, indexer, spec.k);
  const auto S = static_cast<Eigen::Index>(states->size());

  Eigen::VectorXd p = Eigen::VectorXd::Zero(S);
  p(static_cast<Eigen::Index>(indexer.rank(n0.n))) = 1.0;

  std::vector<Vec> empirical(states->size());
  for (size_t idx = 0; idx < states->size(); ++idx)
    empirical[idx] = (*states)[idx].empirical();

  auto rhs = [&](double s, const Eigen::VectorXd& q) -> Eigen::VectorXd {
    Mat u_proj = projected_controls(spec, policy(s));
    Eigen::VectorXd d = Eigen::VectorXd::Zero(S);
    for (Eigen::Index idx = 0; idx < S; ++idx) {
      double mass = q(idx);
      if (mass == 0.0) continue;
      const CountState& st = (*states)[static_cast<size_t>(idx)];
      const Vec& x = empirical[static_cast<size_t>(idx)];
      for (std::uint32_t m = cm.offsets[idx]; m < cm.offsets[idx + 1]; ++m) {
        const auto& mv = cm.moves[m];
        double r = st.n[mv.from] * eval_rate_raw(spec, s, mv.from, mv.to, x) *
                   u_proj(mv.from, mv.to);
        if (r == 0.0) continue;
        double flux = mass * r;
        d(idx) -= flux;
        d(static_cast<Eigen::Index>(mv.target)) += flux;
      }
    }
    return d;
  };

  TimeGrid grid = make_time_grid(t0, t1, dt);
  for (int step = 0; step < grid.steps; ++step) {
    double s = grid.times[step];
    double h = grid.h;
    Eigen::VectorXd k1 = rhs(s, p);
    Eigen::VectorXd k2 = rhs(s + h / 2, p + (h / 2) * k1);
    Eigen::VectorXd k3 = rhs(s + h / 2, p + (h / 2) * k2);
    Eigen::VectorXd k4 = rhs(s + h, p + h * k3);
    p += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
    check_law(p, s + h);
  }

  CountDistribution dist;
  dist.k = spec.k;
  dist.N = N;
  dist.states = states;
  dist.p.assign(p.data(), p.data() + p.size());
  return dist;
}

std::vector<std::pair<double, CountState>> simulate_ctmc(
    const ModelSpec& spec, const PolicyCurve& policy, int N,
    const CountState& n0, double t0, double t1, std::uint64_t seed) {
  spec.check_structure();
  if (n0.k() != spec.k || n0.total() != N)
    throw DomainError("initial counts must sum to N over k states");
  if (t1 < t0) throw DomainError("simulate_ctmc needs t0 <= t1");

  std::vector<std::pair<double, CountState>> traj;
  traj.emplace_back(t0, n0);

  const double majorant =
      N * spec.rates.nu_max * spec.control.max_abs_bound() * (spec.k - 1);
  if (majorant <= 0.0) return traj;

  std::mt19937_64 rng(seed);
  auto unit = [&rng]() {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
  };

  CountState state = n0;
  double t = t0;
  std::vector<double> rates;
  rates.reserve(static_cast<size_t>(spec.k) * spec.k);
  std::vector<std::pair<int, int>> moves;
  moves.reserve(static_cast<size_t>(spec.k) * spec.k);

  while (true) {
    t += -std::log1p(-unit()) / majorant;
    if (t > t1) break;

    Mat u = projected_controls(spec, policy(t));
    Vec x = state.empirical();
    rates.clear();
    moves.clear();
    double total = 0.0;
    for (int i = 0; i < spec.k; ++i) {
      if (state.n[i] == 0) continue;
      for (int j = 0; j < spec.k; ++j) {
        if (j == i) continue;
        double r = state.n[i] * eval_rate_raw(spec, t, i, j, x) * u(i, j);
        if (r <= 0.0) continue;
        rates.push_back(r);
        moves.emplace_back(i, j);
        total += r;
      }
    }
    if (total > majorant * (1.0 + 1e-12))
      throw EvaluationError(
          "total jump rate exceeds the thinning majorant; the declared "
          "nu_max underestimates the kernel");

    double v = unit() * majorant;
    if (v >= total) continue;  // thinned (phantom) event
    double cum = 0.0;
    for (size_t m = 0; m < rates.size(); ++m) {
      cum += rates[m];
      if (v < cum) {
        state.n[moves[m].first] -= 1;
        state.n[moves[m].second] += 1;
        traj.emplace_back(t, state);
        break;
      }
    }
  }
  return traj;
}

double tagged_value(const ModelSpec& spec, const PolicyCurve& common_policy,
                    const PolicyCurve& tagged_policy, int N, int j0,
                    const CountState& n_rest0, double t0, double dt) {
  spec.check_structure();
  if (j0 < 0 || j0 >= spec.k)
    throw DomainError("tagged start state out of range");
  if (n_rest0.k() != spec.k || n_rest0.total() != N - 1)
    throw DomainError("rest counts must sum to N-1 over k states");
  if (dt == 0.0) dt = default_dt(spec);
  const int k = spec.k;

  std::uint64_t rest_size = count_space_size(k, N - 1);
  if (rest_size * k > capacity_cap())
    throw CapacityError("tagged-pair space has " +
                        std::to_string(rest_size * k) +
                        " states, above the cap of " +
                        std::to_string(capacity_cap()) +
                        " (set MFG_CAPACITY to override)");

  std::vector<CountState> rest_states = enumerate_count_states(k, N - 1);
  CountIndexer indexer(k, N - 1);
  CountChainMoves cm = build_moves(rest_states, indexer, k);
  const auto S = static_cast<Eigen::Index>(rest_states.size());

  // Pair index (tag j, rest m) -> j*S + m; the final slot accumulates the
  // expected running cost.
  Eigen::VectorXd p = Eigen::VectorXd::Zero(k * S + 1);
  p(j0 * S + static_cast<Eigen::Index>(indexer.rank(n_rest0.n))) = 1.0;

  std::vector<Vec> rest_empirical(rest_states.size());
  for (size_t idx = 0; idx < rest_states.size(); ++idx)
    rest_empirical[idx] = rest_states[idx].empirical();

  auto rhs = [&](double s, const Eigen::VectorXd& q) -> Eigen::VectorXd {
    Mat u_common = projected_controls(spec, common_policy(s));
    Mat u_tagged = projected_controls(spec, tagged_policy(s));
    Eigen::VectorXd d = Eigen::VectorXd::Zero(k * S + 1);
    Vec x(k);
    for (int tag = 0; tag < k; ++tag) {
      Vec u_tag = u_tagged.row(tag).transpose();
      double penalty = u_tag.squaredNorm();
      for (Eigen::Index m = 0; m < S; ++m) {
        double mass = q(tag * S + m);
        if (mass == 0.0) continue;
        const CountState& rest = rest_states[static_cast<size_t>(m)];
        // Empirical vector over all N players, tagged included.
        x = (rest_empirical[static_cast<size_t>(m)] * (N - 1));
        x(tag) += 1.0;
        x /= N;

        double cost = -penalty;
        for (int l = 0; l < k; ++l) {
          double jc = spec.cost.entry(tag, l).eval(s, x);
          if (!std::isfinite(jc))
            throw EvaluationError("cost coefficient J[" +
                                  std::to_string(tag + 1) + "][" +
                                  std::to_string(l + 1) +
                                  "] is non-finite at t = " +
                                  std::to_string(s));
          cost += jc * u_tag(l);
        }
        d(k * S) += mass * cost;

        for (int j = 0; j < k; ++j) {
          if (j == tag) continue;
          double r = eval_rate_raw(spec, s, tag, j, x) * u_tag(j);
          if (r == 0.0) continue;
          double flux = mass * r;
          d(tag * S + m) -= flux;
          d(j * S + m) += flux;
        }
        for (std::uint32_t mv = cm.offsets[m]; mv < cm.offsets[m + 1]; ++mv) {
          const auto& move = cm.moves[mv];
          double r = rest.n[move.from] *
                     eval_rate_raw(spec, s, move.from, move.to, x) *
                     u_common(move.from, move.to);
          if (r == 0.0) continue;
          double flux = mass * r;
          d(tag * S + m) -= flux;
          d(tag * S + static_cast<Eigen::Index>(move.target)) += flux;
        }
      }
    }
    return d;
  };

  TimeGrid grid = make_time_grid(t0, spec.horizon, dt);
  for (int step = 0; step < grid.steps; ++step) {
    double s = grid.times[step];
    double h = grid.h;
    Eigen::VectorXd k1 = rhs(s, p);
    Eigen::VectorXd k2 = rhs(s + h / 2, p + (h / 2) * k1);
    Eigen::VectorXd k3 = rhs(s + h / 2, p + (h / 2) * k2);
    Eigen::VectorXd k4 = rhs(s + h, p + h * k3);
    p += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
    check_law(p.head(k * S), s + h);
  }

  double value = p(k * S);
  for (int tag = 0; tag < k; ++tag)
    value += spec.terminal(tag) * p.segment(tag * S, S).sum();
  return value;
}

}  // namespace mfg
