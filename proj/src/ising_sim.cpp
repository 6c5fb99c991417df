#include "lacelab/ising_sim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <thread>

#include "lacelab/philox.hpp"

namespace lacelab {

void SpinGraph::finish() {
  adj.assign(n, {});
  for (const auto& c : couplings) {
    if (c.u < 0 || c.v < 0 || c.u >= n || c.v >= n || c.u == c.v) throw Error("coupling endpoints invalid");
    if (c.weight < 0) throw Error("couplings must be ferromagnetic (J >= 0)");
    adj[c.u].emplace_back(c.v, c.weight);
    adj[c.v].emplace_back(c.u, c.weight);
  }
}

SpinGraph SpinGraph::custom(int n, const std::vector<WeightedPair>& couplings) {
  if (n < 1) throw Error("n must be >= 1");
  SpinGraph g;
  g.n = n;
  g.couplings = couplings;
  g.finish();
  return g;
}

SpinGraph SpinGraph::on_torus(const CouplingTable& J, int M, double R) {
  for (const auto& [x, v] : J.entries)
    if (v < 0) throw Error("couplings must be ferromagnetic (J >= 0)");
  SpinGraph g;
  SmallTorus t(J.d, M);
  if (t.n_sites > (1 << 24)) throw Error("spin graph too large");
  g.torus = t;
  g.n = static_cast<int>(t.n_sites);
  g.R = R;
  g.couplings = torus_pairs(t, J.entries, R);
  g.finish();
  return g;
}

double SpinGraph::coupling_sum_at_origin() const {
  double s = 0;
  for (auto [v, J] : adj[0]) s += J;
  return s;
}

nlohmann::json SpinGraph::to_json() const {
  nlohmann::json j{{"spins", n}, {"couplings", couplings.size()}, {"R", R},
                   {"coupling_sum_at_origin", coupling_sum_at_origin()}};
  if (torus) j["torus"] = {{"d", torus->d}, {"M", torus->M}};
  return j;
}

CouplingTail coupling_tail(const CouplingTable& J, double z, double R) {
  CouplingTail t;
  for (const auto& [x, v] : J.entries) {
    double r2 = 0;
    for (int c : x) r2 += double(c) * c;
    const double th = std::tanh(z * v);
    t.tau += th;
    if (std::sqrt(r2) > R + 1e-12) t.tail += th;
  }
  return t;
}

// ---------------------------------------------------------------------------

SpinSample exact_ising(const SpinGraph& g, double z, double h) {
  const int n = g.n;
  if (n > kMaxExactSpins) throw Error("exact enumeration limited to " + std::to_string(kMaxExactSpins) + " spins");
  const std::uint32_t N = std::uint32_t{1} << n;
  const bool want_pairs = double(n) * n * N <= 5e8;

  // Gray code over spins 1..n-1 with phi_0 = +1; each state is paired with its
  // global flip, which has the same coupling energy and magnetization -m.
  // The pairing makes M(z,0) = 0 exactly.
  const std::uint32_t half = N >> 1;
  std::vector<double> eplus(half), eminus(half);
  std::vector<std::uint32_t> state(half);
  std::vector<int> phi(n, 1);
  double E = 0;
  for (const auto& c : g.couplings) E += c.weight;
  int m = n;
  std::uint32_t code = 0;
  for (std::uint32_t k = 0; k < half; ++k) {
    if (k > 0) {
      const int i = std::countr_zero(k) + 1;
      double local = 0;
      for (auto [j, J] : g.adj[i]) local += J * phi[j];
      E -= 2.0 * phi[i] * local;
      m -= 2 * phi[i];
      phi[i] = -phi[i];
      code ^= 1u << i;
    }
    eplus[k] = z * E + h * m;
    eminus[k] = z * E - h * m;
    state[k] = code;  // bit set = spin down
  }
  const double top = std::max(*std::max_element(eplus.begin(), eplus.end()),
                              *std::max_element(eminus.begin(), eminus.end()));

  long double Z = 0, m1 = 0, m2 = 0;
  std::vector<long double> corr(n, 0), mag(n, 0);
  std::vector<std::vector<long double>> pair;
  if (want_pairs) pair.assign(n, std::vector<long double>(n, 0));
  for (std::uint32_t k = 0; k < half; ++k) {
    const long double wp = std::exp(static_cast<long double>(eplus[k] - top));
    const long double wm = std::exp(static_cast<long double>(eminus[k] - top));
    const long double sum = wp + wm, diff = wp - wm;
    const std::uint32_t s = state[k];
    Z += sum;
    const int mm = n - 2 * std::popcount(s);
    m1 += diff * mm;
    m2 += sum * static_cast<long double>(mm) * mm;
    for (int x = 0; x < n; ++x) {
      const int sx = ((s >> x) & 1) ? -1 : 1;
      corr[x] += sum * sx;
      mag[x] += diff * sx;
    }
    if (want_pairs) {
      for (int x = 0; x < n; ++x)
        for (int y = x; y < n; ++y) pair[x][y] += (((s >> x) ^ (s >> y)) & 1) ? -sum : sum;
    }
  }

  SpinSample r;
  r.exact = true;
  r.G.resize(n);
  r.G_se.assign(n, 0.0);
  for (int x = 0; x < n; ++x) r.G[x] = static_cast<double>(corr[x] / Z);
  r.chi = std::accumulate(r.G.begin(), r.G.end(), 0.0);
  const long double mean_m = m1 / Z;
  r.chi_var = static_cast<double>((m2 / Z - mean_m * mean_m) / n);
  r.M = g.torus ? static_cast<double>(mean_m / n) : static_cast<double>(mag[0] / Z);
  if (want_pairs) {
    r.pair.assign(n, std::vector<double>(n));
    for (int x = 0; x < n; ++x)
      for (int y = x; y < n; ++y) r.pair[x][y] = r.pair[y][x] = static_cast<double>(pair[x][y] / Z);
  }
  return r;
}

// ---------------------------------------------------------------------------

SpinSample metropolis(const SpinGraph& g, const MetropolisConfig& cfg) {
  if (cfg.replicas < 2) throw Error("replicas must be >= 2 for batch-means errors");
  if (cfg.sweeps < 2 || cfg.burn_in < 0 || cfg.thinning < 1) throw Error("invalid sweep parameters");
  if (cfg.z < 0) throw Error("z must be >= 0");
  const int n = g.n;
  // translation averaging costs n^2 per measurement; large tori use the origin row
  const bool averaged = g.torus.has_value() && n <= 1024;

  struct Acc {
    std::vector<double> G;
    double m = 0, m2 = 0, phi0 = 0;
    double chi_first = 0, chi_second = 0;  // halves of the run, for the stationarity check
    int count = 0, first = 0;
  };
  std::vector<Acc> acc(cfg.replicas);

  auto run = [&](int r) {
    PhiloxStream rng(cfg.seed, static_cast<std::uint32_t>(r), 0x6973696eu);
    std::vector<int> phi(n);
    for (auto& s : phi) s = rng.uniform() < 0.5 ? -1 : 1;
    Acc& a = acc[r];
    a.G.assign(n, 0.0);
    std::vector<double> row(n);
    const int total = cfg.burn_in + cfg.sweeps;
    for (int sweep = 0; sweep < total; ++sweep) {
      // random scan: a fixed visiting order with always-accepted zero-cost flips can lock
      // a replica into a deterministic cycle (the 4-cycle at h = 0 does)
      for (int step = 0; step < n; ++step) {
        const int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        double local = 0;
        for (auto [j, J] : g.adj[i]) local += J * phi[j];
        const double delta = -2.0 * phi[i] * (cfg.z * local + cfg.h);
        if (delta >= 0 || rng.uniform() < std::exp(delta)) phi[i] = -phi[i];
      }
      if (sweep < cfg.burn_in || (sweep - cfg.burn_in) % cfg.thinning != 0) continue;
      int m = 0;
      for (int s : phi) m += s;
      if (averaged) {
        const SmallTorus& t = *g.torus;
        std::fill(row.begin(), row.end(), 0.0);
        for (int y = 0; y < n; ++y)
          for (int x = 0; x < n; ++x) row[t.sub(x, y)] += phi[y] * phi[x];
        for (int x = 0; x < n; ++x) a.G[x] += row[x] / n;
      } else {
        for (int x = 0; x < n; ++x) a.G[x] += phi[0] * phi[x];
      }
      a.m += m;
      a.m2 += double(m) * m;
      a.phi0 += phi[0];
      const double chi_now = averaged ? double(m) * m / n : [&] {
        double c = 0;
        for (int x = 0; x < n; ++x) c += phi[0] * phi[x];
        return c;
      }();
      if (a.count < (cfg.sweeps / cfg.thinning) / 2) {
        a.chi_first += chi_now;
        ++a.first;
      } else {
        a.chi_second += chi_now;
      }
      ++a.count;
    }
  };
  int T = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::thread::hardware_concurrency());
  T = std::clamp(T, 1, cfg.replicas);
  std::vector<std::thread> pool;
  for (int t = 0; t < T; ++t)
    pool.emplace_back([&, t] {
      for (int r = t; r < cfg.replicas; r += T) run(r);
    });
  for (auto& th : pool) th.join();

  // batch means: one batch per replica, merged in replica order
  auto stats = [&](auto value, double& mean, double& se) {
    std::vector<double> v;
    for (const auto& a : acc) v.push_back(value(a));
    mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    se = std::sqrt(ss / (v.size() - 1) / v.size());
  };
  SpinSample s;
  s.G.resize(n);
  s.G_se.resize(n);
  for (int x = 0; x < n; ++x) stats([&](const Acc& a) { return a.G[x] / a.count; }, s.G[x], s.G_se[x]);
  stats(
      [&](const Acc& a) {
        double c = 0;
        for (double v : a.G) c += v;
        return c / a.count;
      },
      s.chi, s.chi_se);
  stats(
      [&](const Acc& a) {
        const double mm = a.m / a.count;
        return (a.m2 / a.count - mm * mm) / n;
      },
      s.chi_var, s.chi_var_se);
  stats([&](const Acc& a) { return averaged ? a.m / a.count / n : a.phi0 / a.count; }, s.M, s.M_se);

  double d1, se1, d2, se2;
  stats([&](const Acc& a) { return a.chi_first / std::max(a.first, 1); }, d1, se1);
  stats([&](const Acc& a) { return a.chi_second / std::max(a.count - a.first, 1); }, d2, se2);
  if (std::abs(d1 - d2) > 4 * std::hypot(se1, se2) + 1e-12)
    s.warnings.push_back("non-equilibration: first and second half of the runs disagree by more than 4 sigma");
  return s;
}

bool within_sigma(const SpinSample& mc, const SpinSample& ex, double k) {
  auto ok = [&](double est, double se, double truth) { return std::abs(est - truth) <= k * se + 1e-12; };
  return ok(mc.chi, mc.chi_se, ex.chi) && ok(mc.M, mc.M_se, ex.M);
}

nlohmann::json SpinSample::to_json() const {
  return {{"G", G},
          {"G_se", G_se},
          {"chi", chi},
          {"chi_se", chi_se},
          {"chi_variance_form", chi_var},
          {"chi_variance_form_se", chi_var_se},
          {"M", M},
          {"M_se", M_se},
          {"exact", exact},
          {"uncertainty", exact ? "exact enumeration" : "batch-means standard error over replicas"},
          {"warnings", warnings}};
}

// ---------------------------------------------------------------------------

SingleStepReport single_step_check(const SpinGraph& g, double z, const SpinSample& s, double slack) {
  const int n = g.n;
  auto G = [&](int y, int x) -> double {
    if (!s.pair.empty()) return s.pair[y][x];
    if (g.torus) return s.G[g.torus->sub(x, y)];
    throw Error("single-step check needs the pair matrix or a torus graph");
  };
  SingleStepReport r;
  r.lhs.resize(n);
  r.rhs.assign(n, 0.0);
  r.max_violation = -std::numeric_limits<double>::infinity();
  for (int x = 0; x < n; ++x) {
    r.lhs[x] = G(0, x) - (x == 0 ? 1.0 : 0.0);
    for (auto [y, J] : g.adj[0]) r.rhs[x] += std::tanh(z * J) * G(y, x);
    r.max_violation = std::max(r.max_violation, r.lhs[x] - r.rhs[x]);
  }
  r.holds = r.max_violation <= slack;
  return r;
}

nlohmann::json SingleStepReport::to_json() const {
  return {{"lhs", lhs}, {"rhs", rhs}, {"max_violation", max_violation}, {"holds", holds}};
}

}  // namespace lacelab
