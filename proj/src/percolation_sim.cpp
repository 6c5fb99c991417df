#include "lacelab/percolation_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "lacelab/philox.hpp"

namespace lacelab {

namespace {

struct Dsu {
  std::vector<int> parent;
  explicit Dsu(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

bool bond_open(const Bond& b, int id, const Philox4x32::Key& key, std::uint32_t replica, std::uint32_t sample) {
  if (b.p >= 1) return true;
  if (b.p <= 0) return false;
  const Philox4x32::Counter c{sample, replica, static_cast<std::uint32_t>(id), 0x70657263u};
  return Philox4x32::uniform(c, key) < b.p;
}

int worker_count(int requested, int jobs) {
  int t = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  return std::clamp(t, 1, std::max(1, jobs));
}

// probability of a configuration mask, split into two half tables
struct ConfigWeights {
  int h = 0;
  std::vector<double> lo, hi;
  ConfigWeights(const std::vector<double>& p, int skip = -1) {
    const int B = static_cast<int>(p.size());
    h = B / 2;
    auto build = [&](int from, int to) {
      std::vector<double> t(std::size_t{1} << (to - from), 1.0);
      for (std::size_t m = 0; m < t.size(); ++m)
        for (int b = from; b < to; ++b) {
          if (b == skip) continue;
          t[m] *= (m >> (b - from)) & 1 ? p[b] : 1 - p[b];
        }
      return t;
    };
    lo = build(0, h);
    hi = build(h, B);
  }
  double operator()(std::uint32_t m) const { return lo[m & ((1u << h) - 1)] * hi[m >> h]; }
};

std::vector<int> origin_sizes(const BondGraph& g) {
  const int B = static_cast<int>(g.bonds.size());
  std::vector<int> S(std::size_t{1} << B);
  Dsu dsu(g.n_sites);
  for (std::uint32_t m = 0; m < S.size(); ++m) {
    std::iota(dsu.parent.begin(), dsu.parent.end(), 0);
    for (int b = 0; b < B; ++b)
      if ((m >> b) & 1) dsu.unite(g.bonds[b].u, g.bonds[b].v);
    int s = 0;
    for (int x = 0; x < g.n_sites; ++x) s += dsu.find(x) == 0;
    S[m] = s;
  }
  return S;
}

double exact_chi(const BondGraph& g) {
  std::vector<double> p;
  for (const auto& b : g.bonds) p.push_back(b.p);
  ConfigWeights w(p);
  auto S = origin_sizes(g);
  double chi = 0;
  for (std::uint32_t m = 0; m < S.size(); ++m) chi += w(m) * S[m];
  return chi;
}

double slope(const Bond& b, double z) { return z * b.weight < 1 ? b.weight : 0.0; }

}  // namespace

// ---------------------------------------------------------------------------

void BondGraph::finish() {
  if (z < 0) throw Error("z must be >= 0");
  adj.assign(n_sites, {});
  clipped = false;
  int n_clipped = 0;
  origin_weight = 0;
  for (std::size_t i = 0; i < bonds.size(); ++i) {
    auto& b = bonds[i];
    if (b.u < 0 || b.v < 0 || b.u >= n_sites || b.v >= n_sites || b.u == b.v) throw Error("bond endpoints invalid");
    if (b.weight < 0) throw Error("bond weight must be >= 0");
    b.p = z * b.weight;
    if (b.p > 1) {
      b.p = 1;
      ++n_clipped;
    }
    adj[b.u].emplace_back(b.v, static_cast<int>(i));
    adj[b.v].emplace_back(b.u, static_cast<int>(i));
    if (b.u == 0 || b.v == 0) origin_weight += b.weight;
  }
  warnings.clear();
  if (n_clipped > 0) {
    clipped = true;
    warnings.push_back("occupation probability clipped at 1 on " + std::to_string(n_clipped) + " bonds (z * D_M > 1)");
  }
}

BondGraph BondGraph::on_torus(const StepDistribution& dist, int M, double z, double R) {
  BondGraph g;
  SmallTorus t(dist.dim(), M);
  g.torus = t;
  g.n_sites = static_cast<int>(t.n_sites);
  g.z = z;
  g.R = R;
  for (const auto& pr : torus_pairs(t, kernel_of(dist), R)) g.bonds.push_back({pr.u, pr.v, pr.weight, 0});
  g.e_R = tail_beyond(dist, R);
  g.finish();
  if (z > 1.0 / dist.sup_norm() * (1 + 1e-12))
    g.warnings.push_back("z exceeds 1/sup D");
  return g;
}

BondGraph BondGraph::custom(int n_sites, const std::vector<WeightedPair>& pairs, double z) {
  if (n_sites < 1) throw Error("n_sites must be >= 1");
  BondGraph g;
  g.n_sites = n_sites;
  g.z = z;
  for (const auto& pr : pairs) g.bonds.push_back({pr.u, pr.v, pr.weight, 0});
  g.finish();
  return g;
}

BondGraph BondGraph::at(double z_new) const {
  BondGraph g = *this;
  g.z = z_new;
  g.finish();
  return g;
}

nlohmann::json BondGraph::to_json() const {
  nlohmann::json j{{"sites", n_sites}, {"bonds", bonds.size()}, {"z", z}, {"R", R},   {"e_R", e_R},
                   {"origin_weight", origin_weight}, {"clipped", clipped}, {"warnings", warnings}};
  if (torus) j["torus"] = {{"d", torus->d}, {"M", torus->M}};
  return j;
}

// ---------------------------------------------------------------------------

std::vector<int> reveal_cluster_lazy(const BondGraph& g, std::uint64_t seed, std::uint32_t replica,
                                     std::uint32_t sample) {
  const auto key = Philox4x32::key_from_seed(seed);
  std::vector<char> reached(g.n_sites, 0);
  std::vector<int> queue{0};
  reached[0] = 1;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int u = queue[head];
    for (auto [v, id] : g.adj[u]) {
      if (reached[v]) continue;
      if (bond_open(g.bonds[id], id, key, replica, sample)) {
        reached[v] = 1;
        queue.push_back(v);
      }
    }
  }
  if (queue.size() > static_cast<std::size_t>(g.n_sites)) throw Error("cluster larger than the graph");
  std::sort(queue.begin(), queue.end());
  return queue;
}

std::vector<int> reveal_cluster_full(const BondGraph& g, std::uint64_t seed, std::uint32_t replica,
                                     std::uint32_t sample) {
  const auto key = Philox4x32::key_from_seed(seed);
  Dsu dsu(g.n_sites);
  for (std::size_t i = 0; i < g.bonds.size(); ++i)
    if (bond_open(g.bonds[i], static_cast<int>(i), key, replica, sample)) dsu.unite(g.bonds[i].u, g.bonds[i].v);
  std::vector<int> c;
  for (int x = 0; x < g.n_sites; ++x)
    if (dsu.find(x) == 0) c.push_back(x);
  return c;
}

ClusterStats sample_cluster(const BondGraph& g, const PercConfig& cfg) {
  if (cfg.replicas < 2) throw Error("replicas must be >= 2 for batch-means errors");
  if (cfg.samples_per_replica < 1) throw Error("samples_per_replica must be >= 1");
  const double cutoff = std::sqrt(static_cast<double>(g.n_sites));

  struct Acc {
    std::map<int, std::int64_t> hist;
    std::vector<std::int64_t> conn;
    double size_sum = 0;
    std::int64_t big = 0;
  };
  std::vector<Acc> acc(cfg.replicas);
  auto run = [&](int r) {
    Acc& a = acc[r];
    a.conn.assign(g.n_sites, 0);
    for (int s = 0; s < cfg.samples_per_replica; ++s) {
      auto c = reveal_cluster_lazy(g, cfg.seed, static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(s));
      const int n = static_cast<int>(c.size());
      ++a.hist[n];
      for (int x : c) ++a.conn[x];
      a.size_sum += n;
      a.big += n > cutoff;
    }
  };
  const int T = worker_count(cfg.threads, cfg.replicas);
  std::vector<std::thread> pool;
  for (int t = 0; t < T; ++t)
    pool.emplace_back([&, t] {
      for (int r = t; r < cfg.replicas; r += T) run(r);
    });
  for (auto& th : pool) th.join();

  ClusterStats st;
  st.replicas = cfg.replicas;
  st.samples = std::int64_t{cfg.replicas} * cfg.samples_per_replica;
  st.theta_cutoff = cutoff;
  st.connectivity.assign(g.n_sites, 0.0);
  std::vector<double> means, thetas;
  for (const auto& a : acc) {
    for (auto [k, c] : a.hist) st.histogram[k] += c;
    for (int x = 0; x < g.n_sites; ++x) st.connectivity[x] += a.conn[x];
    means.push_back(a.size_sum / cfg.samples_per_replica);
    thetas.push_back(static_cast<double>(a.big) / cfg.samples_per_replica);
  }
  for (auto& v : st.connectivity) v /= static_cast<double>(st.samples);
  auto mean_se = [&](const std::vector<double>& v, double& m, double& se) {
    m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double ss = 0;
    for (double x : v) ss += (x - m) * (x - m);
    se = std::sqrt(ss / (v.size() - 1) / v.size());
  };
  mean_se(means, st.chi_hat, st.se);
  mean_se(thetas, st.theta_hat, st.theta_se);
  st.warnings = g.warnings;
  return st;
}

nlohmann::json ClusterStats::to_json() const {
  nlohmann::json h = nlohmann::json::object();
  for (auto [k, c] : histogram) h[std::to_string(k)] = c;
  return {{"chi_hat", chi_hat},
          {"se", se},
          {"theta_hat_proxy", theta_hat},
          {"theta_se", theta_se},
          {"theta_proxy_definition", "fraction of samples with |C(0)| > sqrt(sites)"},
          {"theta_cutoff", theta_cutoff},
          {"histogram", h},
          {"connectivity", connectivity},
          {"samples", samples},
          {"replicas", replicas},
          {"uncertainty", "batch-means standard error over replicas"},
          {"warnings", warnings}};
}

// ---------------------------------------------------------------------------

double ExactPerc::tail(int n) const {
  double t = 0;
  for (std::size_t k = std::max(n, 0); k < size_law.size(); ++k) t += size_law[k];
  return t;
}

nlohmann::json ExactPerc::to_json() const {
  return {{"chi", chi},           {"size_law", size_law}, {"connectivity", connectivity},
          {"dchi_dz", dchi_dz},   {"theta_proxy", theta}, {"bonds", bonds},
          {"uncertainty", "exact enumeration"}};
}

ExactPerc exact_small(const BondGraph& g) {
  const int B = static_cast<int>(g.bonds.size());
  if (B > kMaxExactBonds) throw Error("exact enumeration limited to " + std::to_string(kMaxExactBonds) + " bonds");
  const int n = g.n_sites;
  std::vector<double> p, dp;
  for (const auto& b : g.bonds) {
    p.push_back(b.p);
    dp.push_back(slope(b, g.z));
  }
  ConfigWeights w(p);
  const bool want_pairs = double(n) * n * std::ldexp(1.0, B) <= 4e8;

  ExactPerc e;
  e.bonds = B;
  e.size_law.assign(n + 1, 0.0);
  e.connectivity.assign(n, 0.0);
  if (want_pairs) e.pair.assign(n, std::vector<double>(n, 0.0));
  const double cutoff = std::sqrt(static_cast<double>(n));

  Dsu dsu(n);
  // long double keeps the 2^20-term sums well inside 1e-12
  std::vector<long double> prefix(B + 1), suffix(B + 1);
  long double dchi = 0;
  for (std::uint32_t m = 0; m < (std::uint32_t{1} << B); ++m) {
    std::iota(dsu.parent.begin(), dsu.parent.end(), 0);
    for (int b = 0; b < B; ++b)
      if ((m >> b) & 1) dsu.unite(g.bonds[b].u, g.bonds[b].v);
    const double P = w(m);
    int s = 0;
    for (int x = 0; x < n; ++x)
      if (dsu.find(x) == 0) {
        ++s;
        e.connectivity[x] += P;
      }
    e.size_law[s] += P;
    if (s > cutoff) e.theta += P;
    if (want_pairs && P > 0)
      for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
          if (dsu.find(x) == dsu.find(y)) e.pair[x][y] += P;

    // d/dz of prod_b f_b with f_b = p_b or 1 - p_b
    prefix[0] = 1;
    for (int b = 0; b < B; ++b) prefix[b + 1] = prefix[b] * ((m >> b) & 1 ? p[b] : 1 - p[b]);
    suffix[B] = 1;
    for (int b = B - 1; b >= 0; --b) suffix[b] = suffix[b + 1] * ((m >> b) & 1 ? p[b] : 1 - p[b]);
    long double dP = 0;
    for (int b = 0; b < B; ++b) dP += ((m >> b) & 1 ? dp[b] : -dp[b]) * prefix[b] * suffix[b + 1];
    dchi += s * dP;
  }
  e.dchi_dz = static_cast<double>(dchi);
  for (std::size_t k = 0; k < e.size_law.size(); ++k) e.chi += k * e.size_law[k];
  return e;
}

// ---------------------------------------------------------------------------

double restricted_triangle(const BondGraph& g, const std::vector<std::vector<double>>& G) {
  const int n = g.n_sites;
  if (static_cast<int>(G.size()) != n) throw Error("pair matrix size mismatch");
  auto apply = [&](const std::vector<double>& x) {
    std::vector<double> y(n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) y[i] += G[i][j] * x[j];
    return y;
  };
  std::vector<double> e0(n, 0.0);
  e0[0] = 1;
  auto y = apply(apply(apply(e0)));
  double nabla = 0;
  for (const auto& b : g.bonds) {
    if (b.u == 0) nabla += b.weight * y[b.v];
    if (b.v == 0) nabla += b.weight * y[b.u];
  }
  return nabla;
}

double restricted_triangle(const BondGraph& g, const std::vector<double>& g0) {
  if (!g.torus) throw Error("translation-averaged triangle needs a torus graph");
  const SmallTorus& t = *g.torus;
  const std::int64_t n = t.n_sites;
  if (static_cast<std::int64_t>(g0.size()) != n) throw Error("connectivity size mismatch");
  if (n > 4096) throw Error("restricted triangle limited to 4096 sites");
  auto conv = [&](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> c(n, 0.0);
    for (std::int64_t x = 0; x < n; ++x)
      for (std::int64_t y = 0; y < n; ++y) c[x] += a[y] * b[t.sub(x, y)];
    return c;
  };
  auto h3 = conv(conv(g0, g0), g0);
  double nabla = 0;
  for (const auto& b : g.bonds) {
    // G(v,s) G(s,t) G(t,0) summed over s,t equals (g*g*g)(-v)
    if (b.u == 0) nabla += b.weight * h3[t.sub(0, b.v)];
    if (b.v == 0) nabla += b.weight * h3[t.sub(0, b.u)];
  }
  return nabla;
}

RussoReport russo_check(const BondGraph& g, const ExactPerc& e, double dz) {
  const int B = static_cast<int>(g.bonds.size());
  if (B > kMaxExactBonds) throw Error("exact enumeration limited to " + std::to_string(kMaxExactBonds) + " bonds");
  std::vector<double> p;
  for (const auto& b : g.bonds) p.push_back(b.p);
  auto S = origin_sizes(g);

  RussoReport r;
  r.dchi_polynomial = e.dchi_dz;
  long double pivotal = 0;
  for (int b = 0; b < B; ++b) {
    const double w = slope(g.bonds[b], g.z);
    if (w == 0) continue;
    ConfigWeights cw(p, b);
    const std::uint32_t bit = 1u << b;
    long double piv = 0;
    for (std::uint32_t m = 0; m < S.size(); ++m)
      if (!(m & bit)) piv += static_cast<long double>(cw(m)) * (S[m | bit] - S[m]);
    pivotal += w * piv;
  }
  r.pivotal_sum = static_cast<double>(pivotal);
  r.abs_diff = std::abs(r.dchi_polynomial - r.pivotal_sum);
  r.identity_holds = r.abs_diff <= 1e-12;

  const double lo = std::max(0.0, g.z - dz), hi = g.z + dz;
  r.finite_difference = (exact_chi(g.at(hi)) - exact_chi(g.at(lo))) / (hi - lo);

  r.chi = e.chi;
  r.upper = e.chi * e.chi;
  r.upper_holds = r.dchi_polynomial <= r.upper * (1 + 1e-12);
  if (!e.pair.empty())
    r.nabla = restricted_triangle(g, e.pair);
  else if (g.torus && g.n_sites <= 4096)
    r.nabla = restricted_triangle(g, e.connectivity);
  else
    r.nabla = std::numeric_limits<double>::quiet_NaN();
  r.lower = r.upper * g.origin_weight - r.upper * r.nabla;
  r.lower_holds = r.dchi_polynomial >= r.lower - 1e-12 * r.upper;
  return r;
}

nlohmann::json RussoReport::to_json() const {
  return {{"dchi_dz_polynomial", dchi_polynomial},
          {"pivotal_sum", pivotal_sum},
          {"finite_difference", finite_difference},
          {"abs_diff", abs_diff},
          {"identity_holds", identity_holds},
          {"chi", chi},
          {"tree_graph_upper", upper},
          {"upper_holds", upper_holds},
          {"nabla", nabla},
          {"lower", lower},
          {"lower_holds", lower_holds}};
}

// ---------------------------------------------------------------------------

double magnetization(const std::vector<double>& size_law, double h) {
  double m = 0;
  for (std::size_t k = 1; k < size_law.size(); ++k) m += -std::expm1(-double(k) * h) * size_law[k];
  return m;
}

std::vector<double> size_law_from_histogram(const std::map<int, std::int64_t>& hist) {
  if (hist.empty()) return {};
  std::int64_t total = 0;
  for (auto [k, c] : hist) total += c;
  std::vector<double> law(hist.rbegin()->first + 1, 0.0);
  for (auto [k, c] : hist) law[k] = static_cast<double>(c) / total;
  return law;
}

MagnetizationReport magnetization_tail(const std::vector<double>& law, int n, double h, double eps) {
  if (n < 1) throw Error("n must be >= 1");
  auto tail = [&](int k) {
    double t = 0;
    for (std::size_t j = std::max(k, 0); j < law.size(); ++j) t += law[j];
    return t;
  };
  MagnetizationReport r;
  r.n = n;
  r.h = h;
  r.eps = eps;
  r.M = magnetization(law, h);
  r.tail = tail(n);
  r.upper = magnetization(law, 1.0 / n) / (1 - std::exp(-1.0));
  r.upper_holds = r.tail <= r.upper * (1 + 1e-12);
  double partial = 0;
  for (int k = 1; k < n; ++k) partial += tail(k);
  r.lower = magnetization(law, eps / n) - eps / n * partial;
  r.lower_holds = r.tail >= r.lower - 1e-12;
  return r;
}

nlohmann::json MagnetizationReport::to_json() const {
  return {{"n", n},           {"h", h},         {"M", M},         {"tail", tail},
          {"upper", upper},   {"upper_holds", upper_holds},       {"eps", eps},
          {"lower", lower},   {"lower_holds", lower_holds}};
}

}  // namespace lacelab
