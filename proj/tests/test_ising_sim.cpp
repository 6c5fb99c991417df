#include <doctest.h>

#include <cmath>

#include "lacelab/ising_sim.hpp"

using namespace lacelab;

namespace {

// direct sum over all spin vectors with the Boltzmann weight written out
struct Oracle {
  std::vector<std::vector<double>> corr;
  double M0 = 0;
};

Oracle brute(int n, const std::vector<WeightedPair>& J, double z, double h) {
  Oracle o;
  o.corr.assign(n, std::vector<double>(n, 0.0));
  double Z = 0;
  std::vector<int> phi(n);
  for (long c = 0; c < (1L << n); ++c) {
    for (int i = 0; i < n; ++i) phi[i] = (c >> i) & 1 ? 1 : -1;
    double H = 0;
    for (const auto& p : J) H += p.weight * phi[p.u] * phi[p.v];
    int m = 0;
    for (int s : phi) m += s;
    const double w = std::exp(z * H + h * m);
    Z += w;
    o.M0 += w * phi[0];
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y) o.corr[x][y] += w * phi[x] * phi[y];
  }
  o.M0 /= Z;
  for (auto& r : o.corr)
    for (auto& v : r) v /= Z;
  return o;
}

CouplingTable nn_couplings(int d, double J) {
  CouplingTable t;
  t.d = d;
  for (int j = 0; j < d; ++j)
    for (int s : {1, -1}) {
      Site x(d, 0);
      x[j] = s;
      t.entries.emplace_back(x, J);
    }
  return t;
}

}  // namespace

TEST_CASE("exact enumeration against the direct oracle") {
  auto two = SpinGraph::custom(2, {{0, 1, 1.0}});
  auto e = exact_ising(two, 0.5, 0.0);
  CHECK(e.G[1] == doctest::Approx(std::tanh(0.5)).epsilon(1e-14));
  CHECK(brute(2, two.couplings, 0.5, 0).corr[0][1] == doctest::Approx(std::tanh(0.5)).epsilon(1e-14));
  CHECK(e.M == 0.0);

  auto tri = SpinGraph::on_torus(nn_couplings(1, 1.0), 3, 1);
  CHECK(tri.couplings.size() == 3);
  auto sq = SpinGraph::on_torus(nn_couplings(2, 1.0), 4, 1);
  CHECK(sq.couplings.size() == 32);
  auto uso = SpinGraph::on_torus(CouplingTable::from_distribution(StepDistribution::uniform_spread_out(1, 2)), 8, 2);
  for (auto [g, z, h] : std::vector<std::tuple<SpinGraph, double, double>>{
           {tri, 0.3, 0.1}, {SpinGraph::on_torus(nn_couplings(1, 1.0), 4, 1), 0.4, 0.0}, {uso, 0.3, 0.0},
           {uso, 0.3, 0.2}, {two, 0.7, -0.3}}) {
    auto ex = exact_ising(g, z, h);
    auto o = brute(g.n, g.couplings, z, h);
    for (int x = 0; x < g.n; ++x) {
      CHECK(std::abs(ex.G[x] - o.corr[0][x]) < 1e-12);
      for (int y = 0; y < g.n; ++y) CHECK(std::abs(ex.pair[x][y] - o.corr[x][y]) < 1e-12);
    }
    CHECK(std::abs(ex.M - o.M0) < 1e-12);
  }
}

TEST_CASE("trivial limits") {
  auto g = SpinGraph::on_torus(nn_couplings(2, 1.0), 3, 1);
  auto e = exact_ising(g, 0.0, 0.4);
  CHECK(e.G[0] == 1.0);
  for (int x = 1; x < g.n; ++x) CHECK(std::abs(e.G[x] - std::tanh(0.4) * std::tanh(0.4)) < 1e-14);
  CHECK(e.M == doctest::Approx(std::tanh(0.4)).epsilon(1e-14));
  auto e0 = exact_ising(g, 0.0, 0.0);
  for (int x = 1; x < g.n; ++x) CHECK(std::abs(e0.G[x]) < 1e-15);
  CHECK(exact_ising(g, 0.5, 0.0).M == 0.0);
  CHECK_THROWS_AS(exact_ising(SpinGraph::on_torus(nn_couplings(1, 1.0), 21, 1), 0.1, 0), Error);
  CHECK_THROWS_AS(SpinGraph::custom(2, {{0, 1, -1.0}}), Error);
}

TEST_CASE("correlation inequalities on exact instances") {
  auto g = SpinGraph::on_torus(nn_couplings(2, 1.0), 3, 1);
  const double dz = 1e-4;
  double prevM = -1;
  for (double h : {0.0, 0.1, 0.3, 1.0}) {
    const double M = exact_ising(g, 0.3, h).M;
    CHECK(M >= prevM);
    prevM = M;
  }
  for (double z : {0.05, 0.15, 0.3, 0.5}) {
    auto a = exact_ising(g, z, 0), b = exact_ising(g, z + dz, 0);
    for (int x = 0; x < g.n; ++x) {
      CHECK(a.G[x] >= 0);
      CHECK(a.G[x] <= 1);
      CHECK(b.G[x] >= a.G[x] - 1e-14);
    }
    CHECK(std::abs(a.chi - a.chi_var) < 1e-10);
    const double slope = (b.chi - a.chi) / dz;
    CHECK(slope <= 2 * g.coupling_sum_at_origin() * b.chi * b.chi);
  }
  // monotone in a single coupling
  std::vector<WeightedPair> c{{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}, {3, 0, 1.0}};
  const double base = exact_ising(SpinGraph::custom(4, c), 0.4, 0).G[2];
  c[1].weight = 1.5;
  CHECK(exact_ising(SpinGraph::custom(4, c), 0.4, 0).G[2] > base);
}

TEST_CASE("single-step bound") {
  auto two = SpinGraph::custom(2, {{0, 1, 1.0}});
  for (double z : {0.0, 0.3, 1.0}) CHECK(single_step_check(two, z, exact_ising(two, z, 0)).holds);
  auto zero = single_step_check(two, 0.0, exact_ising(two, 0.0, 0));
  for (std::size_t x = 0; x < 2; ++x) {
    CHECK(zero.lhs[x] == 0.0);
    CHECK(zero.rhs[x] == 0.0);
  }
  auto cyc = SpinGraph::on_torus(nn_couplings(1, 1.0), 4, 1);
  for (double z : {0.1, 0.4, 0.8, 1.5}) {
    auto r = single_step_check(cyc, z, exact_ising(cyc, z, 0));
    CHECK(r.holds);
    CHECK(r.lhs.size() == 4);
  }
  auto uso = SpinGraph::on_torus(CouplingTable::from_distribution(StepDistribution::uniform_spread_out(1, 2)), 8, 2);
  CHECK(single_step_check(uso, 0.5, exact_ising(uso, 0.5, 0)).holds);
  CHECK(coupling_tail(CouplingTable::from_distribution(StepDistribution::uniform_spread_out(1, 2)), 0.5, 1).tail ==
        doctest::Approx(2 * std::tanh(0.5 / 4)));
}

TEST_CASE("Metropolis against exact values") {
  auto two = SpinGraph::custom(2, {{0, 1, 1.0}});
  MetropolisConfig cfg;
  cfg.z = 0.5;
  cfg.sweeps = 4000;
  cfg.seed = 17;
  auto s = metropolis(two, cfg);
  CHECK(std::abs(s.G[1] - std::tanh(0.5)) <= 3 * s.G_se[1]);

  auto tri = SpinGraph::on_torus(nn_couplings(1, 1.0), 3, 1);
  cfg.z = 0.3;
  cfg.h = 0.1;
  auto ex = exact_ising(tri, 0.3, 0.1);
  int ok = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    cfg.seed = seed;
    ok += within_sigma(metropolis(tri, cfg), ex, 4);
  }
  CHECK(ok >= 9);

  cfg.z = 0;
  cfg.h = 0;
  auto free = metropolis(tri, cfg);
  for (int x = 1; x < 3; ++x) CHECK(std::abs(free.G[x]) <= 3 * free.G_se[x]);
  CHECK(std::abs(free.chi - free.chi_var) <= 4 * std::hypot(free.chi_se, free.chi_var_se));
}

TEST_CASE("Metropolis determinism") {
  auto g = SpinGraph::on_torus(nn_couplings(2, 1.0), 4, 1);
  MetropolisConfig a;
  a.z = 0.2;
  a.sweeps = 200;
  a.burn_in = 20;
  a.replicas = 5;
  a.seed = 8;
  a.threads = 1;
  MetropolisConfig b = a;
  b.threads = 4;
  CHECK(metropolis(g, a).to_json().dump() == metropolis(g, b).to_json().dump());
}

TEST_CASE("Metropolis does not lock into a cycle on a bipartite ring at zero field") {
  auto cyc = SpinGraph::on_torus(nn_couplings(1, 1.0), 4, 1);
  auto ex = exact_ising(cyc, 0.4, 0);
  MetropolisConfig cfg;
  cfg.z = 0.4;
  int ok = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    cfg.seed = seed;
    auto s = metropolis(cyc, cfg);
    ok += within_sigma(s, ex, 4);
    CHECK(s.chi_se < 0.05);
  }
  CHECK(ok >= 9);
}
