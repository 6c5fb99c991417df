#include <doctest.h>

#include <cmath>
#include <functional>
#include <set>

#include "lacelab/percolation_sim.hpp"
#include "lacelab/philox.hpp"

using namespace lacelab;

namespace {

// brute force over all bond configurations; cluster of 0 by graph search over a std::set
struct Oracle {
  double chi = 0;
  std::vector<double> law;
};

Oracle brute(int n, const std::vector<std::pair<int, int>>& edges, const std::vector<double>& p) {
  Oracle o;
  o.law.assign(n + 1, 0.0);
  const int B = static_cast<int>(edges.size());
  for (long m = 0; m < (1L << B); ++m) {
    double w = 1;
    for (int b = 0; b < B; ++b) w *= (m >> b) & 1 ? p[b] : 1 - p[b];
    std::set<int> seen{0};
    std::vector<int> stack{0};
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int b = 0; b < B; ++b) {
        if (!((m >> b) & 1)) continue;
        int other = edges[b].first == u ? edges[b].second : edges[b].second == u ? edges[b].first : -1;
        if (other >= 0 && seen.insert(other).second) stack.push_back(other);
      }
    }
    o.law[seen.size()] += w;
    o.chi += w * seen.size();
  }
  return o;
}

Oracle brute(const BondGraph& g) {
  std::vector<std::pair<int, int>> e;
  std::vector<double> p;
  for (const auto& b : g.bonds) {
    e.emplace_back(b.u, b.v);
    p.push_back(b.p);
  }
  return brute(g.n_sites, e, p);
}

BondGraph three_cycle(double z) { return BondGraph::on_torus(StepDistribution::nearest_neighbor(1), 3, z, 1); }
BondGraph two_site(double z) { return BondGraph::custom(2, {{0, 1, 0.5}}, z); }

}  // namespace

TEST_CASE("philox known-answer vectors") {
  using P = Philox4x32;
  CHECK(P::block({0, 0, 0, 0}, {0, 0}) == P::Counter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(P::block({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        P::Counter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(P::block({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        P::Counter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
  PhiloxStream s(7, 1, 2);
  double sum = 0;
  for (int i = 0; i < 20000; ++i) {
    double u = s.uniform();
    CHECK(u >= 0);
    CHECK(u < 1);
    sum += u;
  }
  CHECK(sum / 20000 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("torus bond graphs") {
  auto g = three_cycle(1.0);
  CHECK(g.n_sites == 3);
  CHECK(g.bonds.size() == 3);
  for (const auto& b : g.bonds) CHECK(b.p == 0.5);
  CHECK(g.origin_weight == 1.0);
  CHECK(g.e_R == 0.0);

  auto sq = BondGraph::on_torus(StepDistribution::nearest_neighbor(2), 3, 1.0, 1);
  CHECK(sq.bonds.size() == 18);
  auto uso = BondGraph::on_torus(StepDistribution::uniform_spread_out(1, 2), 5, 1.5, 2);
  CHECK(uso.bonds.size() == 10);
  for (const auto& b : uso.bonds) CHECK(b.p == doctest::Approx(1.5 / 4));

  auto D = StepDistribution::power_law(1, 1, 1.5, 200);
  double prev = 1;
  for (double R : {1.0, 2.0, 4.0, 8.0}) {
    auto pg = BondGraph::on_torus(D, 20, 1.0, R);
    CHECK(pg.e_R < prev);
    prev = pg.e_R;
  }
  auto clipped = BondGraph::on_torus(StepDistribution::nearest_neighbor(1), 8, 3.0, 1);
  CHECK(clipped.clipped);
  CHECK_FALSE(clipped.warnings.empty());
  CHECK_FALSE(three_cycle(1.0).clipped);
}

TEST_CASE("lazy and full revelation agree") {
  for (auto g : {BondGraph::on_torus(StepDistribution::nearest_neighbor(2), 6, 0.9, 1),
                 BondGraph::on_torus(StepDistribution::uniform_spread_out(1, 2), 9, 1.2, 2)}) {
    for (std::uint32_t s = 0; s < 300; ++s)
      CHECK(reveal_cluster_lazy(g, 11, 3, s) == reveal_cluster_full(g, 11, 3, s));
  }
}

TEST_CASE("trivial sampling limits") {
  PercConfig cfg;
  cfg.seed = 5;
  cfg.replicas = 4;
  cfg.samples_per_replica = 50;
  auto s0 = sample_cluster(BondGraph::on_torus(StepDistribution::nearest_neighbor(2), 4, 0.0, 1), cfg);
  CHECK(s0.chi_hat == 1.0);
  CHECK(s0.se == 0.0);
  auto full = sample_cluster(BondGraph::on_torus(StepDistribution::nearest_neighbor(1), 16, 2.0, 1), cfg);
  CHECK(full.chi_hat == 16.0);
  CHECK(full.theta_hat == 1.0);
  double chk = 0;
  for (auto [k, c] : full.histogram) chk += k * double(c) / full.samples;
  CHECK(chk == full.chi_hat);
  CHECK_THROWS_AS(BondGraph::on_torus(StepDistribution::nearest_neighbor(1), 4, -1, 1), Error);
}

TEST_CASE("sampler determinism") {
  auto g = BondGraph::on_torus(StepDistribution::nearest_neighbor(2), 4, 1.0, 1);
  PercConfig a;
  a.seed = 99;
  a.replicas = 6;
  a.samples_per_replica = 100;
  a.threads = 1;
  PercConfig b = a;
  b.threads = 3;
  auto ra = sample_cluster(g, a), rb = sample_cluster(g, b);
  CHECK(ra.chi_hat == rb.chi_hat);
  CHECK(ra.se == rb.se);
  CHECK(ra.histogram == rb.histogram);
  CHECK(ra.to_json().dump() == rb.to_json().dump());
}

TEST_CASE("exact enumeration against the brute-force oracle") {
  const double p = 0.5;
  const double closed = 1 * (1 - p) * (1 - p) + 2 * 2 * p * (1 - p) * (1 - p) +
                        3 * (1 - (1 - p) * (1 - p) - 2 * p * (1 - p) * (1 - p));
  // 1/4 + 2 * 1/4 + 3 * 1/2
  CHECK(closed == 2.25);
  auto e3 = exact_small(three_cycle(1.0));
  CHECK(e3.chi == doctest::Approx(closed).epsilon(1e-15));
  CHECK(std::abs(brute(three_cycle(1.0)).chi - closed) < 1e-15);

  auto e2 = exact_small(two_site(0.6));
  CHECK(e2.chi == doctest::Approx(1.3).epsilon(1e-15));
  CHECK(e2.dchi_dz == doctest::Approx(0.5).epsilon(1e-15));

  for (auto g : {BondGraph::on_torus(StepDistribution::nearest_neighbor(1), 8, 1.4, 1),
                 BondGraph::on_torus(StepDistribution::nearest_neighbor(2), 3, 1.0, 1),
                 BondGraph::on_torus(StepDistribution::uniform_spread_out(1, 2), 5, 1.5, 2)}) {
    auto e = exact_small(g);
    auto o = brute(g);
    CHECK(std::abs(e.chi - o.chi) < 1e-12);
    for (std::size_t k = 0; k < o.law.size(); ++k) CHECK(std::abs(e.size_law[k] - o.law[k]) < 1e-12);
    double csum = 0;
    for (double c : e.connectivity) csum += c;
    CHECK(std::abs(csum - e.chi) < 1e-12);
    CHECK(e.connectivity[0] == doctest::Approx(1.0));
  }
  auto z0 = exact_small(BondGraph::on_torus(StepDistribution::nearest_neighbor(2), 3, 0.0, 1));
  CHECK(z0.chi == 1.0);
  CHECK(z0.tail(2) == 0.0);
  CHECK_THROWS_AS(exact_small(BondGraph::on_torus(StepDistribution::nearest_neighbor(2), 4, 1.0, 1)), Error);
}

TEST_CASE("Russo identity and the tree-graph bounds") {
  auto r2 = russo_check(two_site(0.6), exact_small(two_site(0.6)));
  CHECK(r2.pivotal_sum == doctest::Approx(0.5));
  CHECK(r2.identity_holds);

  for (auto make : std::vector<std::function<BondGraph(double)>>{
           three_cycle,
           [](double z) { return BondGraph::on_torus(StepDistribution::nearest_neighbor(1), 8, z, 1); },
           [](double z) { return BondGraph::on_torus(StepDistribution::nearest_neighbor(2), 3, z, 1); },
           [](double z) { return BondGraph::on_torus(StepDistribution::uniform_spread_out(1, 2), 5, z, 2); }}) {
    for (double z : {0.0, 0.3, 0.7, 1.0, 1.4}) {
      auto g = make(z);
      if (g.clipped) continue;
      auto r = russo_check(g, exact_small(g));
      CHECK(r.identity_holds);
      CHECK(r.upper_holds);
      CHECK(r.lower_holds);
      // oracle slope by central difference of the brute-force polynomial
      const double h = 1e-5;
      if (z > h) {
        const double fd = (brute(make(z + h)).chi - brute(make(z - h)).chi) / (2 * h);
        CHECK(std::abs(fd - r.dchi_polynomial) < 1e-6 * r.dchi_polynomial);
      }
    }
  }
}

TEST_CASE("restricted triangle") {
  auto g0 = three_cycle(0.0);
  auto e0 = exact_small(g0);
  CHECK(restricted_triangle(g0, e0.pair) == 0.0);

  // 3-cycle closed form: P(0<->x) = q = p^2 + 2p^2(1-p) + ... computed by the oracle
  const double p = 0.5;
  const double q = p + (1 - p) * p * p;  // direct bond, or both other bonds
  auto e = exact_small(three_cycle(1.0));
  CHECK(e.connectivity[1] == doctest::Approx(q));
  // G = [[1,q,q],[q,1,q],[q,q,1]], nabla = sum_v D(v) (G^3)(v,0)
  double G[3][3] = {{1, q, q}, {q, 1, q}, {q, q, 1}};
  double v[3] = {1, 0, 0};
  for (int it = 0; it < 3; ++it) {
    double w[3] = {0, 0, 0};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) w[i] += G[i][j] * v[j];
    for (int i = 0; i < 3; ++i) v[i] = w[i];
  }
  const double expect = 0.5 * v[1] + 0.5 * v[2];
  CHECK(restricted_triangle(three_cycle(1.0), e.pair) == doctest::Approx(expect));
  CHECK(restricted_triangle(three_cycle(1.0), e.connectivity) == doctest::Approx(expect));

  double prev = -1;
  for (double z : {0.0, 0.2, 0.5, 0.8, 1.1, 1.4}) {
    auto g = BondGraph::on_torus(StepDistribution::nearest_neighbor(2), 3, z, 1);
    const double nab = restricted_triangle(g, exact_small(g).pair);
    CHECK(nab >= prev);
    prev = nab;
  }
}

TEST_CASE("Monte Carlo against exact values") {
  auto g = three_cycle(1.0);
  const double exact = exact_small(g).chi;
  int ok = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    PercConfig cfg;
    cfg.seed = seed;
    cfg.replicas = 10;
    cfg.samples_per_replica = 200;
    auto s = sample_cluster(g, cfg);
    ok += std::abs(s.chi_hat - exact) <= 4 * s.se;
  }
  CHECK(ok >= 19);

  double prev = 0;
  for (double z : {0.2, 0.6, 1.0, 1.4, 1.8}) {
    auto gz = three_cycle(z);
    const double ex = exact_small(gz).chi;
    CHECK(ex >= prev);
    PercConfig cfg;
    cfg.seed = 3;
    cfg.replicas = 10;
    cfg.samples_per_replica = 400;
    auto s = sample_cluster(gz, cfg);
    CHECK(s.chi_hat >= prev - 4 * s.se);
    prev = ex;
  }
}

TEST_CASE("magnetization") {
  auto e2 = exact_small(two_site(0.6));
  CHECK(magnetization(e2.size_law, 0.0) == 0.0);
  CHECK(magnetization(e2.size_law, 60.0) == doctest::Approx(1.0));
  auto e3 = exact_small(three_cycle(1.0));
  // oracle: M(h) = sum_k (1 - e^{-kh}) P(|C| = k) with the hand-computed size law
  const double p = 0.5;
  const double P1 = (1 - p) * (1 - p), P2 = 2 * p * (1 - p) * (1 - p), P3 = 1 - P1 - P2;
  const double h = 0.5;
  CHECK(magnetization(e3.size_law, h) ==
        doctest::Approx((1 - std::exp(-h)) * P1 + (1 - std::exp(-2 * h)) * P2 + (1 - std::exp(-3 * h)) * P3));
  for (int n : {2, 3}) {
    auto r = magnetization_tail(e3.size_law, n, 1.0 / n);
    CHECK(r.upper_holds);
    CHECK(r.lower_holds);
    CHECK(r.tail <= r.upper);
  }
  CHECK(magnetization_tail(e3.size_law, 2, 0.5).tail == doctest::Approx(P2 + P3));

  std::map<int, std::int64_t> hist{{1, 3}, {2, 1}};
  auto law = size_law_from_histogram(hist);
  CHECK(law[1] == 0.75);
  CHECK(law[2] == 0.25);
}
