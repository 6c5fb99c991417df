#include <doctest.h>

#include <cmath>
#include <numbers>

#include "lacelab/diagnostics.hpp"
#include "lacelab/philox.hpp"

using namespace lacelab;

namespace {

TwoPointInput base_point(const StepDistribution& D, const TorusGrid& g) { return free_model_input(D, g, 0.0); }

TorusField random_symmetric(const TorusGrid& g, PhiloxStream& rng, double l1) {
  TorusField a(g, Space::X);
  for (std::int64_t i = 1; i < g.size(); ++i) {
    const std::int64_t j = g.neg(i);
    if (j < i) continue;
    const double v = rng.uniform() * 2 - 1;
    a.v[i] = v;
    a.v[j] = v;
  }
  a.v[0] = rng.uniform() * 2 - 1;
  const double s = a.l1();
  for (auto& v : a.v) v *= l1 / s;
  return a;
}

CouplingTable ring(double J) {
  CouplingTable t;
  t.d = 1;
  t.entries = {{Site{1}, J}, {Site{-1}, J}};
  return t;
}

}  // namespace

TEST_CASE("bootstrap functions at the base point") {
  TorusGrid g(2, 8);
  auto in = base_point(StepDistribution::nearest_neighbor(2), g);
  for (double v : in.Ghat) CHECK(v == 1.0);
  CHECK(in.lambda == 0.0);
  auto f = bootstrap_f(in);
  CHECK(f.f1 == 0.0);
  CHECK(f.f2 == 1.0);
  CHECK(f.f3 == 0.0);
  CHECK(f.f3_mode == "exhaustive");
  for (std::int64_t k = 0; k < g.size(); k += 7)
    for (std::int64_t l = 0; l < g.size(); l += 5) CHECK(U_lambda(in, k, l) == 600.0);
}

TEST_CASE("free model identities") {
  TorusGrid g(3, 8);
  auto D = StepDistribution::nearest_neighbor(3);
  for (int i = 1; i <= 9; ++i) {
    const double z = 0.1 * i;
    auto in = free_model_input(D, g, z);
    CHECK(in.lambda == doctest::Approx(z).epsilon(1e-12));
    CHECK(std::abs(bootstrap_f(in).f2 - 1) <= 1e-12);
    CHECK(infrared_check(in).sup_deviation <= 1e-12);
  }
  CHECK(infrared_check(base_point(D, g)).sup_deviation == 0.0);
  CHECK_THROWS_AS(free_model_input(D, g, 1.0), Error);
}

TEST_CASE("diagrams against x-space oracles") {
  TorusGrid g(1, 64);
  const double z = 0.5;
  auto in = free_model_input(StepDistribution::nearest_neighbor(1), g, z);
  // C(x) = M^{-1} sum_k cos(kx) / (1 - z cos k)
  std::vector<double> C(64, 0.0);
  for (int x = 0; x < 64; ++x)
    for (int m = 0; m < 64; ++m) {
      const double k = 2 * std::numbers::pi * m / 64;
      C[x] += std::cos(k * x) / (1 - z * std::cos(k)) / 64;
    }
  double B = 0, T = 0;
  for (int x = 0; x < 64; ++x) B += C[x] * C[x];
  for (int x = 0; x < 64; ++x)
    for (int y = 0; y < 64; ++y) T += C[x] * C[(y - x + 64) % 64] * C[y];
  auto r = bubble_triangle(in);
  CHECK(std::abs(r.B - B) < 1e-10);
  CHECK(std::abs(r.B_x - B) < 1e-10);
  CHECK(std::abs(r.T - T) < 1e-10);
  CHECK(r.parseval_ok);
  CHECK(r.open_le_closed);
  CHECK(r.B >= 1);
  CHECK(r.T >= 1);

  auto r0 = bubble_triangle(base_point(StepDistribution::nearest_neighbor(1), g));
  CHECK(r0.B == doctest::Approx(1.0));
  CHECK(r0.T == doctest::Approx(1.0));
  CHECK(std::abs(r0.nabla) < 1e-15);

  TwoPointInput bad = in;
  bad.Ghat[1] += 0.1;
  CHECK_THROWS_AS(bad.validate(), Error);

  auto j = in.to_json();
  auto back = TwoPointInput::from_json(j);
  CHECK(back.Ghat == in.Ghat);
  CHECK(back.tau == in.tau);
}

TEST_CASE("chain of bubbles") {
  auto D5 = StepDistribution::nearest_neighbor(5);
  TorusGrid g(5, 8);
  auto zero = chain_of_bubbles(base_point(D5, g));
  CHECK(zero.psi_mass == 0.0);
  CHECK(zero.bound_holds);

  auto in = free_model_input(D5, g, 0.5);
  auto c = chain_of_bubbles(in);
  CHECK_FALSE(c.refused);
  CHECK(c.bound_holds);
  CHECK(c.psi_mass <= 2 * c.B_tilde);
  CHECK(std::abs(c.psi_mass - c.geometric) < 1e-10);
  CHECK(c.B_tilde == doctest::Approx(bubble_triangle(in).B_tilde));

  // scalar sanity: b/(1-b) <= 2b for b < 1/2
  for (double b : {0.01, 0.2, 0.49}) CHECK(b / (1 - b) <= 2 * b);

  auto big = free_model_input(StepDistribution::nearest_neighbor(1), TorusGrid(1, 16), 0.95);
  CHECK(chain_of_bubbles(big).refused);
}

TEST_CASE("second-difference lemma") {
  TorusGrid g(1, 16);
  TorusField zero(g, Space::X);
  auto r = trig_lemma_check(zero, 3, 5);
  CHECK(r.lhs == 0.0);
  CHECK(r.rhs == 0.0);
  PhiloxStream rng(1, 0, 0);
  auto a = random_symmetric(g, rng, 0.9);
  CHECK(trig_lemma_check(a, 0, 4).lhs == 0.0);
  std::int64_t viol = 0;
  for (int i = 0; i < 100; ++i) viol += trig_lemma_sweep(random_symmetric(g, rng, 0.9)).violations;
  CHECK(viol == 0);
  TorusField over(g, Space::X);
  over.v[1] = over.v[15] = 0.6;
  CHECK_THROWS_AS(trig_lemma_check(over, 1, 1), Error);
}

TEST_CASE("cosine splitting") {
  auto r = cos_split_check({std::numbers::pi / 2, std::numbers::pi / 2});
  CHECK(r.lhs == doctest::Approx(2.0));
  CHECK(r.rhs == doctest::Approx(10.0));
  CHECK(r.holds);
  auto z = cos_split_check({0, 0, 0});
  CHECK(z.lhs == 0.0);
  CHECK(z.rhs == 0.0);
  PhiloxStream rng(2, 0, 0);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> t(1 + rng.below(6));
    for (auto& v : t) v = (rng.uniform() * 2 - 1) * 4;
    CHECK(cos_split_check(t).holds);
  }
}

TEST_CASE("second difference against the cosine sum") {
  TorusGrid g(1, 16);
  TorusField pair(g, Space::X);
  pair.v[g.index(std::vector<int>{1})] = 1;
  pair.v[g.index(std::vector<int>{-1})] = 1;
  // l = 0, k = pi: Delta = 2 g^(pi) - 2 g^(0) = -4 - 4
  auto r = delta_vs_cos_sum_check(pair, 8, 0);
  CHECK(r.lhs == doctest::Approx(8.0));
  CHECK(r.rhs == doctest::Approx(4.0));
  CHECK_FALSE(r.holds);
  CHECK(r.holds_factor2);
  PhiloxStream rng(3, 0, 0);
  for (int i = 0; i < 100; ++i) {
    auto a = random_symmetric(g, rng, 1.0 + rng.uniform());
    for (std::int64_t k = 0; k < 16; ++k)
      for (std::int64_t l = 0; l < 16; ++l) CHECK(delta_vs_cos_sum_check(a, k, l).holds_factor2);
  }
}

TEST_CASE("cos G bound and the lambda identity") {
  auto D5 = StepDistribution::nearest_neighbor(5);
  TorusGrid g(5, 8);
  auto in = free_model_input(D5, g, 0.5);
  auto f = bootstrap_f(in);
  const double K = std::max({f.f1, f.f2, f.f3});
  CHECK(cos_g_bound_check(in, 0, K).lhs == 0.0);
  auto sweep = cos_g_bound_sweep(in, K);
  CHECK(sweep.checked == g.size());
  CHECK(sweep.violations == 0);
  CHECK(cos_g_bound_check(in, 77, K).holds);
  auto base = base_point(D5, g);
  CHECK(cos_g_bound_check(base, 5, 1.0).lhs == 0.0);

  std::vector<double> lambdas;
  for (int i = 0; i <= 20; ++i) lambdas.push_back(i / 20.0);
  auto id = c_lambda_identity_check(in.Dhat, lambdas);
  CHECK(id.holds);
  CHECK(id.min_value >= 0);
  CHECK(id.max_value <= 2 + 1e-12);

  auto chain = b_tilde_chain(in, K);
  CHECK(chain.holds);
  CHECK(chain.B_tilde <= chain.direct);
}

TEST_CASE("exact Ising inputs") {
  auto cyc = SpinGraph::on_torus(ring(1.0), 4, 1);
  std::vector<double> devs;
  for (double z : {0.2, 0.1, 0.05}) {
    auto in = ising_input(cyc, z, exact_ising(cyc, z, 0));
    CHECK(in.tau == doctest::Approx(2 * std::tanh(z)));
    CHECK(in.Ghat[0] == doctest::Approx(in.chi));
    auto r = bubble_triangle(in);
    CHECK(r.parseval_ok);
    CHECK(r.open_le_closed);
    devs.push_back(infrared_check(in).sup_deviation);
  }
  CHECK(devs[1] < devs[0]);
  CHECK(devs[2] < devs[1]);
  auto in0 = ising_input(cyc, 0.0, exact_ising(cyc, 0.0, 0));
  CHECK(infrared_check(in0).sup_deviation < 1e-15);
}
