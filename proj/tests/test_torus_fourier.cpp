#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "lacelab/torus_fourier.hpp"

using namespace lacelab;

namespace {

TorusField random_field(const TorusGrid& g, std::mt19937_64& rng, bool symmetric) {
  std::normal_distribution<double> N;
  TorusField f(g, Space::X);
  for (auto& c : f.v) c = N(rng);
  if (symmetric) {
    TorusField s(g, Space::X);
    for (std::int64_t i = 0; i < g.size(); ++i) s.v[i] = 0.5 * (f.v[i] + f.v[g.neg(i)]);
    return s;
  }
  return f;
}

// naive transform straight from the definition
std::vector<cplx> naive_dft(const TorusField& f) {
  const auto& g = f.grid;
  std::vector<cplx> out(g.size());
  for (std::int64_t k = 0; k < g.size(); ++k) {
    auto kv = g.dual(k);
    for (std::int64_t x = 0; x < g.size(); ++x) {
      auto xv = g.coords(x);
      double ph = 0;
      for (int j = 0; j < g.dim(); ++j) ph += kv[j] * xv[j];
      out[k] += f.v[x] * std::polar(1.0, ph);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("grid validation and indexing") {
  CHECK_THROWS_AS(TorusGrid(2, 5), Error);
  CHECK_THROWS_AS(TorusGrid(2, 2), Error);
  TorusGrid g(3, 6);
  CHECK(g.size() == 216);
  for (std::int64_t i = 0; i < g.size(); ++i) {
    auto x = g.coords(i);
    for (int v : x) CHECK((v >= -3 && v < 3));
    CHECK(g.index(x) == i);
    CHECK(g.add(i, g.neg(i)) == 0);
  }
}

TEST_CASE("fold_distribution") {
  TorusGrid g1(1, 8);
  auto f = fold_distribution(StepDistribution::nearest_neighbor(1), g1);
  CHECK(f.v[1].real() == 0.5);
  CHECK(f.v[7].real() == 0.5);
  CHECK(f.l1() == doctest::Approx(1.0));

  TorusGrid g4(1, 4);
  auto u = fold_distribution(StepDistribution::uniform_spread_out(1, 2), g4);
  CHECK(u.v[1].real() == 0.25);
  CHECK(u.v[2].real() == 0.5);
  CHECK(u.v[3].real() == 0.25);
  CHECK(u.v[0].real() == 0.0);

  // power-law: compare with image summation over |y| <= 10^6
  TorusGrid g16(1, 16);
  auto D = StepDistribution::power_law(1, 1, 2.0);
  auto p = fold_distribution(D, g16);
  CHECK(D.tail_mass() < 1e-9);
  CHECK(p.l1() == doctest::Approx(1.0 - D.tail_mass()).epsilon(1e-12));
  std::vector<double> oracle(16, 0.0);
  double norm = 0;
  for (long y = -1'000'000; y <= 1'000'000; ++y) {
    if (y == 0) continue;
    const double h = std::pow(static_cast<double>(std::labs(y)), -3.0);
    norm += h;
    oracle[((y % 16) + 16) % 16] += h;
  }
  norm += 2.0 * 0.5 / (1e6 * 1e6);  // integral tail of |y|^{-3}
  for (int x = 0; x < 16; ++x) CHECK(p.v[x].real() == doctest::Approx(oracle[x] / norm).epsilon(1e-9));
}

TEST_CASE("dft basics and closed form") {
  TorusGrid g(2, 8);
  auto dh = dft(TorusField::delta(g));
  for (auto c : dh.v) CHECK(std::abs(c - cplx(1.0)) < 1e-14);
  auto ch = dft(TorusField::constant(g, Space::X, 1.0 / 64));
  CHECK(std::abs(ch.v[0] - cplx(1.0)) < 1e-14);
  for (std::int64_t i = 1; i < g.size(); ++i) CHECK(std::abs(ch.v[i]) < 1e-14);

  auto nn = StepDistribution::nearest_neighbor(2);
  auto Dh = dft(fold_distribution(nn, g));
  const std::vector<int> m{1, 0};
  CHECK(Dh.v[g.index(m)].real() == doctest::Approx((std::cos(std::numbers::pi / 4) + 1) / 2));
  for (std::int64_t i = 0; i < g.size(); ++i) CHECK(Dh.v[i].real() == doctest::Approx(nn.fourier(g.dual(i))));
  CHECK_THROWS_AS(dft(Dh), Error);
}

TEST_CASE("dft matches the definition, round trip, Parseval") {
  std::mt19937_64 rng(11);
  for (auto [d, M] : {std::pair{1, 16}, std::pair{2, 6}, std::pair{3, 4}}) {
    TorusGrid g(d, M);
    auto f = random_field(g, rng, false);
    auto fh = dft(f);
    auto naive = naive_dft(f);
    for (std::int64_t i = 0; i < g.size(); ++i) CHECK(std::abs(fh.v[i] - naive[i]) < 1e-10);
    auto back = idft(fh);
    for (std::int64_t i = 0; i < g.size(); ++i) CHECK(std::abs(back.v[i] - f.v[i]) < 1e-10 * (1 + std::abs(f.v[i])));
    double sx = 0, sk = 0;
    for (auto c : f.v) sx += std::norm(c);
    for (auto c : fh.v) sk += std::norm(c);
    CHECK(sx == doctest::Approx(sk / g.size()).epsilon(1e-10));
    auto sym = random_field(g, rng, true);
    CHECK(dft(sym).max_imag() < 1e-10);
  }
}

TEST_CASE("convolution") {
  TorusGrid g(1, 8);
  auto D = fold_distribution(StepDistribution::nearest_neighbor(1), g);
  auto DD = convolve(D, D);
  CHECK(DD.v[0].real() == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(DD.v[2].real() == doctest::Approx(0.25).epsilon(1e-14));
  auto same = convolve(TorusField::delta(g), D);
  for (int i = 0; i < 8; ++i) CHECK(std::abs(same.v[i] - D.v[i]) < 1e-15);

  std::mt19937_64 rng(5);
  for (auto [d, M] : {std::pair{1, 16}, std::pair{2, 8}, std::pair{3, 6}}) {
    TorusGrid G(d, M);
    auto f = random_field(G, rng, false), h = random_field(G, rng, false);
    auto fast = convolve(f, h), slow = convolve_direct(f, h);
    for (std::int64_t i = 0; i < G.size(); ++i) CHECK(std::abs(fast.v[i] - slow.v[i]) < 1e-9);
    auto lhs = dft(fast), fh = dft(f), hh = dft(h);
    for (std::int64_t i = 0; i < G.size(); ++i) CHECK(std::abs(lhs.v[i] - fh.v[i] * hh.v[i]) < 1e-10);
  }
  TorusGrid big(2, 66);
  CHECK_THROWS_AS(convolve_direct(TorusField::delta(big), TorusField::delta(big)), Error);
  TorusGrid other(2, 8);
  CHECK_THROWS_AS(convolve(TorusField::delta(other), TorusField::delta(TorusGrid(2, 10))), Error);
}

TEST_CASE("second difference") {
  TorusGrid g(1, 16);
  auto c = TorusField::constant(g, Space::K, 3.0);
  for (int k = 0; k < 16; ++k)
    for (int l = 0; l < 16; ++l) CHECK(std::abs(delta_k(c, k, l)) < 1e-15);
  TorusField cosl(g, Space::K);
  for (int i = 0; i < 16; ++i) cosl.v[i] = std::cos(g.dual(i)[0]);
  for (int l = 0; l < 16; ++l) {
    CHECK(std::abs(delta_k(cosl, 0, l)) < 1e-15);
    CHECK(delta_k(cosl, 8, l).real() == doctest::Approx(-4 * std::cos(g.dual(l)[0])));
  }
  std::mt19937_64 rng(2);
  TorusGrid g2(2, 6);
  auto f = dft(random_field(g2, rng, true));
  for (std::int64_t k = 0; k < g2.size(); ++k)
    for (std::int64_t l = 0; l < g2.size(); ++l)
      CHECK(std::abs(delta_k(f, k, l) - delta_k(f, g2.neg(k), l)) < 1e-12);
}

TEST_CASE("one_minus_cos_sum") {
  TorusGrid g(1, 8);
  auto D = fold_distribution(StepDistribution::nearest_neighbor(1), g);
  CHECK(one_minus_cos_sum(D, 0) == 0.0);
  CHECK(one_minus_cos_sum(D, 4) == doctest::Approx(2.0));
  auto delta = TorusField::delta(g);
  for (int k = 0; k < 8; ++k) CHECK(one_minus_cos_sum(delta, k) == 0.0);
  std::mt19937_64 rng(9);
  TorusGrid g2(2, 8);
  auto f = random_field(g2, rng, false);
  for (std::int64_t k = 0; k < g2.size(); ++k) CHECK(one_minus_cos_sum(f, k) <= 2 * f.l1() + 1e-12);
}

TEST_CASE("field json") {
  TorusGrid g(2, 4);
  auto f = dft(fold_distribution(StepDistribution::nearest_neighbor(2), g));
  auto j = f.to_json();
  CHECK(j["space_tag"] == "K");
  auto back = TorusField::from_json(j);
  for (std::int64_t i = 0; i < g.size(); ++i) CHECK(back.v[i] == f.v[i]);
  j["re"].erase(0);
  CHECK_THROWS_AS(TorusField::from_json(j), Error);
}
