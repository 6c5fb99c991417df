#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "lacelab/saw_enum.hpp"

using namespace lacelab;

namespace {

// plain unweighted counting: recursion over nearest-neighbor steps with a sorted visited set
void count_rec(int d, int n_left, int len, Site& pos, std::set<Site>& seen, std::vector<std::uint64_t>& out) {
  ++out[len];
  if (n_left == 0) return;
  for (int j = 0; j < d; ++j)
    for (int sgn : {1, -1}) {
      pos[j] += sgn;
      if (!seen.count(pos)) {
        seen.insert(pos);
        count_rec(d, n_left - 1, len + 1, pos, seen, out);
        seen.erase(pos);
      }
      pos[j] -= sgn;
    }
}

std::vector<std::uint64_t> count_walks(int d, int n) {
  std::vector<std::uint64_t> out(n + 1, 0);
  Site pos(d, 0);
  std::set<Site> seen{pos};
  count_rec(d, n, 0, pos, seen, out);
  return out;
}

// Fourier transform of a sparse map at k
double hat(const SiteMap<double>& f, const std::vector<double>& k) {
  double s = 0;
  for (const auto& [x, v] : f) {
    double ph = 0;
    for (std::size_t j = 0; j < k.size(); ++j) ph += k[j] * x[j];
    s += v * std::cos(ph);
  }
  return s;
}

}  // namespace

TEST_CASE("walk counts against the counting oracle") {
  auto s = enumerate(StepDistribution::nearest_neighbor(2), 6);
  auto oracle = count_walks(2, 6);
  CHECK(oracle[2] == 12);
  CHECK(oracle[4] == 100);
  for (int n = 0; n <= 6; ++n) {
    CHECK(s.total_count(n) == oracle[n]);
    CHECK(s.total(n) * std::pow(4.0, n) == doctest::Approx(static_cast<double>(oracle[n])));
  }
  auto s3 = enumerate(StepDistribution::nearest_neighbor(3), 5);
  auto o3 = count_walks(3, 5);
  for (int n = 0; n <= 5; ++n) CHECK(s3.total_count(n) == o3[n]);
}

TEST_CASE("series invariants") {
  auto s = enumerate(StepDistribution::uniform_spread_out(2, 1), 5);
  CHECK(s.c[0].size() == 1);
  CHECK(s.c[0].at(Site{0, 0}) == 1.0);
  for (int n = 1; n <= 5; ++n) {
    CHECK(s.total(n) <= s.total(n - 1) + 1e-15);
    for (const auto& [x, v] : s.c[n]) {
      Site m{-x[0], -x[1]};
      CHECK(s.c[n].at(m) == v);
    }
  }
  auto one = enumerate(StepDistribution::nearest_neighbor(1), 10);
  for (int n = 1; n <= 10; ++n) CHECK(one.total(n) == doctest::Approx(std::pow(2.0, 1 - n)));
}

TEST_CASE("budget and branching guards") {
  CHECK_THROWS_AS(enumerate(StepDistribution::nearest_neighbor(2), 11), Error);
  CHECK_THROWS_AS(enumerate(StepDistribution::nearest_neighbor(1), 15), Error);
  EnumOptions o;
  o.budget = 25;
  CHECK_NOTHROW(enumerate(StepDistribution::nearest_neighbor(1), 25, o));
  CHECK_THROWS_AS(enumerate(StepDistribution::uniform_spread_out(2, 4), 2), Error);
  EnumOptions p;
  p.support_radius = 3;
  auto pl = enumerate(StepDistribution::power_law(1, 1, 2.0), 6, p);
  CHECK(pl.steps.size() == 6);
  CHECK(pl.weight_loss > 0);
}

TEST_CASE("thread count does not change results") {
  EnumOptions a, b;
  a.threads = 1;
  b.threads = 4;
  b.support_radius = a.support_radius = 2;
  auto D = StepDistribution::power_law(2, 1, 1.5, 40);
  auto s1 = enumerate(D, 5, a), s2 = enumerate(D, 5, b);
  for (int n = 0; n <= 5; ++n) CHECK(s1.c[n] == s2.c[n]);
}

TEST_CASE("chi series") {
  EnumOptions o;
  o.budget = 25;
  auto s = enumerate(StepDistribution::nearest_neighbor(1), 25, o);
  CHECK(chi_series(s, 0.0).chi == 1.0);
  auto r = chi_series(s, 1.0);
  CHECK(std::abs(r.chi - 3.0) < 1e-6);
  CHECK(r.remainder < 1e-6);
  CHECK(std::abs(r.chi + r.remainder - 3.0) < 1e-12);
  CHECK(r.zc_estimate == doctest::Approx(2.0));
  CHECK_FALSE(r.divergence_warning);
  // in d=1 the counts are exactly geometric, so the tail estimate closes the sum
  for (double z : {0.5, 1.5}) {
    auto rz = chi_series(s, z);
    CHECK(rz.chi + rz.remainder == doctest::Approx((2 + z) / (2 - z)).epsilon(1e-12));
  }
  CHECK(chi_series(s, 1.999).divergence_warning);
  CHECK(chi_series(s, 2.5).divergence_warning);
}

TEST_CASE("lace extraction") {
  auto s = enumerate(StepDistribution::nearest_neighbor(2), 8);
  auto lace = extract_lace(s);
  CHECK(lace.exact(2, Site{0, 0}) == Rational(-1, 4));
  CHECK(lace.pi[2].size() == 1);
  auto rec = check_reconstruction(s, lace);
  CHECK(rec.exact_match);
  CHECK(rec.checked == 7);

  for (int d : {1, 3}) {
    auto sd = enumerate(StepDistribution::nearest_neighbor(d), 4);
    auto ld = extract_lace(sd);
    CHECK(ld.exact(2, Site(d, 0)) == Rational(-1, 2 * d));
  }
  auto s1 = enumerate(StepDistribution::nearest_neighbor(1), 8);
  auto l1 = extract_lace(s1);
  // hand recursion: pi_3 = c_3 - D*c_2 - pi_2*c_1 puts 1/8 at each of +-1
  CHECK(l1.pi[3].size() == 2);
  CHECK(l1.exact(3, Site{1}) == Rational(1, 8));
  CHECK(l1.exact(3, Site{-1}) == Rational(1, 8));
  // bipartite lattice: odd-length coefficients vanish at even sites
  for (int m = 3; m <= 8; m += 2)
    for (const auto& [x, v] : l1.pi[m]) CHECK(x[0] % 2 != 0);

  // double mode agrees with rational mode
  EnumOptions o;
  o.mode = SeriesMode::Double;
  auto sdbl = enumerate(StepDistribution::nearest_neighbor(2), 8, o);
  auto ldbl = extract_lace(sdbl);
  for (int m = 2; m <= 8; ++m)
    for (const auto& [x, v] : lace.pi[m]) CHECK(std::abs(ldbl.pi[m][x] - v) < 1e-12);
  CHECK(check_reconstruction(sdbl, ldbl).max_abs_error < 1e-12);
}

TEST_CASE("lace extraction for a power-law step set") {
  EnumOptions o;
  o.support_radius = 2;
  auto s = enumerate(StepDistribution::power_law(1, 1, 1.5), 7, o);
  auto lace = extract_lace(s);
  CHECK(check_reconstruction(s, lace).max_abs_error < 1e-12);
}

TEST_CASE("G from the lace coefficients matches the direct series") {
  auto s = enumerate(StepDistribution::nearest_neighbor(2), 10);
  auto lace = extract_lace(s);
  const double z = 0.1;
  auto Pi = lace.Pi(z);
  SiteMap<double> D;
  for (const auto& [x, p] : s.steps) D[x] = p;
  for (auto k : std::vector<std::vector<double>>{{0, 0}, {0.3, 1.1}, {std::numbers::pi, 0.5}}) {
    double direct = 0;
    for (int n = 0; n <= 10; ++n) direct += hat(s.c[n], k) * std::pow(z, n);
    const double via_lace = 1.0 / (1.0 - z * hat(D, k) - hat(Pi, k));
    CHECK(std::abs(direct - via_lace) < 1e-10);
  }
}

TEST_CASE("bubble and the differential inequality") {
  auto s = enumerate(StepDistribution::nearest_neighbor(2), 10);
  CHECK(bubble_saw(s, 0.0) == 1.0);
  auto r0 = check_diff_inequality(s, 0.0, 1.5, 1.0);
  CHECK(r0.chi == 1.0);
  CHECK(r0.lower_holds);
  CHECK(r0.upper_holds);

  EnumOptions o;
  o.budget = 25;
  auto one = enumerate(StepDistribution::nearest_neighbor(1), 25, o);
  for (double z : {0.2, 0.8, 1.4}) {
    auto r = check_diff_inequality(one, z, 2.0, std::numeric_limits<double>::infinity());
    CHECK(r.upper_vacuous);
    CHECK(r.lower_holds);
    CHECK(r.lower == doctest::Approx(2 / (2 - z)));
  }

  auto chi = chi_series(s, 0.2);
  const double zc = chi.zc_estimate;
  CHECK(zc > 1.3);
  CHECK(zc < 1.7);
  auto r = check_diff_inequality(s, 0.2, zc, bubble_saw(s, zc));
  CHECK(r.lower_holds);
  CHECK(r.upper_holds);
  CHECK(r.lower_margin > 0);
  CHECK_FALSE(r.truncation_dominated);
}
