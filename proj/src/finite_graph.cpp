#include "lacelab/finite_graph.hpp"

#include <cmath>
#include <map>

namespace lacelab {

SmallTorus::SmallTorus(int d_, int M_) : d(d_), M(M_) {
  if (d < 1) throw Error("d must be >= 1");
  if (M < 2) throw Error("M must be >= 2");
  double n = std::pow(static_cast<double>(M), d);
  if (n > 1e8) throw Error("torus too large");
  n_sites = static_cast<std::int64_t>(n + 0.5);
}

std::int64_t SmallTorus::index(const Site& x) const {
  std::int64_t i = 0, stride = 1;
  for (int j = 0; j < d; ++j) {
    i += static_cast<std::int64_t>(((x[j] % M) + M) % M) * stride;
    stride *= M;
  }
  return i;
}

Site SmallTorus::coords(std::int64_t i) const {
  Site x(d);
  for (int j = 0; j < d; ++j) {
    x[j] = static_cast<int>(i % M);
    i /= M;
  }
  return x;
}

Site SmallTorus::displacement(std::int64_t x, std::int64_t y) const {
  Site a = coords(x), b = coords(y), r(d);
  for (int j = 0; j < d; ++j) {
    int v = ((b[j] - a[j]) % M + M) % M;
    if (2 * v > M) v -= M;
    r[j] = v;
  }
  return r;
}

std::int64_t SmallTorus::sub(std::int64_t y, std::int64_t x) const {
  Site a = coords(x), b = coords(y);
  for (int j = 0; j < d; ++j) b[j] -= a[j];
  return index(b);
}

std::vector<WeightedPair> torus_pairs(const SmallTorus& t, const std::vector<std::pair<Site, double>>& kernel,
                                      double R) {
  std::vector<double> folded(t.n_sites, 0.0);
  for (const auto& [x, w] : kernel) folded[t.index(x)] += w;
  std::vector<WeightedPair> out;
  for (std::int64_t u = 0; u < t.n_sites; ++u)
    for (std::int64_t v = u + 1; v < t.n_sites; ++v) {
      const double w = folded[t.sub(v, u)];
      if (w <= 0) continue;
      double r2 = 0;
      for (int c : t.displacement(u, v)) r2 += double(c) * c;
      if (std::sqrt(r2) > R + 1e-12) continue;
      out.push_back({static_cast<int>(u), static_cast<int>(v), w});
    }
  return out;
}

std::vector<std::pair<Site, double>> kernel_of(const StepDistribution& dist) {
  std::vector<std::pair<Site, double>> k;
  dist.for_each_support([&](std::span<const int> x, double w) { k.emplace_back(Site(x.begin(), x.end()), w); });
  return k;
}

double tail_beyond(const StepDistribution& dist, double R) {
  double outside = 0;
  dist.for_each_support([&](std::span<const int> x, double w) {
    double r2 = 0;
    for (int c : x) r2 += double(c) * c;
    if (std::sqrt(r2) > R + 1e-12) outside += w;
  });
  return outside + dist.tail_mass();
}

}  // namespace lacelab
