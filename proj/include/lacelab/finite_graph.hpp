#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "lacelab/step_dist.hpp"

namespace lacelab {

/// Periodic box {0..M-1}^d with any side M >= 2 (odd sides allowed, unlike
/// TorusGrid). Site 0 is the origin.
struct SmallTorus {
  int d = 1;
  int M = 2;
  std::int64_t n_sites = 2;

  SmallTorus(int d, int M);
  std::int64_t index(const Site& x) const;  // wraps
  Site coords(std::int64_t i) const;
  /// Minimal-image displacement y - x, components in (-M/2, M/2].
  Site displacement(std::int64_t x, std::int64_t y) const;
  std::int64_t sub(std::int64_t y, std::int64_t x) const;  // index of y - x
};

struct WeightedPair {
  int u = 0, v = 0;   // u < v
  double weight = 0;  // folded kernel value at v - u
};

/// Unordered pairs {x, y} of the torus whose minimal-image Euclidean distance
/// is at most R, weighted by the folded kernel K_M(y-x) = sum_n K(y-x+nM).
/// Only pairs with positive weight are kept.
std::vector<WeightedPair> torus_pairs(const SmallTorus& t, const std::vector<std::pair<Site, double>>& kernel,
                                      double R);

/// Support of a step distribution as a kernel list.
std::vector<std::pair<Site, double>> kernel_of(const StepDistribution& dist);

/// e_R = sum_{|v| > R} D(v) over Z^d, including mass beyond the enumerated support.
double tail_beyond(const StepDistribution& dist, double R);

}  // namespace lacelab
