#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "lacelab/step_dist.hpp"

namespace lacelab {

using cplx = std::complex<double>;

/// Periodic box Z^d / M Z^d. Sites are stored with index sum_j (x_j mod M) M^j;
/// coordinates are reported in the centered domain {-M/2, ..., M/2-1}.
class TorusGrid {
 public:
  TorusGrid(int d, int M);

  int dim() const { return d_; }
  int side() const { return M_; }
  std::int64_t size() const { return size_; }

  int wrap(std::int64_t m) const;                        // m mod M in [0, M)
  int centered(int m) const;                             // [0,M) -> [-M/2, M/2)
  std::int64_t index(std::span<const int> x) const;      // any integer coordinates
  Site coords(std::int64_t idx) const;                   // centered
  void coords(std::int64_t idx, std::span<int> out) const;
  std::vector<double> dual(std::int64_t idx) const;      // k = 2 pi m / M, centered m
  std::int64_t neg(std::int64_t idx) const;
  std::int64_t add(std::int64_t a, std::int64_t b) const;
  std::int64_t sub(std::int64_t a, std::int64_t b) const;

  bool operator==(const TorusGrid& o) const { return d_ == o.d_ && M_ == o.M_; }

 private:
  int d_;
  int M_;
  std::int64_t size_;
};

enum class Space { X, K };

struct TorusField {
  TorusGrid grid;
  Space space;
  std::vector<cplx> v;

  TorusField(TorusGrid g, Space s) : grid(g), space(s), v(g.size(), 0.0) {}

  static TorusField delta(const TorusGrid& g);  // x-space delta at the origin
  static TorusField constant(const TorusGrid& g, Space s, double c);

  cplx& operator[](std::int64_t i) { return v[i]; }
  const cplx& operator[](std::int64_t i) const { return v[i]; }
  cplx at(std::span<const int> x) const { return v[grid.index(x)]; }

  std::vector<double> real_part() const;
  double max_imag() const;
  /// max |g(x) - g(-x)|
  double asymmetry() const;
  double l1() const;

  nlohmann::json to_json() const;
  static TorusField from_json(const nlohmann::json& j);
};

/// D_M(x) = sum over images y = x mod M of D(y). Power-law tail mass is not
/// folded in, so the values sum to 1 - tail_mass().
TorusField fold_distribution(const StepDistribution& dist, const TorusGrid& grid);

/// f^(k) = sum_x f(x) e^{i k.x} (unnormalized).
TorusField dft(const TorusField& f);
/// f(x) = M^{-d} sum_k f^(k) e^{-i k.x}.
TorusField idft(const TorusField& f);

/// Torus convolution via the transform path. Both fields must be in x-space.
TorusField convolve(const TorusField& f, const TorusField& g);
/// O(M^{2d}) direct summation; refuses grids with more than 4096 sites.
TorusField convolve_direct(const TorusField& f, const TorusField& g);

/// ghat(l-k) + ghat(l+k) - 2 ghat(l) with periodic index wrap.
cplx delta_k(const TorusField& ghat, std::int64_t k_index, std::int64_t l_index);

/// sum_x [1 - cos(k.x)] |g(x)|, x in the centered domain, k on the dual grid.
double one_minus_cos_sum(const TorusField& g, std::int64_t k_index);

}  // namespace lacelab
