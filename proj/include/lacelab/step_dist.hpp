#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace lacelab {

/// Thrown for malformed inputs (dimension mismatch, bad parameters).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Site = std::vector<int>;

enum class Family { NearestNeighbor, UniformSpreadOut, PowerLaw };

std::string to_string(Family f);
Family family_from_string(const std::string& s);

/// Symmetric step distribution on Z^d with D(0) = 0.
///
/// The power-law family has infinite support. It is enumerated over the
/// Euclidean ball |x| <= support_radius(); the mass outside that ball is
/// estimated by the radial integral of h and reported as tail_mass(). The
/// normalization includes the same tail estimate, so enumerated mass plus
/// tail_mass() is one.
class StepDistribution {
 public:
  static StepDistribution nearest_neighbor(int d);
  static StepDistribution uniform_spread_out(int d, int L);
  /// `radius` overrides the default truncation; `point_budget` caps the
  /// number of enumerated support points when the radius is chosen
  /// automatically.
  static StepDistribution power_law(int d, int L, double alpha,
                                    std::optional<int> radius = std::nullopt,
                                    std::int64_t point_budget = 4'000'000);

  Family family() const { return family_; }
  int dim() const { return d_; }
  int spread() const { return L_; }
  double alpha() const { return alpha_; }
  /// Exponent alpha ^ 2 (2 for the finite-variance families).
  double infrared_exponent() const;
  double norm_const() const { return norm_; }
  /// Radius of the enumerated support: 1 for NN, L (sup-norm) for uniform
  /// spread-out, Euclidean radius for power-law.
  int support_radius() const { return radius_; }
  /// Mass of D outside the enumerated support (0 for finite-support families).
  double tail_mass() const { return tail_; }
  std::int64_t support_size() const { return support_size_; }

  /// D(x), exact per the family formula.
  double operator()(std::span<const int> x) const;
  double sup_norm() const;

  /// D^(k) = sum_x D(x) cos(k.x). Closed form for NN and uniform spread-out.
  /// For power-law the enumerated support is summed and the tail mass is
  /// credited at k = 0 only; the error elsewhere is at most tail_mass().
  double fourier(std::span<const double> k) const;
  /// Same quantity by brute summation over the support (test oracle path).
  double fourier_support_sum(std::span<const double> k) const;

  /// Calls f(x, D(x)) for every enumerated support point.
  template <class F>
  void for_each_support(F&& f) const;

  nlohmann::json to_json() const;
  static StepDistribution from_json(const nlohmann::json& j);

 private:
  StepDistribution() = default;
  double weight(std::span<const int> x) const;  // unnormalized h(x/L)
  void check_dim(std::size_t n) const;

  Family family_ = Family::NearestNeighbor;
  int d_ = 1;
  int L_ = 1;
  double alpha_ = 0.0;
  int radius_ = 1;
  double norm_ = 1.0;
  double tail_ = 0.0;
  std::int64_t support_size_ = 0;
};

struct MomentEntry {
  double kappa = 0;
  double partial_sum = 0;
  double tail_estimate = 0;   // analytic remainder beyond the support (finite case)
  double shell_growth = 0;    // log2 ratio of the last two dyadic shell masses
  bool divergent = false;     // analytic verdict (kappa >= alpha for power-law)
  bool numeric_divergent = false;
};

struct ConditionReport {
  double c1_hat = 0;
  std::vector<double> c1_witness;
  double c2_hat = 0;
  std::vector<double> c2_witness;
  double sup_D = 0;
  double exponent = 2;        // alpha ^ 2
  bool d3_required = true;    // NN is not covered by (D3)
  std::vector<MomentEntry> moments;
  std::vector<std::string> violations;
  bool ok = false;
  nlohmann::json to_json() const;
};

/// Scans the dual torus of side grid_res and a refined box ||k||_inf <= 1/L
/// to estimate the constants in (D2)/(D3), and tabulates the moments used
/// by (D1)/(D1').
ConditionReport verify_conditions(const StepDistribution& dist, int grid_res, double eps = 0.1);

/// Finite coupling table J(x) >= 0.
struct CouplingTable {
  int d = 1;
  std::vector<std::pair<Site, double>> entries;
  /// Couplings J(x) = D(x) over the support of a step distribution.
  static CouplingTable from_distribution(const StepDistribution& dist);
};

struct IsingTau {
  double tau = 0;
  std::vector<std::pair<Site, double>> D;  // tanh(zJ(x)) / tau
};

/// tau(z) = sum_y tanh(z J(y)), D(x) = tanh(z J(x)) / tau(z).
IsingTau ising_tau(const CouplingTable& J, double z);

// ---------------------------------------------------------------------------

inline int isqrt(std::int64_t n) {
  auto r = static_cast<std::int64_t>(std::sqrt(static_cast<double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return static_cast<int>(r);
}

template <class F>
void StepDistribution::for_each_support(F&& f) const {
  std::vector<int> x(d_, 0);
  switch (family_) {
    case Family::NearestNeighbor: {
      const double p = 1.0 / (2.0 * d_);
      for (int j = 0; j < d_; ++j) {
        for (int s : {1, -1}) {
          x[j] = s;
          f(std::span<const int>(x), p);
          x[j] = 0;
        }
      }
      return;
    }
    case Family::UniformSpreadOut: {
      const int R = radius_;
      std::fill(x.begin(), x.end(), -R);
      while (true) {
        bool origin = true;
        for (int v : x) origin = origin && v == 0;
        if (!origin) f(std::span<const int>(x), 1.0 / norm_);
        int j = d_ - 1;
        while (j >= 0 && x[j] == R) x[j--] = -R;
        if (j < 0) return;
        ++x[j];
      }
    }
    case Family::PowerLaw: {
      const std::int64_t R2 = static_cast<std::int64_t>(radius_) * radius_;
      // coordinate j ranges over |x_j| <= sqrt(R^2 - sum_{i<j} x_i^2)
      auto rec = [&](auto&& self, int j, std::int64_t used) -> void {
        if (j == d_) {
          if (used > 0) f(std::span<const int>(x), (*this)(x));
          return;
        }
        const int room = isqrt(R2 - used);
        for (int v = -room; v <= room; ++v) {
          x[j] = v;
          self(self, j + 1, used + static_cast<std::int64_t>(v) * v);
        }
        x[j] = 0;
      };
      rec(rec, 0, 0);
      return;
    }
  }
}

}  // namespace lacelab
