#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lacelab/step_dist.hpp"
#include "lacelab/torus_fourier.hpp"

namespace lacelab {

/// Visits every point of the dual torus of side M as (D^(k), ||k||_inf, weight).
/// For NN and uniform spread-out the points are grouped into orbits of the
/// hyperoctahedral group and D^ is evaluated in closed form, so the number of
/// calls is C(M/2 + d, d) rather than M^d; weights sum to M^d either way.
/// Power-law distributions go through the folded kernel and an FFT and need
/// M^d <= max_sites.
void for_each_dual(const StepDistribution& dist, int M,
                   const std::function<void(double dhat, double kinf, double weight)>& f,
                   std::int64_t max_sites = std::int64_t{1} << 24);

/// C^_z(k) = 1 / (1 - z D^_M(k)) for 0 <= z < 1.
TorusField greens_c(const StepDistribution& dist, const TorusGrid& grid, double z);

/// D^{*n}(0) by n-1 torus convolutions of the folded kernel.
double return_probability(const StepDistribution& dist, const TorusGrid& grid, int n);
/// M^{-d} sum_k D^(k)^n.
double return_probability_kspace(const StepDistribution& dist, int M, int n);

/// M^{-d} sum_{k != 0} D^(k)^2 / [1 - D^(k)]^s.
double beta_kspace(const StepDistribution& dist, int M, int s);
/// (D*C1*D*C1)(0) for s=2, (C1*D*C1*D*C1)(0) for s=3, with the k=0 mode of C1 removed.
double beta_xspace(const StepDistribution& dist, const TorusGrid& grid, int s);

struct BetaPoint {
  int M = 0;
  double value = 0;
};

struct BetaReport {
  int s = 2;
  int M = 0;
  double beta_kspace = 0;
  double beta_xspace = 0;     // NaN when the grid exceeds the x-space budget
  bool xspace_computed = false;
  double sup_d = 0;
  std::string zero_mode_policy;
  std::vector<BetaPoint> refinement;  // M, 2M, 4M
  double refinement_ratio = 0;        // |b(4M)-b(2M)| / |b(2M)-b(M)|
  double relative_change = 0;         // |b(4M)-b(2M)| / b(4M)
  bool divergence_flag = false;
  double analytic_threshold = 0;      // (alpha ^ 2) s
  double cs_threshold = 0;            // 2 (alpha ^ 2) s, needed by the Cauchy-Schwarz route
  bool analytic_finite = false;
  std::vector<std::string> warnings;
  nlohmann::json to_json() const;
};

/// Ratio above which three refinements are declared non-convergent.
inline constexpr double kDivergenceRatio = 0.9;

BetaReport beta(const StepDistribution& dist, const TorusGrid& grid, int s,
                std::int64_t xspace_max_sites = std::int64_t{1} << 22);

struct ScalingRow {
  int param = 0;                  // d for NN, L for spread-out
  std::vector<BetaPoint> seq;
  double beta = 0;                // finest grid
  double extrapolated = 0;        // Aitken limit of the refinement sequence
  double scaled = 0;              // param-scaled extrapolated value
  double scaled_finest = 0;       // param-scaled finest-grid value
  bool divergence_flag = false;
};

struct ScalingTable {
  std::string family;
  int s = 2;
  std::vector<ScalingRow> rows;
  bool non_increasing = false;    // scaled column non-increasing in the sweep direction
  double max_over_min = 0;        // of the scaled column
  bool any_divergence = false;
  nlohmann::json to_json() const;
  std::string to_csv() const;
};

/// d * beta(d) over the listed dimensions; grids of side M_j for each d.
ScalingTable beta_scaling_nn(const std::vector<int>& ds, int s, const std::vector<int>& Ms);
/// L^d * beta(L) for uniform spread-out in dimension d; grid sides mult_j * L.
ScalingTable beta_scaling_uniform(int d, const std::vector<int>& Ls, int s,
                                  const std::vector<int>& multipliers);
/// L^d * beta(L) for the power-law family (FFT path; grid sides mult_j * L).
ScalingTable beta_scaling_power_law(int d, double alpha, const std::vector<int>& Ls, int s,
                                    const std::vector<int>& multipliers);

double aitken(double a0, double a1, double a2);

struct BoundDiagnostics {
  double beta = 0;
  double d4_kspace = 0;          // M^{-d} sum_k D^^4 = D^{*4}(0)
  double d4_convolution = 0;     // from return_probability, NaN above the size guard
  double inv_moment = 0;         // M^{-d} sum_{k != 0} [1 - D^]^{-2s}
  double cs_rhs = 0;
  bool cs_holds = false;
  double inner = 0;              // contribution of 0 < ||k||_inf <= 1/L
  double outer = 0;              // contribution of ||k||_inf > 1/L
  double inner_scaled = 0;       // inner * L^d
  double outer_scaled = 0;
  nlohmann::json to_json() const;
};

BoundDiagnostics bound_diagnostics(const StepDistribution& dist, const TorusGrid& grid, int s);

}  // namespace lacelab
