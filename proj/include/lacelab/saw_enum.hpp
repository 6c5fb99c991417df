#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

#include "lacelab/step_dist.hpp"

namespace lacelab {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

enum class SeriesMode { Rational, Double };

template <class T>
using SiteMap = std::map<Site, T>;

/// c_n(x) for n = 0..n_max. For the uniform-weight families (NN and uniform
/// spread-out) every step carries weight 1/N, so c_n(x) = count_n(x) / N^n
/// and the integer counts are kept. Power-law weights are kept in double.
struct WalkSeries {
  int d = 1;
  int n_max = 0;
  SeriesMode mode = SeriesMode::Double;
  std::vector<std::pair<Site, double>> steps;  // enumerated step support and D values
  double weight_loss = 0;                      // D mass outside the step support
  bool uniform = false;
  std::int64_t step_denominator = 1;           // N with D = 1/N on the support (uniform only)
  std::vector<SiteMap<BigInt>> counts;         // uniform only
  std::vector<SiteMap<double>> c;              // always filled

  Rational exact(int n, const Site& x) const;  // uniform only
  double total(int n) const;                   // sum_x c_n(x)
  BigInt total_count(int n) const;             // sum_x count_n(x) (uniform only)
  nlohmann::json to_json() const;
};

struct EnumOptions {
  SeriesMode mode = SeriesMode::Rational;
  std::optional<int> budget;          // max n_max; default 14 (d=1), 10 (d=2), 8 (d>=3)
  std::optional<int> support_radius;  // power-law truncation of the step set
  int max_branching = 50;
  int threads = 0;                    // 0: hardware concurrency
};

int default_budget(int d);

/// Exact depth-first enumeration of self-avoiding walks with D-weights.
WalkSeries enumerate(const StepDistribution& dist, int n_max, const EnumOptions& opt = {});

struct ChiResult {
  double chi = 0;
  double remainder = 0;             // geometric tail estimate
  std::vector<double> zc_iterates;  // last three ratio estimates of z_c
  double zc_estimate = 0;           // Aitken-extrapolated
  bool divergence_warning = false;  // z at or beyond the estimated radius
  nlohmann::json to_json() const;
};

ChiResult chi_series(const WalkSeries& s, double z);

struct LaceCoefficients {
  int n_max = 0;
  SeriesMode mode = SeriesMode::Double;
  std::int64_t step_denominator = 1;
  std::vector<SiteMap<BigInt>> pi_scaled;  // pi_m(x) * N^m (rational mode), index m
  std::vector<SiteMap<double>> pi;         // index m, entries 0 and 1 empty

  Rational exact(int m, const Site& x) const;
  /// Pi_z(x) = sum_m pi_m(x) z^m
  SiteMap<double> Pi(double z) const;
  nlohmann::json to_json() const;
};

/// pi_{n+1} = c_{n+1} - D*c_n - sum_{m=2}^{n} pi_m * c_{n+1-m}.
LaceCoefficients extract_lace(const WalkSeries& s);

struct ReconstructionReport {
  bool exact_match = false;   // rational mode: every c_{n+1}(x) reproduced exactly
  double max_abs_error = 0;   // double mode
  int checked = 0;
};

/// Re-inserts pi into the recursion and compares with c_{n+1} for all n < n_max.
ReconstructionReport check_reconstruction(const WalkSeries& s, const LaceCoefficients& lace);

/// B(z) = sum_x G_z(x)^2 from the truncated series.
double bubble_saw(const WalkSeries& s, double z);

struct DiffInequality {
  double z = 0, zc = 0, B_zc = 0;
  double chi = 0, remainder = 0;
  double lower = 0, upper = 0;   // zc/(zc-z) and B(zc)(zc/(zc-z)+1)
  double lower_margin = 0, upper_margin = 0;
  bool lower_holds = false, upper_holds = false, upper_vacuous = false;
  bool truncation_dominated = false;
  nlohmann::json to_json() const;
};

DiffInequality check_diff_inequality(const WalkSeries& s, double z, double zc_est, double B_est);

}  // namespace lacelab
