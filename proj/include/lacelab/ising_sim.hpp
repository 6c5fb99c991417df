#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lacelab/finite_graph.hpp"
#include "lacelab/step_dist.hpp"

namespace lacelab {

/// Ferromagnetic pair couplings on a finite vertex set; spin 0 is the origin.
/// Boltzmann weight exp(z sum_{pairs} J_ij phi_i phi_j + h sum_i phi_i).
struct SpinGraph {
  int n = 0;
  std::vector<WeightedPair> couplings;                 // weight = J_ij >= 0
  std::vector<std::vector<std::pair<int, double>>> adj;
  std::optional<SmallTorus> torus;                     // translation-invariant graphs
  double R = 0;

  static SpinGraph custom(int n, const std::vector<WeightedPair>& couplings);
  /// Folded couplings J_M on {0..M-1}^d for pairs within minimal-image distance R.
  static SpinGraph on_torus(const CouplingTable& J, int M, double R);
  double coupling_sum_at_origin() const;
  nlohmann::json to_json() const;

 private:
  void finish();
};

/// Couplings beyond the cutoff: sum_{|x|>R} tanh(z J(x)) and the same over all x (= tau).
struct CouplingTail {
  double tail = 0, tau = 0;
};
CouplingTail coupling_tail(const CouplingTable& J, double z, double R);

struct SpinSample {
  std::vector<double> G, G_se;   // <phi_0 phi_x>, x = site index
  double chi = 0, chi_se = 0;    // sum_x G(x)
  double chi_var = 0, chi_var_se = 0;  // (<m^2> - <m>^2) / n
  double M = 0, M_se = 0;        // <phi_0> (translation-averaged on tori)
  bool exact = false;
  std::vector<std::vector<double>> pair;  // exact only, empty above the size guard
  std::vector<std::string> warnings;
  nlohmann::json to_json() const;
};

inline constexpr int kMaxExactSpins = 20;

SpinSample exact_ising(const SpinGraph& g, double z, double h);

struct MetropolisConfig {
  double z = 0, h = 0;
  int sweeps = 2000;    // measured sweeps per replica
  int burn_in = 200;
  int thinning = 1;
  int replicas = 16;
  std::uint64_t seed = 0;
  int threads = 0;
};

SpinSample metropolis(const SpinGraph& g, const MetropolisConfig& cfg);

/// |estimate - exact| <= k sigma for chi and M.
bool within_sigma(const SpinSample& mc, const SpinSample& exact, double k);

struct SingleStepReport {
  std::vector<double> lhs, rhs;  // G(0,x) - delta_{0x},  sum_y tanh(z J_{0y}) G(y,x)
  double max_violation = 0;      // max(lhs - rhs), <= 0 when the bound holds
  bool holds = false;
  nlohmann::json to_json() const;
};

/// Needs the full pair matrix (exact) or a translation-averaged G on a torus graph.
SingleStepReport single_step_check(const SpinGraph& g, double z, const SpinSample& s, double slack = 1e-12);

}  // namespace lacelab
