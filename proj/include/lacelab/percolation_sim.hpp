#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lacelab/finite_graph.hpp"
#include "lacelab/step_dist.hpp"

namespace lacelab {

struct Bond {
  int u = 0, v = 0;
  double weight = 0;  // dp/dz below clipping: the kernel value D_M(v-u)
  double p = 0;       // min(1, z * weight)
};

/// Finite bond-percolation graph. Site 0 plays the origin.
struct BondGraph {
  int n_sites = 0;
  double z = 0;
  std::vector<Bond> bonds;
  std::vector<std::vector<std::pair<int, int>>> adj;  // site -> (neighbor, bond id)
  std::optional<SmallTorus> torus;                    // set for translation-invariant graphs
  double e_R = 0;                                     // kernel mass beyond the cutoff
  double R = 0;
  double origin_weight = 0;                           // sum of weights of bonds at the origin
  bool clipped = false;
  std::vector<std::string> warnings;

  /// Folded kernel on the torus {0..M-1}^d, unordered pairs with minimal-image distance <= R.
  static BondGraph on_torus(const StepDistribution& dist, int M, double z, double R);
  /// Explicit graph; p = min(1, z * weight).
  static BondGraph custom(int n_sites, const std::vector<WeightedPair>& pairs, double z);
  BondGraph at(double z_new) const;  // same bonds, new z

  nlohmann::json to_json() const;

 private:
  void finish();
};

struct PercConfig {
  std::uint64_t seed = 0;
  int replicas = 20;
  int samples_per_replica = 500;
  int threads = 0;
};

struct ClusterStats {
  std::map<int, std::int64_t> histogram;  // |C(0)| -> count
  std::vector<double> connectivity;       // P(0 <-> x), x = site index
  double chi_hat = 0, se = 0;
  double theta_hat = 0, theta_se = 0;     // finite-volume proxy: |C(0)| > sqrt(sites)
  double theta_cutoff = 0;
  std::int64_t samples = 0;
  int replicas = 0;
  std::vector<std::string> warnings;
  nlohmann::json to_json() const;
};

/// Origin cluster of one sample, revealing only bonds incident to reached sites.
std::vector<int> reveal_cluster_lazy(const BondGraph& g, std::uint64_t seed, std::uint32_t replica,
                                     std::uint32_t sample);
/// Same sample with every bond drawn and merged by union-find.
std::vector<int> reveal_cluster_full(const BondGraph& g, std::uint64_t seed, std::uint32_t replica,
                                     std::uint32_t sample);

ClusterStats sample_cluster(const BondGraph& g, const PercConfig& cfg);

struct ExactPerc {
  double chi = 0;
  std::vector<double> size_law;          // P(|C(0)| = k), index k
  std::vector<double> connectivity;      // P(0 <-> x)
  std::vector<std::vector<double>> pair; // P(x <-> y); empty above the size guard
  double dchi_dz = 0;                    // product-rule derivative of the configuration polynomial
  double theta = 0;                      // same proxy as ClusterStats
  int bonds = 0;
  double tail(int n) const;              // P(|C(0)| >= n)
  nlohmann::json to_json() const;
};

inline constexpr int kMaxExactBonds = 20;

ExactPerc exact_small(const BondGraph& g);

struct RussoReport {
  double dchi_polynomial = 0;
  double pivotal_sum = 0;
  double finite_difference = 0;
  double abs_diff = 0;
  bool identity_holds = false;   // |polynomial - pivotal| <= 1e-12
  double chi = 0;
  double upper = 0;              // chi^2
  bool upper_holds = false;
  double nabla = 0;
  double lower = 0;              // chi^2 * origin_weight - chi^2 * nabla
  bool lower_holds = false;
  nlohmann::json to_json() const;
};

RussoReport russo_check(const BondGraph& g, const ExactPerc& e, double dz = 1e-6);

/// nabla = sum_v W(0,v) (G G G)(v, 0) with the pair-connectivity matrix.
double restricted_triangle(const BondGraph& g, const std::vector<std::vector<double>>& pair);
/// Translation-averaged form on a torus graph: G(x,y) = G0(y - x), evaluated by direct convolution.
double restricted_triangle(const BondGraph& g, const std::vector<double>& g0);

struct MagnetizationReport {
  int n = 0;
  double h = 0;
  double M = 0;                 // M(z, h)
  double tail = 0;              // P(|C| >= n)
  double upper = 0;             // M(z, 1/n) / (1 - e^{-1})
  bool upper_holds = false;
  double eps = 1;
  double lower = 0;             // M(z, eps/n) - (eps/n) sum_{k<n} P(|C| >= k)
  bool lower_holds = false;
  nlohmann::json to_json() const;
};

/// M(z,h) = sum_k (1 - e^{-kh}) P(|C| = k).
double magnetization(const std::vector<double>& size_law, double h);
std::vector<double> size_law_from_histogram(const std::map<int, std::int64_t>& hist);
MagnetizationReport magnetization_tail(const std::vector<double>& size_law, int n, double h, double eps = 1.0);

}  // namespace lacelab
