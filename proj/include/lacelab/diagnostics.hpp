#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lacelab/ising_sim.hpp"
#include "lacelab/step_dist.hpp"
#include "lacelab/torus_fourier.hpp"

namespace lacelab {

/// Two-point function on the dual torus with the quantities the bootstrap needs.
/// Index conventions follow TorusGrid; index 0 is k = 0.
struct TwoPointInput {
  TorusGrid grid{1, 4};
  std::vector<double> Ghat;                 // real, symmetric
  std::vector<double> Dhat;
  double tau = 0;
  double chi = 1;                           // Ghat(0)
  double lambda = 0;                        // 1 - 1/chi
  std::optional<std::vector<double>> Ghat_se;  // sampler inputs
  std::string source;

  /// Checks shape, symmetry, chi = Ghat(0) >= 1 and fills lambda.
  void validate();
  double C_lambda(std::int64_t k) const { return 1.0 / (1.0 - lambda * Dhat[k]); }
  double noise_band() const;                // 3 sigma, 0 for exact inputs

  nlohmann::json to_json() const;
  static TwoPointInput from_json(const nlohmann::json& j);
};

/// G^ = C^_z = 1/(1 - z D^), tau = z.
TwoPointInput free_model_input(const StepDistribution& dist, const TorusGrid& grid, double z);
/// Exact Ising correlations on a torus spin graph whose side is a valid TorusGrid side.
/// tau = sum_y tanh(z J_M(y)), D = tanh(z J_M)/tau on the same torus.
TwoPointInput ising_input(const SpinGraph& g, double z, const SpinSample& s);

struct DiagramReport {
  double B = 0, T = 0, nabla = 0, B_tilde = 0;
  double B_x = 0, T_x = 0, nabla_x = 0, B_tilde_x = 0;
  double parseval_max_diff = 0;
  bool parseval_ok = false;                 // <= 1e-9 relative
  double open_bubble_max = 0;               // max_x (G*G)(x)
  double open_tilde_max = 0;                // max_x (G~*G~)(x)
  bool open_le_closed = false;
  bool open_le_closed_within_noise = false;
  nlohmann::json to_json() const;
};

DiagramReport bubble_triangle(const TwoPointInput& in);

struct ChainReport {
  bool refused = false;                     // B~ >= 1/2
  double B_tilde = 0;
  double psi_mass = 0;                      // iterated x-space convolutions
  double geometric = 0;                     // B~ / (1 - B~)
  int iterations = 0;
  bool bound_holds = false;                 // psi_mass <= 2 B~
  nlohmann::json to_json() const;
};

ChainReport chain_of_bubbles(const TwoPointInput& in);

struct BootstrapReport {
  double f1 = 0, f2 = 0, f3 = 0;
  std::string f3_mode;                      // exhaustive | randomized
  std::int64_t f3_pairs = 0;
  std::vector<double> f3_argmax_k, f3_argmax_l;
  nlohmann::json to_json() const;
};

inline constexpr std::int64_t kExhaustivePairSites = 4096;

/// U(k,l) = 200 C^(k)^{-1} [C^(l-k)C^(l) + C^(l)C^(l+k) + C^(l-k)C^(l+k)].
double U_lambda(const TwoPointInput& in, std::int64_t k, std::int64_t l);
BootstrapReport bootstrap_f(const TwoPointInput& in, std::int64_t random_pairs = 1'000'000,
                            std::uint64_t seed = 0);

struct InfraredReport {
  double sup_deviation = 0;                 // sup_k |G^(k)(1/chi + tau(1 - D^(k))) - 1|
  std::vector<double> argmax_k;
  nlohmann::json to_json() const;
};

InfraredReport infrared_check(const TwoPointInput& in);

// --- standalone inequalities --------------------------------------------------

struct InequalityRecord {
  double lhs = 0, rhs = 0;
  bool holds = false;
  nlohmann::json to_json() const;
};

/// Both sides of the second-difference bound for A^ = 1/(1 - a^), a symmetric
/// with sup |a^| < 1.
InequalityRecord trig_lemma_check(const TorusField& a, std::int64_t k, std::int64_t l);

struct SweepRecord {
  std::int64_t checked = 0;
  std::int64_t violations = 0;
  double worst_ratio = 0;                   // max lhs/rhs over rhs > 0
  nlohmann::json to_json() const;
};

/// Every (k,l) pair of the grid.
SweepRecord trig_lemma_sweep(const TorusField& a);

/// 1 - cos(sum t_n) <= (2N+3) sum_n [1 - cos t_n], N + 1 = parts.
InequalityRecord cos_split_check(const std::vector<double>& t_parts);

struct DeltaRecord {
  double lhs = 0;            // |Delta_k g^(l)|
  double rhs = 0;            // sum_x [1 - cos(k.x)] |g(x)|
  bool holds = false;
  bool holds_factor2 = false;  // against 2 * rhs
  nlohmann::json to_json() const;
};

DeltaRecord delta_vs_cos_sum_check(const TorusField& g, std::int64_t k, std::int64_t l);

/// sup_x [1 - cos(k.x)] G(x) <= 300 K (1 - lambda D^(k)) (C_lambda * C_lambda)(0).
InequalityRecord cos_g_bound_check(const TwoPointInput& in, std::int64_t k, double K);
/// The same bound at every grid k.
SweepRecord cos_g_bound_sweep(const TwoPointInput& in, double K);

struct IdentityRecord {
  double max_identity_error = 0;  // |C(1-D) - [1 + (lambda-1) D/(1 - lambda D)]|
  double min_value = 0, max_value = 0;
  bool holds = false;             // identity to 1e-12 and 0 <= value <= 2
  std::int64_t checked = 0;
  nlohmann::json to_json() const;
};

/// 0 <= C^_lambda(k)[1 - D^(k)] = 1 + (lambda - 1) D^/(1 - lambda D^) <= 2 over grid k and lambdas.
IdentityRecord c_lambda_identity_check(const std::vector<double>& Dhat, const std::vector<double>& lambdas);

struct BTildeChain {
  double B_tilde = 0;
  double K = 0;
  double direct = 0;        // K^4 M^{-d} sum_k (D^ C^_lambda)^2
  double via_beta = 0;      // K^4 [chi^2 D^(0)^2 / M^d + 4 beta_grid]
  double beta_grid = 0;     // M^{-d} sum_{k != 0} D^^2 / (1 - D^)^2
  bool holds = false;       // B~ <= direct <= via_beta
  nlohmann::json to_json() const;
};

BTildeChain b_tilde_chain(const TwoPointInput& in, double K);

}  // namespace lacelab
