#include "lacelab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "lacelab/philox.hpp"

namespace lacelab {

namespace {

// digit tables make l +- k index arithmetic cheap inside the pair loops
struct IndexMath {
  int d, M;
  std::int64_t N;
  std::vector<int> digits;  // N * d, uncentered
  explicit IndexMath(const TorusGrid& g) : d(g.dim()), M(g.side()), N(g.size()), digits(N * d) {
    for (std::int64_t i = 0; i < N; ++i) {
      std::int64_t r = i;
      for (int j = 0; j < d; ++j) {
        digits[i * d + j] = static_cast<int>(r % M);
        r /= M;
      }
    }
  }
  std::int64_t add(std::int64_t a, std::int64_t b, int sign) const {
    std::int64_t idx = 0, stride = 1;
    for (int j = 0; j < d; ++j) {
      int v = digits[a * d + j] + sign * digits[b * d + j];
      v = ((v % M) + M) % M;
      idx += v * stride;
      stride *= M;
    }
    return idx;
  }
};

TorusField kfield(const TorusGrid& g, const std::vector<double>& v) {
  TorusField f(g, Space::K);
  for (std::size_t i = 0; i < v.size(); ++i) f.v[i] = v[i];
  return f;
}

TorusField conv(const TorusField& a, const TorusField& b) {
  return a.grid.size() <= 4096 ? convolve_direct(a, b) : convolve(a, b);
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double max_asym(const TorusGrid& g, const std::vector<double>& v) {
  double a = 0;
  for (std::int64_t i = 0; i < g.size(); ++i) a = std::max(a, std::abs(v[i] - v[g.neg(i)]));
  return a;
}

}  // namespace

// ---------------------------------------------------------------------------

void TwoPointInput::validate() {
  const auto N = static_cast<std::size_t>(grid.size());
  if (Ghat.size() != N || Dhat.size() != N) throw Error("two-point input: field size does not match the grid");
  if (Ghat_se && Ghat_se->size() != N) throw Error("two-point input: se size does not match the grid");
  double scale = 0;
  for (double g : Ghat) scale = std::max(scale, std::abs(g));
  if (max_asym(grid, Ghat) > 1e-10 * std::max(scale, 1.0)) throw Error("two-point input: Ghat is not symmetric");
  if (max_asym(grid, Dhat) > 1e-12) throw Error("two-point input: Dhat is not symmetric");
  if (std::abs(chi - Ghat[0]) > 1e-9 * std::max(1.0, std::abs(chi))) throw Error("two-point input: chi != Ghat(0)");
  if (Ghat[0] < 1 - 1e-12) throw Error("two-point input: chi must be >= 1");
  chi = Ghat[0];
  lambda = std::clamp(1 - 1 / chi, 0.0, 1.0);
  if (tau < 0) throw Error("two-point input: tau must be >= 0");
}

double TwoPointInput::noise_band() const {
  if (!Ghat_se) return 0;
  return 3 * *std::max_element(Ghat_se->begin(), Ghat_se->end());
}

nlohmann::json TwoPointInput::to_json() const {
  nlohmann::json j{{"grid", {{"d", grid.dim()}, {"M", grid.side()}}},
                   {"Ghat", Ghat},
                   {"Dhat", Dhat},
                   {"tau", tau},
                   {"chi", chi},
                   {"lambda", lambda},
                   {"source", source}};
  if (Ghat_se) j["Ghat_se"] = *Ghat_se;
  return j;
}

TwoPointInput TwoPointInput::from_json(const nlohmann::json& j) {
  TwoPointInput in;
  in.grid = TorusGrid(j.at("grid").at("d").get<int>(), j.at("grid").at("M").get<int>());
  in.Ghat = j.at("Ghat").get<std::vector<double>>();
  in.Dhat = j.at("Dhat").get<std::vector<double>>();
  in.tau = j.at("tau").get<double>();
  in.chi = j.contains("chi") ? j.at("chi").get<double>() : (in.Ghat.empty() ? 1.0 : in.Ghat[0]);
  if (j.contains("Ghat_se")) in.Ghat_se = j.at("Ghat_se").get<std::vector<double>>();
  in.source = j.value("source", "json");
  in.validate();
  return in;
}

TwoPointInput free_model_input(const StepDistribution& dist, const TorusGrid& grid, double z) {
  if (z < 0 || z >= 1) throw Error("free model needs 0 <= z < 1");
  TwoPointInput in;
  in.grid = grid;
  in.Dhat = dft(fold_distribution(dist, grid)).real_part();
  in.Ghat.resize(in.Dhat.size());
  for (std::size_t i = 0; i < in.Dhat.size(); ++i) in.Ghat[i] = 1 / (1 - z * in.Dhat[i]);
  in.tau = z;
  in.chi = in.Ghat[0];
  in.source = "free model C_z";
  in.validate();
  return in;
}

TwoPointInput ising_input(const SpinGraph& g, double z, const SpinSample& s) {
  if (!g.torus) throw Error("ising input needs a torus spin graph");
  TorusGrid grid(g.torus->d, g.torus->M);
  TorusField Gx(grid, Space::X), Dx(grid, Space::X);
  for (int x = 0; x < g.n; ++x) Gx.v[x] = s.G[x];
  double tau = 0, jsum = 0;
  for (auto [y, J] : g.adj[0]) {
    tau += std::tanh(z * J);
    jsum += J;
  }
  if (jsum <= 0) throw Error("ising input: origin has no couplings");
  for (auto [y, J] : g.adj[0]) Dx.v[y] += tau > 0 ? std::tanh(z * J) / tau : J / jsum;  // z -> 0 limit
  TwoPointInput in;
  in.grid = grid;
  in.Ghat = dft(Gx).real_part();
  in.Dhat = dft(Dx).real_part();
  in.tau = tau;
  in.chi = in.Ghat[0];
  if (!s.exact) {
    // independent-error propagation of the per-site standard errors
    double v = 0;
    for (double e : s.G_se) v += e * e;
    in.Ghat_se = std::vector<double>(in.Ghat.size(), std::sqrt(v));
  }
  in.source = s.exact ? "exact Ising" : "Metropolis Ising";
  in.validate();
  return in;
}

// ---------------------------------------------------------------------------

DiagramReport bubble_triangle(const TwoPointInput& in) {
  const auto N = in.Ghat.size();
  std::vector<double> g2(N), g3(N), dg3(N), bt(N);
  for (std::size_t k = 0; k < N; ++k) {
    const double G = in.Ghat[k], D = in.Dhat[k];
    g2[k] = G * G;
    g3[k] = G * G * G;
    dg3[k] = D * G * G * G;
    bt[k] = in.tau * D * G * in.tau * D * G;
  }
  DiagramReport r;
  r.B = mean(g2);
  r.T = mean(g3);
  r.nabla = mean(dg3);
  r.B_tilde = mean(bt);

  TorusField G = idft(kfield(in.grid, in.Ghat)), D = idft(kfield(in.grid, in.Dhat));
  for (auto& v : G.v) v = v.real();
  for (auto& v : D.v) v = v.real();
  TorusField GG = conv(G, G), GGG = conv(GG, G), DGGG = conv(D, GGG);
  TorusField Gt = conv(D, G);
  for (auto& v : Gt.v) v *= in.tau;
  TorusField GtGt = conv(Gt, Gt);
  r.B_x = GG.v[0].real();
  r.T_x = GGG.v[0].real();
  r.nabla_x = DGGG.v[0].real();
  r.B_tilde_x = GtGt.v[0].real();
  for (auto [a, b] : {std::pair{r.B, r.B_x}, {r.T, r.T_x}, {r.nabla, r.nabla_x}, {r.B_tilde, r.B_tilde_x}})
    r.parseval_max_diff = std::max(r.parseval_max_diff, std::abs(a - b) / std::max(1.0, std::abs(a)));
  r.parseval_ok = r.parseval_max_diff <= 1e-9;

  r.open_bubble_max = -INFINITY;
  r.open_tilde_max = -INFINITY;
  for (std::size_t x = 0; x < N; ++x) {
    r.open_bubble_max = std::max(r.open_bubble_max, GG.v[x].real());
    r.open_tilde_max = std::max(r.open_tilde_max, GtGt.v[x].real());
  }
  const double tol = 1e-12 * std::max(1.0, r.B);
  r.open_le_closed = r.open_bubble_max <= r.B_x + tol && r.open_tilde_max <= r.B_tilde_x + tol;
  const double band = in.noise_band() * 2 * std::max(1.0, r.B);
  r.open_le_closed_within_noise =
      r.open_bubble_max <= r.B_x + tol + band && r.open_tilde_max <= r.B_tilde_x + tol + band;
  return r;
}

nlohmann::json DiagramReport::to_json() const {
  return {{"B", B},
          {"T", T},
          {"nabla", nabla},
          {"B_tilde", B_tilde},
          {"xspace", {{"B", B_x}, {"T", T_x}, {"nabla", nabla_x}, {"B_tilde", B_tilde_x}}},
          {"parseval_max_diff", parseval_max_diff},
          {"parseval_ok", parseval_ok},
          {"open_bubble_max", open_bubble_max},
          {"open_tilde_max", open_tilde_max},
          {"open_le_closed", open_le_closed},
          {"open_le_closed_within_noise", open_le_closed_within_noise}};
}

// ---------------------------------------------------------------------------

ChainReport chain_of_bubbles(const TwoPointInput& in) {
  TorusField G = idft(kfield(in.grid, in.Ghat)), D = idft(kfield(in.grid, in.Dhat));
  for (auto& v : G.v) v = v.real();
  for (auto& v : D.v) v = v.real();
  TorusField b = conv(D, G);
  for (auto& v : b.v) {
    const double gt = in.tau * v.real();
    v = gt * gt;
  }
  auto mass = [](const TorusField& f) {
    double s = 0;
    for (auto v : f.v) s += v.real();
    return s;
  };
  ChainReport r;
  r.B_tilde = mass(b);
  r.geometric = r.B_tilde / (1 - r.B_tilde);
  if (r.B_tilde >= 0.5) {
    r.refused = true;
    return r;
  }
  TorusField psi = b, term = b;
  r.iterations = 1;
  while (mass(term) >= 1e-12 && r.iterations < 100000) {
    term = conv(term, b);
    for (auto& v : term.v) v = v.real();
    for (std::size_t i = 0; i < psi.v.size(); ++i) psi.v[i] += term.v[i];
    ++r.iterations;
  }
  r.psi_mass = mass(psi);
  r.bound_holds = r.psi_mass <= 2 * r.B_tilde + 1e-12;
  return r;
}

nlohmann::json ChainReport::to_json() const {
  return {{"refused", refused},       {"B_tilde", B_tilde},      {"psi_mass", psi_mass},
          {"geometric", geometric},   {"iterations", iterations}, {"bound", 2 * B_tilde},
          {"bound_holds", bound_holds}};
}

// ---------------------------------------------------------------------------

double U_lambda(const TwoPointInput& in, std::int64_t k, std::int64_t l) {
  const std::int64_t lm = in.grid.sub(l, k), lp = in.grid.add(l, k);
  const double Cm = in.C_lambda(lm), C0 = in.C_lambda(l), Cp = in.C_lambda(lp);
  return 200 * (1 - in.lambda * in.Dhat[k]) * (Cm * C0 + C0 * Cp + Cm * Cp);
}

BootstrapReport bootstrap_f(const TwoPointInput& in, std::int64_t random_pairs, std::uint64_t seed) {
  BootstrapReport r;
  const std::int64_t N = in.grid.size();
  r.f1 = in.tau;
  r.f2 = -INFINITY;
  for (std::int64_t k = 0; k < N; ++k) r.f2 = std::max(r.f2, in.Ghat[k] * (1 - in.lambda * in.Dhat[k]));

  IndexMath im(in.grid);
  std::vector<double> C(N);
  for (std::int64_t k = 0; k < N; ++k) C[k] = in.C_lambda(k);
  std::int64_t bk = 0, bl = 0;
  auto visit = [&](std::int64_t k, std::int64_t l) {
    const std::int64_t lm = im.add(l, k, -1), lp = im.add(l, k, 1);
    const double delta = std::abs(in.Ghat[lm] + in.Ghat[lp] - 2 * in.Ghat[l]);
    if (delta == 0) return;
    const double U = 200 * (1 - in.lambda * in.Dhat[k]) * (C[lm] * C[l] + C[l] * C[lp] + C[lm] * C[lp]);
    const double q = delta / U;
    if (q > r.f3) {
      r.f3 = q;
      bk = k;
      bl = l;
    }
  };
  if (N <= kExhaustivePairSites) {
    r.f3_mode = "exhaustive";
    for (std::int64_t k = 0; k < N; ++k)
      for (std::int64_t l = 0; l < N; ++l) visit(k, l);
    r.f3_pairs = N * N;
  } else {
    r.f3_mode = "randomized";
    PhiloxStream rng(seed, 0x66330000u, 0);
    for (std::int64_t i = 0; i < random_pairs; ++i) {
      const auto k = static_cast<std::int64_t>(rng.below(N));
      visit(k, static_cast<std::int64_t>(rng.below(N)));
    }
    r.f3_pairs = random_pairs;
  }
  r.f3_argmax_k = in.grid.dual(bk);
  r.f3_argmax_l = in.grid.dual(bl);
  return r;
}

nlohmann::json BootstrapReport::to_json() const {
  return {{"f1", f1},         {"f2", f2},           {"f3", f3},          {"f3_mode", f3_mode},
          {"f3_pairs", f3_pairs}, {"f3_argmax_k", f3_argmax_k}, {"f3_argmax_l", f3_argmax_l},
          {"f", std::max({f1, f2, f3})}};
}

InfraredReport infrared_check(const TwoPointInput& in) {
  InfraredReport r;
  std::int64_t arg = 0;
  for (std::int64_t k = 0; k < in.grid.size(); ++k) {
    const double rho = in.Ghat[k] * (1 / in.chi + in.tau * (1 - in.Dhat[k]));
    if (std::abs(rho - 1) > r.sup_deviation) {
      r.sup_deviation = std::abs(rho - 1);
      arg = k;
    }
  }
  r.argmax_k = in.grid.dual(arg);
  return r;
}

nlohmann::json InfraredReport::to_json() const {
  return {{"sup_deviation", sup_deviation}, {"argmax_k", argmax_k}};
}

// ---------------------------------------------------------------------------

nlohmann::json InequalityRecord::to_json() const { return {{"lhs", lhs}, {"rhs", rhs}, {"holds", holds}}; }

namespace {

struct TrigData {
  std::vector<double> A, abs_hat;
  explicit TrigData(const TorusField& a) {
    if (a.space != Space::X) throw Error("trig lemma: a must be an x-space field");
    if (a.asymmetry() > 1e-14 || a.max_imag() > 0) throw Error("trig lemma: a must be real and symmetric");
    auto ah = dft(a).real_part();
    TorusField absa(a.grid, Space::X);
    for (std::size_t i = 0; i < a.v.size(); ++i) absa.v[i] = std::abs(a.v[i].real());
    abs_hat = dft(absa).real_part();
    A.resize(ah.size());
    for (std::size_t i = 0; i < ah.size(); ++i) {
      if (std::abs(ah[i]) >= 1) throw Error("trig lemma: sup |a^| must be < 1");
      A[i] = 1 / (1 - ah[i]);
    }
  }
  InequalityRecord eval(const IndexMath& im, std::int64_t k, std::int64_t l) const {
    const std::int64_t lm = im.add(l, k, -1), lp = im.add(l, k, 1);
    InequalityRecord r;
    r.lhs = std::abs(A[lm] + A[lp] - 2 * A[l]);
    const double dk = abs_hat[0] - abs_hat[k], dl = abs_hat[0] - abs_hat[l];
    r.rhs = (A[lm] + A[lp]) * A[l] * dk + 8 * A[lm] * A[l] * A[lp] * dl * dk;
    r.holds = r.lhs <= r.rhs + 1e-12 * std::max(1.0, r.rhs);
    return r;
  }
};

}  // namespace

InequalityRecord trig_lemma_check(const TorusField& a, std::int64_t k, std::int64_t l) {
  TrigData t(a);
  return t.eval(IndexMath(a.grid), k, l);
}

SweepRecord trig_lemma_sweep(const TorusField& a) {
  if (a.grid.size() > kExhaustivePairSites) throw Error("trig lemma sweep limited to 4096 sites");
  TrigData t(a);
  IndexMath im(a.grid);
  SweepRecord s;
  for (std::int64_t k = 0; k < a.grid.size(); ++k)
    for (std::int64_t l = 0; l < a.grid.size(); ++l) {
      auto r = t.eval(im, k, l);
      ++s.checked;
      s.violations += !r.holds;
      if (r.rhs > 0) s.worst_ratio = std::max(s.worst_ratio, r.lhs / r.rhs);
    }
  return s;
}

nlohmann::json SweepRecord::to_json() const {
  return {{"checked", checked}, {"violations", violations}, {"worst_ratio", worst_ratio}};
}

InequalityRecord cos_split_check(const std::vector<double>& t) {
  if (t.empty()) throw Error("cos split: need at least one part");
  const double N = static_cast<double>(t.size()) - 1;
  InequalityRecord r;
  double total = 0, sum = 0;
  for (double tn : t) {
    total += tn;
    sum += 1 - std::cos(tn);
  }
  r.lhs = 1 - std::cos(total);
  r.rhs = (2 * N + 3) * sum;
  r.holds = r.lhs <= r.rhs + 1e-12;
  return r;
}

DeltaRecord delta_vs_cos_sum_check(const TorusField& g, std::int64_t k, std::int64_t l) {
  if (g.space != Space::X) throw Error("delta check: g must be an x-space field");
  if (g.asymmetry() > 1e-12 * std::max(1.0, g.l1())) throw Error("delta check: g must be symmetric");
  const TorusField gh = dft(g);
  DeltaRecord r;
  r.lhs = std::abs(delta_k(gh, k, l).real());
  r.rhs = one_minus_cos_sum(g, k);
  const double tol = 1e-12 * std::max(1.0, g.l1());
  r.holds = r.lhs <= r.rhs + tol;
  r.holds_factor2 = r.lhs <= 2 * r.rhs + tol;
  return r;
}

nlohmann::json DeltaRecord::to_json() const {
  return {{"lhs", lhs}, {"rhs", rhs}, {"holds", holds}, {"rhs_factor2", 2 * rhs}, {"holds_factor2", holds_factor2}};
}

namespace {

struct CosGData {
  IndexMath im;
  std::vector<double> G, cosine;  // cosine[r] = cos(2 pi r / M)
  double cc = 0;                  // (C_lambda * C_lambda)(0)
  double band = 0;
  explicit CosGData(const TwoPointInput& in) : im(in.grid) {
    G = idft(kfield(in.grid, in.Ghat)).real_part();
    const int M = in.grid.side();
    for (int r = 0; r < M; ++r) cosine.push_back(std::cos(2 * std::numbers::pi * r / M));
    for (std::int64_t q = 0; q < in.grid.size(); ++q) cc += in.C_lambda(q) * in.C_lambda(q);
    cc /= static_cast<double>(in.grid.size());
    band = in.noise_band();
  }
  InequalityRecord eval(const TwoPointInput& in, std::int64_t k, double K) const {
    InequalityRecord r;
    const int d = im.d, M = im.M;
    for (std::int64_t x = 0; x < im.N; ++x) {
      int dot = 0;
      for (int j = 0; j < d; ++j) dot += im.digits[k * d + j] * im.digits[x * d + j];
      r.lhs = std::max(r.lhs, (1 - cosine[dot % M]) * G[x]);
    }
    r.rhs = 300 * K * (1 - in.lambda * in.Dhat[k]) * cc;
    r.holds = r.lhs <= r.rhs + 1e-12 + band;
    return r;
  }
};

}  // namespace

InequalityRecord cos_g_bound_check(const TwoPointInput& in, std::int64_t k, double K) {
  return CosGData(in).eval(in, k, K);
}

SweepRecord cos_g_bound_sweep(const TwoPointInput& in, double K) {
  CosGData data(in);
  SweepRecord s;
  for (std::int64_t k = 0; k < in.grid.size(); ++k) {
    auto r = data.eval(in, k, K);
    ++s.checked;
    s.violations += !r.holds;
    if (r.rhs > 0) s.worst_ratio = std::max(s.worst_ratio, r.lhs / r.rhs);
  }
  return s;
}

IdentityRecord c_lambda_identity_check(const std::vector<double>& Dhat, const std::vector<double>& lambdas) {
  IdentityRecord r;
  r.min_value = INFINITY;
  r.max_value = -INFINITY;
  for (double lam : lambdas) {
    if (lam < 0 || lam > 1) throw Error("lambda must lie in [0,1]");
    for (double D : Dhat) {
      const double den = 1 - lam * D;
      if (den <= 0) continue;  // lambda = 1 at D^ = 1
      const double value = (1 - D) / den;
      const double identity = 1 + (lam - 1) * D / den;
      r.max_identity_error = std::max(r.max_identity_error, std::abs(value - identity));
      r.min_value = std::min(r.min_value, value);
      r.max_value = std::max(r.max_value, value);
      ++r.checked;
    }
  }
  r.holds = r.max_identity_error <= 1e-12 && r.min_value >= -1e-15 && r.max_value <= 2 + 1e-12;
  return r;
}

nlohmann::json IdentityRecord::to_json() const {
  return {{"max_identity_error", max_identity_error},
          {"min_value", min_value},
          {"max_value", max_value},
          {"checked", checked},
          {"holds", holds}};
}

BTildeChain b_tilde_chain(const TwoPointInput& in, double K) {
  BTildeChain r;
  r.K = K;
  r.B_tilde = bubble_triangle(in).B_tilde;
  const std::int64_t N = in.grid.size();
  double direct = 0, beta = 0;
  for (std::int64_t k = 0; k < N; ++k) {
    const double dc = in.Dhat[k] * in.C_lambda(k);
    direct += dc * dc;
    if (k != 0) beta += in.Dhat[k] * in.Dhat[k] / ((1 - in.Dhat[k]) * (1 - in.Dhat[k]));
  }
  const double K4 = K * K * K * K;
  r.direct = K4 * direct / N;
  r.beta_grid = beta / N;
  r.via_beta = K4 * (in.chi * in.chi * in.Dhat[0] * in.Dhat[0] / N + 4 * r.beta_grid);
  const double tol = 1e-12 * std::max(1.0, r.via_beta);
  r.holds = r.B_tilde <= r.direct + tol + in.noise_band() && r.direct <= r.via_beta + tol;
  return r;
}

nlohmann::json BTildeChain::to_json() const {
  return {{"B_tilde", B_tilde}, {"K", K},       {"direct", direct},
          {"via_beta", via_beta}, {"beta_grid", beta_grid}, {"holds", holds}};
}

}  // namespace lacelab
