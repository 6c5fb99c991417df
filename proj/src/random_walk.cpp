#include "lacelab/random_walk.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace lacelab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_s(int s) {
  if (s != 2 && s != 3) throw Error("s: must be 2 or 3");
}

// Multisets of |m_j| classes c in {0..H}, H = M/2. Class c carries 1 (c = 0 or
// c = H) or 2 centered representatives. Along the way we keep the per-axis
// aggregate (sum of cos for NN, product of g_L for uniform spread-out).
struct OrbitWalker {
  int d, H;
  bool additive;
  std::vector<double> val;    // per-class axis value
  std::vector<double> mult;
  std::vector<double> inv_fact;
  double d_fact;
  std::function<double(double)> finish;  // aggregate -> D^
  const std::function<void(double, double, double)>* f;
  double M;

  void rec(int c, int remaining, double agg, double weight, int cmax) {
    if (remaining == 0) {
      (*f)(finish(agg), 2.0 * std::numbers::pi * cmax / M, weight * d_fact);
      return;
    }
    if (c == H) {
      double a = agg;
      for (int i = 0; i < remaining; ++i) a = additive ? a + val[c] : a * val[c];
      rec(c + 1, 0, a, weight * std::pow(mult[c], remaining) * inv_fact[remaining], c);
      return;
    }
    double a = agg, w = weight;
    for (int n = 0; n <= remaining; ++n) {
      rec(c + 1, remaining - n, a, w * inv_fact[n], n > 0 ? c : cmax);
      a = additive ? a + val[c] : a * val[c];
      w *= mult[c];
    }
  }
};

}  // namespace

void for_each_dual(const StepDistribution& dist, int M,
                   const std::function<void(double, double, double)>& f, std::int64_t max_sites) {
  if (M < 4 || M % 2 != 0) throw Error("M: must be even and at least 4");
  const int d = dist.dim();
  if (dist.family() == Family::PowerLaw) {
    if (std::pow(static_cast<double>(M), d) > static_cast<double>(max_sites))
      throw Error("grid too large for the transform path: M^d = " + std::to_string(std::pow(M, d)));
    TorusGrid grid(d, M);
    const TorusField Dh = dft(fold_distribution(dist, grid));
    std::vector<int> m(d);
    for (std::int64_t i = 0; i < grid.size(); ++i) {
      grid.coords(i, m);
      int cmax = 0;
      for (int v : m) cmax = std::max(cmax, std::abs(v));
      f(Dh.v[i].real(), 2.0 * std::numbers::pi * cmax / M, 1.0);
    }
    return;
  }
  const int H = M / 2;
  OrbitWalker w;
  w.d = d;
  w.H = H;
  w.M = M;
  w.f = &f;
  w.mult.assign(H + 1, 2.0);
  w.mult[0] = 1.0;
  w.mult[H] = 1.0;
  w.val.resize(H + 1);
  w.inv_fact.resize(d + 1);
  w.inv_fact[0] = 1.0;
  for (int n = 1; n <= d; ++n) w.inv_fact[n] = w.inv_fact[n - 1] / n;
  w.d_fact = 1.0 / w.inv_fact[d];
  if (dist.family() == Family::NearestNeighbor) {
    w.additive = true;
    for (int c = 0; c <= H; ++c) w.val[c] = std::cos(2.0 * std::numbers::pi * c / M);
    w.finish = [d](double a) { return a / d; };
    w.rec(0, d, 0.0, 1.0, 0);
  } else {
    w.additive = false;
    const int L = dist.spread();
    for (int c = 0; c <= H; ++c) {
      const double t = 2.0 * std::numbers::pi * c / M;
      double g = 1.0;
      for (int n = 1; n <= L; ++n) g += 2.0 * std::cos(n * t);
      w.val[c] = g;
    }
    const double N = dist.norm_const();
    w.finish = [N](double a) { return (a - 1.0) / N; };
    w.rec(0, d, 1.0, 1.0, 0);
  }
}

TorusField greens_c(const StepDistribution& dist, const TorusGrid& grid, double z) {
  if (!(z >= 0.0 && z < 1.0)) throw Error("z: must satisfy 0 <= z < 1");
  TorusField c = dft(fold_distribution(dist, grid));
  for (auto& v : c.v) v = 1.0 / (1.0 - z * v.real());
  return c;
}

double return_probability(const StepDistribution& dist, const TorusGrid& grid, int n) {
  if (n < 0) throw Error("n: must be non-negative");
  if (n == 0) return 1.0;
  const TorusField D = fold_distribution(dist, grid);
  TorusField acc = D;
  for (int i = 1; i < n; ++i) acc = convolve(acc, D);
  return acc.v[0].real();
}

double return_probability_kspace(const StepDistribution& dist, int M, int n) {
  if (n < 0) throw Error("n: must be non-negative");
  double s = 0, total = 0;
  for_each_dual(dist, M, [&](double dh, double, double w) {
    s += w * std::pow(dh, n);
    total += w;
  });
  return s / total;
}

double beta_kspace(const StepDistribution& dist, int M, int s) {
  check_s(s);
  double sum = 0, total = 0;
  // the zero mode is the unique point with ||k||_inf = 0
  for_each_dual(dist, M, [&](double dh, double kinf, double w) {
    total += w;
    if (kinf == 0.0) return;
    sum += w * dh * dh / std::pow(1.0 - dh, s);
  });
  return sum / total;
}

double beta_xspace(const StepDistribution& dist, const TorusGrid& grid, int s) {
  check_s(s);
  const TorusField D = fold_distribution(dist, grid);
  TorusField C1 = dft(D);
  for (std::int64_t i = 0; i < grid.size(); ++i)
    C1.v[i] = i == 0 ? cplx(0.0) : cplx(1.0 / (1.0 - C1.v[i].real()));
  C1 = idft(C1);
  const TorusField X = convolve(D, C1);
  auto at_origin = [&](const TorusField& a, const TorusField& b) {
    cplx sum = 0;
    for (std::int64_t y = 0; y < grid.size(); ++y) sum += a.v[y] * b.v[grid.neg(y)];
    return sum.real();
  };
  if (s == 2) return at_origin(X, X);
  return at_origin(C1, convolve(X, X));
}

BetaReport beta(const StepDistribution& dist, const TorusGrid& grid, int s,
                std::int64_t xspace_max_sites) {
  check_s(s);
  if (dist.dim() != grid.dim()) throw Error("dimension mismatch between distribution and grid");
  BetaReport r;
  r.s = s;
  r.M = grid.side();
  r.sup_d = dist.sup_norm();
  r.zero_mode_policy =
      "k=0 excluded from the quadrature; C1 has its k=0 Fourier coefficient removed";
  const double a = dist.infrared_exponent();
  r.analytic_threshold = a * s;
  r.cs_threshold = 2.0 * a * s;
  r.analytic_finite = dist.dim() > r.analytic_threshold;
  if (!r.analytic_finite) {
    std::ostringstream w;
    w << "d = " << dist.dim() << " <= (alpha^2) s = " << r.analytic_threshold
      << ": the Z^d integral diverges";
    r.warnings.push_back(w.str());
  }
  r.beta_kspace = beta_kspace(dist, grid.side(), s);
  if (grid.size() <= xspace_max_sites) {
    r.beta_xspace = beta_xspace(dist, grid, s);
    r.xspace_computed = true;
  } else {
    r.beta_xspace = kNaN;
    r.warnings.push_back("x-space form skipped: grid exceeds the convolution budget");
  }
  for (int f : {1, 2, 4}) {
    const int M = grid.side() * f;
    try {
      r.refinement.push_back({M, f == 1 ? r.beta_kspace : beta_kspace(dist, M, s)});
    } catch (const Error& e) {
      r.warnings.push_back(std::string("refinement stopped: ") + e.what());
      break;
    }
  }
  if (r.refinement.size() == 3) {
    const double d1 = std::abs(r.refinement[1].value - r.refinement[0].value);
    const double d2 = std::abs(r.refinement[2].value - r.refinement[1].value);
    r.refinement_ratio = d1 > 0 ? d2 / d1 : (d2 > 0 ? std::numeric_limits<double>::infinity() : 0.0);
    r.relative_change = d2 / std::abs(r.refinement[2].value);
    r.divergence_flag = r.refinement_ratio > kDivergenceRatio;
  }
  return r;
}

nlohmann::json BetaReport::to_json() const {
  nlohmann::json seq = nlohmann::json::array();
  for (const auto& p : refinement) seq.push_back({{"M", p.M}, {"beta", p.value}});
  return {{"s", s},
          {"M", M},
          {"beta_kspace", beta_kspace},
          {"beta_xspace", xspace_computed ? nlohmann::json(beta_xspace) : nlohmann::json(nullptr)},
          {"kspace_xspace_diff",
           xspace_computed ? nlohmann::json(std::abs(beta_kspace - beta_xspace)) : nlohmann::json(nullptr)},
          {"sup_d", sup_d},
          {"zero_mode_policy", zero_mode_policy},
          {"refinement", seq},
          {"refinement_ratio", refinement_ratio},
          {"relative_change", relative_change},
          {"divergence_flag", divergence_flag},
          {"divergence_ratio_threshold", kDivergenceRatio},
          {"analytic_threshold", analytic_threshold},
          {"cauchy_schwarz_threshold", cs_threshold},
          {"analytic_finite", analytic_finite},
          {"warnings", warnings}};
}

double aitken(double a0, double a1, double a2) {
  const double den = (a2 - a1) - (a1 - a0);
  if (den == 0.0) return a2;
  const double r = (a2 - a1) / (a1 - a0);
  // only extrapolate a monotone, contracting sequence
  if (!(r > 0 && r < 1)) return a2;
  return a2 - (a2 - a1) * (a2 - a1) / den;
}

namespace {

ScalingRow scaling_row(const StepDistribution& dist, int param, double scale, const std::vector<int>& Ms,
                       int s) {
  ScalingRow row;
  row.param = param;
  for (int M : Ms) row.seq.push_back({M, beta_kspace(dist, M, s)});
  row.beta = row.seq.back().value;
  row.extrapolated = row.beta;
  if (row.seq.size() >= 3) {
    const auto n = row.seq.size();
    const double a0 = row.seq[n - 3].value, a1 = row.seq[n - 2].value, a2 = row.seq[n - 1].value;
    row.extrapolated = aitken(a0, a1, a2);
    const double d1 = std::abs(a1 - a0), d2 = std::abs(a2 - a1);
    row.divergence_flag = d1 > 0 ? d2 / d1 > kDivergenceRatio : false;
  }
  row.scaled = scale * row.extrapolated;
  row.scaled_finest = scale * row.beta;
  return row;
}

void summarize(ScalingTable& t) {
  t.non_increasing = true;
  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (i > 0 && t.rows[i].scaled > t.rows[i - 1].scaled) t.non_increasing = false;
    lo = std::min(lo, t.rows[i].scaled);
    hi = std::max(hi, t.rows[i].scaled);
    t.any_divergence = t.any_divergence || t.rows[i].divergence_flag;
  }
  t.max_over_min = lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
}

}  // namespace

ScalingTable beta_scaling_nn(const std::vector<int>& ds, int s, const std::vector<int>& Ms) {
  check_s(s);
  ScalingTable t;
  t.family = "nn";
  t.s = s;
  for (int d : ds) t.rows.push_back(scaling_row(StepDistribution::nearest_neighbor(d), d, d, Ms, s));
  summarize(t);
  return t;
}

ScalingTable beta_scaling_uniform(int d, const std::vector<int>& Ls, int s,
                                  const std::vector<int>& multipliers) {
  check_s(s);
  ScalingTable t;
  t.family = "uniform";
  t.s = s;
  for (int L : Ls) {
    std::vector<int> Ms;
    for (int m : multipliers) Ms.push_back(m * L);
    t.rows.push_back(
        scaling_row(StepDistribution::uniform_spread_out(d, L), L, std::pow(L, d), Ms, s));
  }
  summarize(t);
  return t;
}

ScalingTable beta_scaling_power_law(int d, double alpha, const std::vector<int>& Ls, int s,
                                    const std::vector<int>& multipliers) {
  check_s(s);
  ScalingTable t;
  t.family = "powerlaw";
  t.s = s;
  for (int L : Ls) {
    std::vector<int> Ms;
    for (int m : multipliers) Ms.push_back(m * L);
    t.rows.push_back(
        scaling_row(StepDistribution::power_law(d, L, alpha), L, std::pow(L, d), Ms, s));
  }
  summarize(t);
  return t;
}

nlohmann::json ScalingTable::to_json() const {
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json seq = nlohmann::json::array();
    for (const auto& p : r.seq) seq.push_back({{"M", p.M}, {"beta", p.value}});
    rs.push_back({{"param", r.param},
                  {"sequence", seq},
                  {"beta", r.beta},
                  {"extrapolated", r.extrapolated},
                  {"extrapolation_uncertainty", std::abs(r.extrapolated - r.beta)},
                  {"scaled", r.scaled},
                  {"scaled_finest", r.scaled_finest},
                  {"divergence_flag", r.divergence_flag}});
  }
  return {{"family", family},         {"s", s},
          {"rows", rs},               {"non_increasing", non_increasing},
          {"max_over_min", max_over_min}, {"any_divergence", any_divergence}};
}

std::string ScalingTable::to_csv() const {
  std::ostringstream o;
  o.precision(12);
  o << "param,M_finest,beta,extrapolated,yerr,scaled,scaled_finest,divergence_flag\n";
  for (const auto& r : rows)
    o << r.param << ',' << r.seq.back().M << ',' << r.beta << ',' << r.extrapolated << ','
      << std::abs(r.extrapolated - r.beta) << ',' << r.scaled << ',' << r.scaled_finest << ','
      << (r.divergence_flag ? 1 : 0) << '\n';
  return o.str();
}

BoundDiagnostics bound_diagnostics(const StepDistribution& dist, const TorusGrid& grid, int s) {
  check_s(s);
  BoundDiagnostics b;
  const double L = dist.spread();
  const double cut = 1.0 / L + 1e-15;
  double total = 0;
  for_each_dual(dist, grid.side(), [&](double dh, double kinf, double w) {
    total += w;
    b.d4_kspace += w * std::pow(dh, 4);
    if (kinf == 0.0) return;
    const double term = w * dh * dh / std::pow(1.0 - dh, s);
    b.beta += term;
    b.inv_moment += w / std::pow(1.0 - dh, 2 * s);
    (kinf <= cut ? b.inner : b.outer) += term;
  });
  b.beta /= total;
  b.d4_kspace /= total;
  b.inv_moment /= total;
  b.inner /= total;
  b.outer /= total;
  b.cs_rhs = std::sqrt(b.d4_kspace) * std::sqrt(b.inv_moment);
  b.cs_holds = b.beta <= b.cs_rhs * (1 + 1e-12);
  b.inner_scaled = b.inner * std::pow(L, dist.dim());
  b.outer_scaled = b.outer * std::pow(L, dist.dim());
  b.d4_convolution = grid.size() <= (std::int64_t{1} << 20) ? return_probability(dist, grid, 4) : kNaN;
  return b;
}

nlohmann::json BoundDiagnostics::to_json() const {
  return {{"beta", beta},
          {"d4_kspace", d4_kspace},
          {"d4_convolution", std::isfinite(d4_convolution) ? nlohmann::json(d4_convolution) : nlohmann::json(nullptr)},
          {"inv_moment", inv_moment},
          {"cs_rhs", cs_rhs},
          {"cs_holds", cs_holds},
          {"inner", inner},
          {"outer", outer},
          {"inner_scaled", inner_scaled},
          {"outer_scaled", outer_scaled}};
}

}  // namespace lacelab
