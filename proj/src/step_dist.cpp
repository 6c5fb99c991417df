#include "lacelab/step_dist.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace lacelab {

namespace {

constexpr double kTailTarget = 1e-9;

double ball_volume(int d) {
  return std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
}

double sphere_area(int d) {
  return 2.0 * std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0);
}

// sum_{|y| > r} h(y/L) approximated by the radial integral of L^{d+a} |y|^{-d-a}
// (valid for r >= L), with the lattice sum replaced from r onwards by
// `power` = kappa - alpha - ... handled by the caller.
double radial_tail(int d, int L, double alpha, double r, double kappa = 0.0) {
  return std::pow(static_cast<double>(L), d + alpha) * sphere_area(d) *
         std::pow(r, kappa - alpha) / (alpha - kappa);
}

}  // namespace

std::string to_string(Family f) {
  switch (f) {
    case Family::NearestNeighbor: return "nn";
    case Family::UniformSpreadOut: return "uniform";
    case Family::PowerLaw: return "powerlaw";
  }
  return "?";
}

Family family_from_string(const std::string& s) {
  if (s == "nn" || s == "nearest_neighbor" || s == "NearestNeighbor") return Family::NearestNeighbor;
  if (s == "uniform" || s == "uso" || s == "uniform_spread_out" || s == "UniformSpreadOut")
    return Family::UniformSpreadOut;
  if (s == "powerlaw" || s == "power_law" || s == "PowerLaw") return Family::PowerLaw;
  throw Error("family: unknown value '" + s + "'");
}

StepDistribution StepDistribution::nearest_neighbor(int d) {
  if (d < 1) throw Error("d: must be a positive integer");
  StepDistribution D;
  D.family_ = Family::NearestNeighbor;
  D.d_ = d;
  D.L_ = 1;
  D.radius_ = 1;
  D.norm_ = 2.0 * d;
  D.support_size_ = 2 * d;
  return D;
}

StepDistribution StepDistribution::uniform_spread_out(int d, int L) {
  if (d < 1) throw Error("d: must be a positive integer");
  if (L < 1) throw Error("L: must be a positive integer");
  StepDistribution D;
  D.family_ = Family::UniformSpreadOut;
  D.d_ = d;
  D.L_ = L;
  D.radius_ = L;
  D.norm_ = std::pow(2.0 * L + 1.0, d) - 1.0;
  D.support_size_ = static_cast<std::int64_t>(std::llround(D.norm_));
  return D;
}

StepDistribution StepDistribution::power_law(int d, int L, double alpha, std::optional<int> radius,
                                             std::int64_t point_budget) {
  if (d < 1) throw Error("d: must be a positive integer");
  if (L < 1) throw Error("L: must be a positive integer");
  if (!(alpha > 0)) throw Error("alpha: must be positive");
  StepDistribution D;
  D.family_ = Family::PowerLaw;
  D.d_ = d;
  D.L_ = L;
  D.alpha_ = alpha;

  int R = 0;
  if (radius) {
    if (*radius < L) throw Error("truncation: must be at least L");
    R = *radius;
  } else {
    // crude lower bound on the normalization: all points with |x| <= L carry h = 1
    const double norm_lb = std::max(2.0 * d, ball_volume(d) * std::pow(L, d) - 1.0);
    const double r_tail =
        std::pow(radial_tail(d, L, alpha, 1.0) / (kTailTarget * norm_lb), 1.0 / alpha);
    const double r_budget = std::pow(static_cast<double>(point_budget) / ball_volume(d), 1.0 / d);
    R = static_cast<int>(std::max<double>(L, std::min({r_tail, r_budget, 1e9})));
  }
  D.radius_ = R;
  D.norm_ = 1.0;

  double sum = 0.0;
  std::int64_t count = 0;
  D.for_each_support([&](std::span<const int> x, double) {
    sum += D.weight(x);
    ++count;
  });
  D.support_size_ = count;
  // volume-matched radius of the enumerated ball (origin included)
  const double r_eff = std::pow((count + 1) / ball_volume(d), 1.0 / d);
  const double tail = radial_tail(d, L, alpha, r_eff);
  D.norm_ = sum + tail;
  D.tail_ = tail / D.norm_;
  return D;
}

double StepDistribution::infrared_exponent() const {
  return family_ == Family::PowerLaw ? std::min(alpha_, 2.0) : 2.0;
}

void StepDistribution::check_dim(std::size_t n) const {
  if (n != static_cast<std::size_t>(d_))
    throw Error("dimension mismatch: expected " + std::to_string(d_) + " coordinates, got " +
                std::to_string(n));
}

double StepDistribution::weight(std::span<const int> x) const {
  double r2 = 0;
  for (int v : x) r2 += static_cast<double>(v) * v;
  const double l2 = static_cast<double>(L_) * L_;
  if (r2 <= l2) return 1.0;
  return std::pow(r2 / l2, -(d_ + alpha_) / 2.0);
}

double StepDistribution::operator()(std::span<const int> x) const {
  check_dim(x.size());
  bool origin = true;
  for (int v : x) origin = origin && v == 0;
  if (origin) return 0.0;
  switch (family_) {
    case Family::NearestNeighbor: {
      int l1 = 0;
      for (int v : x) l1 += std::abs(v);
      return l1 == 1 ? 1.0 / (2.0 * d_) : 0.0;
    }
    case Family::UniformSpreadOut: {
      for (int v : x)
        if (std::abs(v) > L_) return 0.0;
      return 1.0 / norm_;
    }
    case Family::PowerLaw: return weight(x) / norm_;
  }
  return 0.0;
}

double StepDistribution::sup_norm() const {
  switch (family_) {
    case Family::NearestNeighbor: return 1.0 / (2.0 * d_);
    case Family::UniformSpreadOut:
    case Family::PowerLaw: return 1.0 / norm_;
  }
  return 0.0;
}

namespace {
bool is_zero_mod_2pi(std::span<const double> k) {
  for (double v : k) {
    const double r = std::remainder(v, 2.0 * std::numbers::pi);
    if (std::abs(r) > 1e-12) return false;
  }
  return true;
}
}  // namespace

double StepDistribution::fourier(std::span<const double> k) const {
  check_dim(k.size());
  switch (family_) {
    case Family::NearestNeighbor: {
      double s = 0;
      for (double v : k) s += std::cos(v);
      return s / d_;
    }
    case Family::UniformSpreadOut: {
      double prod = 1.0;
      for (double v : k) {
        double g = 1.0;
        for (int n = 1; n <= L_; ++n) g += 2.0 * std::cos(n * v);
        prod *= g;
      }
      return (prod - 1.0) / norm_;
    }
    case Family::PowerLaw: {
      // D is invariant under coordinate sign flips, so cos(k.x) may be
      // replaced by prod_j cos(k_j x_j); tabulate the per-axis factors.
      const int R = radius_;
      std::vector<std::vector<double>> table(d_, std::vector<double>(2 * R + 1));
      for (int j = 0; j < d_; ++j)
        for (int v = -R; v <= R; ++v) table[j][v + R] = std::cos(k[j] * v);
      double s = 0;
      for_each_support([&](std::span<const int> x, double p) {
        double c = p;
        for (int j = 0; j < d_; ++j) c *= table[j][x[j] + R];
        s += c;
      });
      if (is_zero_mod_2pi(k)) s += tail_;
      return s;
    }
  }
  return 0.0;
}

double StepDistribution::fourier_support_sum(std::span<const double> k) const {
  check_dim(k.size());
  double s = 0;
  for_each_support([&](std::span<const int> x, double p) {
    double phase = 0;
    for (int j = 0; j < d_; ++j) phase += k[j] * x[j];
    s += p * std::cos(phase);
  });
  if (family_ == Family::PowerLaw && is_zero_mod_2pi(k)) s += tail_;
  return s;
}

nlohmann::json StepDistribution::to_json() const {
  nlohmann::json j{{"family", to_string(family_)}, {"d", d_}};
  if (family_ != Family::NearestNeighbor) j["L"] = L_;
  if (family_ == Family::PowerLaw) {
    j["alpha"] = alpha_;
    j["truncation"] = radius_;
    j["tail"] = tail_;
    j["norm_const"] = norm_;
  }
  return j;
}

StepDistribution StepDistribution::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("distribution: expected a JSON object");
  auto get_int = [&](const char* key, std::optional<int> def) -> int {
    if (!j.contains(key)) {
      if (def) return *def;
      throw Error(std::string(key) + ": required field missing");
    }
    if (!j.at(key).is_number_integer()) throw Error(std::string(key) + ": expected an integer");
    return j.at(key).get<int>();
  };
  if (!j.contains("family") || !j.at("family").is_string())
    throw Error("family: required string field missing");
  const Family f = family_from_string(j.at("family").get<std::string>());
  const int d = get_int("d", std::nullopt);
  if (d < 1) throw Error("d: must be a positive integer");
  switch (f) {
    case Family::NearestNeighbor: return nearest_neighbor(d);
    case Family::UniformSpreadOut: return uniform_spread_out(d, get_int("L", std::nullopt));
    case Family::PowerLaw: {
      if (!j.contains("alpha") || !j.at("alpha").is_number())
        throw Error("alpha: required numeric field missing");
      std::optional<int> trunc;
      if (j.contains("truncation") && !j.at("truncation").is_null())
        trunc = get_int("truncation", std::nullopt);
      return power_law(d, get_int("L", 1), j.at("alpha").get<double>(), trunc);
    }
  }
  throw Error("family: unsupported");
}

// ---------------------------------------------------------------------------

namespace {

// Calls f(m) for every non-decreasing sequence 0 <= m_1 <= ... <= m_d <= top.
template <class F>
void for_each_chamber(int d, int top, F&& f) {
  std::vector<int> m(d, 0);
  while (true) {
    f(std::span<const int>(m));
    int j = d - 1;
    while (j >= 0 && m[j] == top) --j;
    if (j < 0) return;
    ++m[j];
    for (int i = j + 1; i < d; ++i) m[i] = m[j];
  }
}

double norm2(std::span<const double> k) {
  double s = 0;
  for (double v : k) s += v * v;
  return std::sqrt(s);
}

double norm_inf(std::span<const double> k) {
  double s = 0;
  for (double v : k) s = std::max(s, std::abs(v));
  return s;
}

MomentEntry moment(const StepDistribution& dist, double kappa, double eps) {
  MomentEntry e;
  e.kappa = kappa;
  if (dist.family() != Family::PowerLaw) {
    dist.for_each_support([&](std::span<const int> x, double p) {
      double r2 = 0;
      for (int v : x) r2 += static_cast<double>(v) * v;
      e.partial_sum += std::pow(r2, kappa / 2.0) * p;
    });
    return e;
  }
  const double alpha = dist.alpha();
  const int R = dist.support_radius();
  const int shells = static_cast<int>(std::floor(std::log2(static_cast<double>(R)))) + 1;
  std::vector<double> shell(shells + 1, 0.0);
  dist.for_each_support([&](std::span<const int> x, double p) {
    double r2 = 0;
    for (int v : x) r2 += static_cast<double>(v) * v;
    const double r = std::sqrt(r2);
    const double w = std::pow(r, kappa) * p;
    e.partial_sum += w;
    const int j = std::min(shells, static_cast<int>(std::floor(std::log2(r))));
    shell[j] += w;
  });
  // shell j covers [2^j, 2^{j+1}); complete when 2^{j+1} <= R
  const int last = static_cast<int>(std::floor(std::log2(static_cast<double>(R)))) - 1;
  if (last >= 1 && shell[last - 1] > 0) {
    e.shell_growth = std::log2(shell[last] / shell[last - 1]);
    e.numeric_divergent = e.shell_growth >= -eps / 2.0;
  } else {
    e.shell_growth = std::numeric_limits<double>::quiet_NaN();
  }
  e.divergent = kappa >= alpha;
  if (!e.divergent) {
    const double r_eff =
        std::pow((dist.support_size() + 1) / ball_volume(dist.dim()), 1.0 / dist.dim());
    e.tail_estimate = radial_tail(dist.dim(), dist.spread(), alpha, r_eff, kappa) / dist.norm_const();
  } else {
    e.tail_estimate = std::numeric_limits<double>::infinity();
  }
  return e;
}

}  // namespace

ConditionReport verify_conditions(const StepDistribution& dist, int grid_res, double eps) {
  if (grid_res < 4) throw Error("grid_res: must be at least 4");
  if (!(eps > 0)) throw Error("eps: must be positive");
  const int d = dist.dim();
  const double L = dist.spread();
  const double a = dist.infrared_exponent();

  ConditionReport rep;
  rep.exponent = a;
  rep.sup_D = dist.sup_norm();
  rep.d3_required = dist.family() != Family::NearestNeighbor;
  rep.c1_hat = std::numeric_limits<double>::infinity();
  rep.c2_hat = std::numeric_limits<double>::infinity();
  double c2_low = std::numeric_limits<double>::infinity();   // min 1 - D^ on ||k|| >= 1/L
  double c2_high = std::numeric_limits<double>::infinity();  // min 1 + D^ everywhere
  std::vector<double> low_w, high_w;

  std::vector<double> k(d);
  auto visit = [&](std::span<const double> kk) {
    const double one_minus = 1.0 - dist.fourier(kk);
    const double kinf = norm_inf(kk);
    const double k2 = norm2(kk);
    if (k2 == 0) return;
    if (kinf <= 1.0 / L + 1e-15) {
      const double c1 = one_minus / (std::pow(L, a) * std::pow(k2, a));
      if (c1 < rep.c1_hat) {
        rep.c1_hat = c1;
        rep.c1_witness.assign(kk.begin(), kk.end());
      }
    }
    if (kinf >= 1.0 / L - 1e-15 && one_minus < c2_low) {
      c2_low = one_minus;
      low_w.assign(kk.begin(), kk.end());
    }
    if (1.0 + (1.0 - one_minus) < c2_high) {
      c2_high = 2.0 - one_minus;
      high_w.assign(kk.begin(), kk.end());
    }
  };

  // dual torus of side grid_res, reduced to the chamber 0 <= k_1 <= ... <= k_d
  const int half = grid_res / 2;
  for_each_chamber(d, half, [&](std::span<const int> m) {
    for (int j = 0; j < d; ++j) k[j] = 2.0 * std::numbers::pi * m[j] / grid_res;
    visit(k);
  });
  // refined box ||k||_inf <= 1/L
  for_each_chamber(d, half, [&](std::span<const int> m) {
    for (int j = 0; j < d; ++j) k[j] = (1.0 / L) * m[j] / half;
    visit(k);
  });

  if (c2_low <= c2_high) {
    rep.c2_hat = c2_low;
    rep.c2_witness = low_w;
  } else {
    rep.c2_hat = c2_high;
    rep.c2_witness = high_w;
  }

  auto witness = [](const std::vector<double>& w) {
    std::string s = "k=(";
    for (std::size_t i = 0; i < w.size(); ++i) s += (i ? "," : "") + std::to_string(w[i]);
    return s + ")";
  };
  if (!(rep.c1_hat > 0))
    rep.violations.push_back("infrared lower bound fails at " + witness(rep.c1_witness));
  if (!(rep.c2_hat > 0) && rep.d3_required)
    rep.violations.push_back("(D3) gap constant not positive at " + witness(rep.c2_witness));

  std::vector<double> kappas{2.0, 2.0 + eps};
  if (dist.family() == Family::PowerLaw) {
    if (dist.alpha() - eps > 0) kappas.push_back(dist.alpha() - eps);
    kappas.push_back(dist.alpha());
  }
  for (double kap : kappas) rep.moments.push_back(moment(dist, kap, eps));

  // (D1) asks for a finite (2+eps) moment, (D1') for finite moments below alpha
  if (dist.family() == Family::PowerLaw) {
    if (dist.alpha() - eps > 0) {
      const auto& m = rep.moments[2];
      if (m.divergent) rep.violations.push_back("(D1') moment alpha-eps diverges");
    }
  } else if (rep.moments[1].divergent) {
    rep.violations.push_back("(D1) moment 2+eps diverges");
  }
  rep.ok = rep.violations.empty();
  return rep;
}

nlohmann::json ConditionReport::to_json() const {
  nlohmann::json moments_json = nlohmann::json::array();
  for (const auto& m : moments) {
    nlohmann::json e{{"kappa", m.kappa}};
    if (m.divergent)
      e["value"] = "divergent";
    else
      e["value"] = m.partial_sum;
    e["partial_sum"] = m.partial_sum;
    e["tail_estimate"] = std::isfinite(m.tail_estimate) ? nlohmann::json(m.tail_estimate)
                                                          : nlohmann::json("infinite");
    e["shell_growth"] = std::isfinite(m.shell_growth) ? nlohmann::json(m.shell_growth)
                                                        : nlohmann::json(nullptr);
    e["numeric_divergent"] = m.numeric_divergent;
    moments_json.push_back(e);
  }
  return {{"c1_hat", c1_hat},       {"c1_witness", c1_witness}, {"c2_hat", c2_hat},
          {"c2_witness", c2_witness}, {"sup_D", sup_D},           {"exponent", exponent},
          {"d3_required", d3_required}, {"moments", moments_json}, {"violations", violations},
          {"ok", ok}};
}

// ---------------------------------------------------------------------------

CouplingTable CouplingTable::from_distribution(const StepDistribution& dist) {
  CouplingTable t;
  t.d = dist.dim();
  dist.for_each_support([&](std::span<const int> x, double p) {
    t.entries.emplace_back(Site(x.begin(), x.end()), p);
  });
  return t;
}

IsingTau ising_tau(const CouplingTable& J, double z) {
  if (z < 0) throw Error("z: must be non-negative");
  IsingTau out;
  for (const auto& [x, j] : J.entries) {
    if (x.size() != static_cast<std::size_t>(J.d)) throw Error("coupling table: dimension mismatch");
    if (j < 0) throw Error("coupling table: J must be non-negative (ferromagnetic)");
    out.tau += std::tanh(z * j);
  }
  if (!(out.tau > 0)) throw Error("undefined normalization: tau(z) = 0");
  for (const auto& [x, j] : J.entries) out.D.emplace_back(x, std::tanh(z * j) / out.tau);
  return out;
}

}  // namespace lacelab
