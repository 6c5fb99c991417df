#include "lacelab/saw_enum.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>
#include <unordered_map>

namespace lacelab {

namespace {

Site add(const Site& a, const Site& b) {
  Site r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

template <class T>
SiteMap<T> convolve(const SiteMap<T>& f, const SiteMap<T>& g) {
  SiteMap<T> out;
  for (const auto& [x, a] : f)
    for (const auto& [y, b] : g) out[add(x, y)] += a * b;
  return out;
}

template <class T>
void drop_zeros(SiteMap<T>& m) {
  for (auto it = m.begin(); it != m.end();) it = (it->second == 0) ? m.erase(it) : std::next(it);
}

template <class T>
SiteMap<T> step_convolve(const std::vector<std::pair<Site, T>>& steps, const SiteMap<T>& g) {
  SiteMap<T> out;
  for (const auto& [x, a] : g)
    for (const auto& [y, w] : steps) out[add(x, y)] += a * w;
  return out;
}

struct TaskResult {
  std::vector<std::unordered_map<std::int64_t, std::uint64_t>> counts;
  std::vector<std::unordered_map<std::int64_t, double>> weights;
};

}  // namespace

int default_budget(int d) { return d == 1 ? 14 : d == 2 ? 10 : 8; }

WalkSeries enumerate(const StepDistribution& dist, int n_max, const EnumOptions& opt) {
  if (n_max < 0) throw Error("nmax: must be non-negative");
  const int d = dist.dim();
  const int budget = opt.budget.value_or(default_budget(d));
  if (n_max > budget)
    throw Error("nmax: " + std::to_string(n_max) + " exceeds the enumeration budget " + std::to_string(budget));

  WalkSeries s;
  s.d = d;
  s.n_max = n_max;
  s.uniform = dist.family() != Family::PowerLaw;
  s.mode = s.uniform ? opt.mode : SeriesMode::Double;

  double kept = 0;
  if (s.uniform) {
    dist.for_each_support([&](std::span<const int> x, double p) {
      s.steps.emplace_back(Site(x.begin(), x.end()), p);
      kept += p;
    });
    s.step_denominator = dist.support_size();
  } else {
    const int r = opt.support_radius.value_or(dist.spread());
    const std::int64_t r2 = static_cast<std::int64_t>(r) * r;
    dist.for_each_support([&](std::span<const int> x, double p) {
      std::int64_t n2 = 0;
      for (int v : x) n2 += static_cast<std::int64_t>(v) * v;
      if (n2 <= r2) {
        s.steps.emplace_back(Site(x.begin(), x.end()), p);
        kept += p;
      }
    });
  }
  s.weight_loss = std::max(0.0, 1.0 - kept);
  if (static_cast<int>(s.steps.size()) > opt.max_branching)
    throw Error("support_radius: branching factor " + std::to_string(s.steps.size()) + " exceeds " +
                std::to_string(opt.max_branching));

  int reach = 1;
  for (const auto& [x, p] : s.steps)
    for (int v : x) reach = std::max(reach, std::abs(v));
  const std::int64_t off = static_cast<std::int64_t>(n_max) * reach;
  const std::int64_t side = 2 * off + 1;
  double cells = 1;
  for (int j = 0; j < d; ++j) cells *= static_cast<double>(side);
  if (cells > 5e8) throw Error("nmax: enumeration box too large");
  std::vector<std::int64_t> stride(d, 1);
  for (int j = 1; j < d; ++j) stride[j] = stride[j - 1] * side;
  std::int64_t origin = 0;
  for (int j = 0; j < d; ++j) origin += off * stride[j];
  std::vector<std::int64_t> step_off(s.steps.size());
  for (std::size_t i = 0; i < s.steps.size(); ++i) {
    std::int64_t o = 0;
    for (int j = 0; j < d; ++j) o += s.steps[i].first[j] * stride[j];
    step_off[i] = o;
  }

  const std::size_t tasks = n_max == 0 ? 0 : s.steps.size();
  std::vector<TaskResult> results(tasks);
  auto run_task = [&](std::size_t first) {
    TaskResult& res = results[first];
    res.counts.resize(n_max + 1);
    res.weights.resize(n_max + 1);
    std::vector<std::uint8_t> visited(static_cast<std::size_t>(cells), 0);
    visited[origin] = 1;
    auto dfs = [&](auto&& self, std::int64_t pos, int n, double w) -> void {
      if (s.uniform)
        ++res.counts[n][pos];
      else
        res.weights[n][pos] += w;
      if (n == n_max) return;
      for (std::size_t i = 0; i < step_off.size(); ++i) {
        const std::int64_t next = pos + step_off[i];
        if (visited[next]) continue;
        visited[next] = 1;
        self(self, next, n + 1, w * s.steps[i].second);
        visited[next] = 0;
      }
    };
    const std::int64_t p1 = origin + step_off[first];
    visited[p1] = 1;
    dfs(dfs, p1, 1, s.steps[first].second);
  };

  unsigned nthreads = opt.threads > 0 ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  nthreads = std::min<unsigned>(nthreads, static_cast<unsigned>(std::max<std::size_t>(tasks, 1)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t; (t = next.fetch_add(1)) < tasks;) run_task(t);
  };
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  auto decode = [&](std::int64_t idx) {
    Site x(d);
    for (int j = 0; j < d; ++j) {
      x[j] = static_cast<int>(idx % side - off);
      idx /= side;
    }
    return x;
  };

  // merge in first-step order so double sums do not depend on scheduling
  s.c.assign(n_max + 1, {});
  s.c[0][Site(d, 0)] = 1.0;
  if (s.uniform) {
    s.counts.assign(n_max + 1, {});
    s.counts[0][Site(d, 0)] = 1;
    for (const auto& r : results)
      for (int n = 1; n <= n_max; ++n)
        for (const auto& [idx, cnt] : r.counts[n]) s.counts[n][decode(idx)] += cnt;
    for (int n = 1; n <= n_max; ++n) {
      const double scale = std::pow(static_cast<double>(s.step_denominator), -n);
      for (const auto& [x, cnt] : s.counts[n]) s.c[n][x] = static_cast<double>(cnt) * scale;
    }
  } else {
    for (const auto& r : results)
      for (int n = 1; n <= n_max; ++n) {
        // unordered_map iteration order is unspecified; sort per task before summing
        std::vector<std::pair<Site, double>> items;
        for (const auto& [idx, w] : r.weights[n]) items.emplace_back(decode(idx), w);
        std::sort(items.begin(), items.end());
        for (const auto& [x, w] : items) s.c[n][x] += w;
      }
  }
  return s;
}

Rational WalkSeries::exact(int n, const Site& x) const {
  if (!uniform) throw Error("exact values need a uniform-weight distribution");
  auto it = counts.at(n).find(x);
  if (it == counts.at(n).end()) return 0;
  return Rational(it->second, BigInt(pow(BigInt(step_denominator), n)));
}

double WalkSeries::total(int n) const {
  double t = 0;
  for (const auto& [x, v] : c.at(n)) t += v;
  return t;
}

BigInt WalkSeries::total_count(int n) const {
  if (!uniform) throw Error("counts need a uniform-weight distribution");
  BigInt t = 0;
  for (const auto& [x, v] : counts.at(n)) t += v;
  return t;
}

nlohmann::json WalkSeries::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (int n = 0; n <= n_max; ++n) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& [x, v] : c[n]) {
      nlohmann::json p{{"x", x}, {"value", v}};
      if (uniform) p["count"] = counts[n].at(x).str();
      pts.push_back(p);
    }
    out.push_back({{"n", n}, {"points", pts}});
  }
  return {{"d", d},
          {"n_max", n_max},
          {"mode", mode == SeriesMode::Rational ? "rational" : "double"},
          {"step_denominator", step_denominator},
          {"weight_loss", weight_loss},
          {"series", out}};
}

// ---------------------------------------------------------------------------

ChiResult chi_series(const WalkSeries& s, double z) {
  if (z < 0) throw Error("z: must be non-negative");
  ChiResult r;
  std::vector<double> S(s.n_max + 1);
  for (int n = 0; n <= s.n_max; ++n) {
    S[n] = s.total(n);
    r.chi += S[n] * std::pow(z, n);
  }
  std::vector<double> ratio;
  for (int n = 1; n <= s.n_max; ++n)
    if (S[n - 1] > 0 && S[n] > 0) ratio.push_back(S[n] / S[n - 1]);
  for (std::size_t i = ratio.size() >= 3 ? ratio.size() - 3 : 0; i < ratio.size(); ++i)
    r.zc_iterates.push_back(1.0 / ratio[i]);
  if (r.zc_iterates.size() == 3) {
    const double a0 = r.zc_iterates[0], a1 = r.zc_iterates[1], a2 = r.zc_iterates[2];
    const double den = a2 - 2 * a1 + a0;
    r.zc_estimate = std::abs(den) > 1e-14 * std::abs(a2) ? a2 - (a2 - a1) * (a2 - a1) / den : a2;
  } else if (!r.zc_iterates.empty()) {
    r.zc_estimate = r.zc_iterates.back();
  } else {
    r.zc_estimate = std::numeric_limits<double>::infinity();
  }
  if (ratio.empty() || s.n_max == 0) {
    r.remainder = 0;
  } else {
    const double q = z * ratio.back();
    const double last = S[s.n_max] * std::pow(z, s.n_max);
    r.remainder = q < 1 ? last * q / (1 - q) : std::numeric_limits<double>::infinity();
  }
  r.divergence_warning = z >= r.zc_estimate || !(r.remainder <= r.chi);
  return r;
}

nlohmann::json ChiResult::to_json() const {
  return {{"chi", chi},
          {"remainder", std::isfinite(remainder) ? nlohmann::json(remainder) : nlohmann::json("infinite")},
          {"zc_iterates", zc_iterates},
          {"zc_estimate", zc_estimate},
          {"divergence_warning", divergence_warning}};
}

// ---------------------------------------------------------------------------

LaceCoefficients extract_lace(const WalkSeries& s) {
  if (s.n_max < 2) throw Error("nmax: lace extraction needs nmax >= 2");
  LaceCoefficients out;
  out.n_max = s.n_max;
  out.mode = s.uniform ? s.mode : SeriesMode::Double;
  out.step_denominator = s.step_denominator;
  out.pi.assign(s.n_max + 1, {});

  if (out.mode == SeriesMode::Rational) {
    // scaled integers: P_m = pi_m N^m, C_n = count_n; every term of the
    // recursion at order n+1 carries the common factor N^{-(n+1)}
    std::vector<std::pair<Site, BigInt>> unit_steps;
    for (const auto& [x, p] : s.steps) unit_steps.emplace_back(x, BigInt(1));
    out.pi_scaled.assign(s.n_max + 1, {});
    for (int n = 1; n < s.n_max; ++n) {
      SiteMap<BigInt> P = s.counts[n + 1];
      for (const auto& [x, v] : step_convolve(unit_steps, s.counts[n])) P[x] -= v;
      for (int m = 2; m <= n; ++m)
        for (const auto& [x, v] : convolve(out.pi_scaled[m], s.counts[n + 1 - m])) P[x] -= v;
      drop_zeros(P);
      out.pi_scaled[n + 1] = std::move(P);
    }
    for (int m = 2; m <= s.n_max; ++m) {
      const double scale = std::pow(static_cast<double>(s.step_denominator), -m);
      for (const auto& [x, v] : out.pi_scaled[m]) out.pi[m][x] = static_cast<double>(v) * scale;
    }
    return out;
  }

  for (int n = 1; n < s.n_max; ++n) {
    SiteMap<double> P = s.c[n + 1];
    for (const auto& [x, v] : step_convolve(s.steps, s.c[n])) P[x] -= v;
    for (int m = 2; m <= n; ++m)
      for (const auto& [x, v] : convolve(out.pi[m], s.c[n + 1 - m])) P[x] -= v;
    drop_zeros(P);
    out.pi[n + 1] = std::move(P);
  }
  return out;
}

Rational LaceCoefficients::exact(int m, const Site& x) const {
  if (mode != SeriesMode::Rational) throw Error("exact coefficients need rational mode");
  auto it = pi_scaled.at(m).find(x);
  if (it == pi_scaled.at(m).end()) return 0;
  return Rational(it->second, BigInt(pow(BigInt(step_denominator), m)));
}

SiteMap<double> LaceCoefficients::Pi(double z) const {
  SiteMap<double> out;
  for (int m = 2; m <= n_max; ++m)
    for (const auto& [x, v] : pi[m]) out[x] += v * std::pow(z, m);
  return out;
}

nlohmann::json LaceCoefficients::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (int m = 2; m <= n_max; ++m) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& [x, v] : pi[m]) {
      nlohmann::json p{{"x", x}, {"value", v}};
      if (mode == SeriesMode::Rational) p["exact"] = exact(m, x).str();
      pts.push_back(p);
    }
    double abs_sum = 0, sum = 0;
    for (const auto& [x, v] : pi[m]) {
      abs_sum += std::abs(v);
      sum += v;
    }
    out.push_back({{"m", m}, {"sum", sum}, {"abs_sum", abs_sum}, {"points", pts}});
  }
  return {{"n_max", n_max}, {"mode", mode == SeriesMode::Rational ? "rational" : "double"}, {"pi", out}};
}

ReconstructionReport check_reconstruction(const WalkSeries& s, const LaceCoefficients& lace) {
  ReconstructionReport r;
  if (lace.mode == SeriesMode::Rational) {
    r.exact_match = true;
    std::vector<std::pair<Site, BigInt>> unit_steps;
    for (const auto& [x, p] : s.steps) unit_steps.emplace_back(x, BigInt(1));
    for (int n = 1; n < s.n_max; ++n) {
      SiteMap<BigInt> rebuilt = step_convolve(unit_steps, s.counts[n]);
      for (int m = 2; m <= n + 1; ++m) {
        for (const auto& [x, v] : convolve(lace.pi_scaled[m], s.counts[n + 1 - m])) rebuilt[x] += v;
      }
      drop_zeros(rebuilt);
      SiteMap<BigInt> target = s.counts[n + 1];
      drop_zeros(target);
      r.exact_match = r.exact_match && rebuilt == target;
      ++r.checked;
    }
    return r;
  }
  for (int n = 1; n < s.n_max; ++n) {
    SiteMap<double> rebuilt = step_convolve(s.steps, s.c[n]);
    for (int m = 2; m <= n + 1; ++m) {
      for (const auto& [x, v] : convolve(lace.pi[m], s.c[n + 1 - m])) rebuilt[x] += v;
    }
    SiteMap<double> diff = s.c[n + 1];
    for (const auto& [x, v] : rebuilt) diff[x] -= v;
    for (const auto& [x, v] : diff) r.max_abs_error = std::max(r.max_abs_error, std::abs(v));
    ++r.checked;
  }
  r.exact_match = r.max_abs_error == 0.0;
  return r;
}

double bubble_saw(const WalkSeries& s, double z) {
  SiteMap<double> G;
  for (int n = 0; n <= s.n_max; ++n)
    for (const auto& [x, v] : s.c[n]) G[x] += v * std::pow(z, n);
  double B = 0;
  for (const auto& [x, v] : G) B += v * v;
  return B;
}

DiffInequality check_diff_inequality(const WalkSeries& s, double z, double zc_est, double B_est) {
  if (!(z >= 0 && z < zc_est)) throw Error("z: must satisfy 0 <= z < zc_est");
  DiffInequality r;
  r.z = z;
  r.zc = zc_est;
  r.B_zc = B_est;
  const ChiResult chi = chi_series(s, z);
  r.chi = chi.chi;
  r.remainder = chi.remainder;
  r.lower = zc_est / (zc_est - z);
  r.lower_margin = r.chi - r.lower;
  r.lower_holds = r.lower_margin >= 0;
  r.upper_vacuous = !std::isfinite(B_est);
  if (r.upper_vacuous) {
    r.upper = std::numeric_limits<double>::infinity();
    r.upper_margin = std::numeric_limits<double>::infinity();
    r.upper_holds = true;
  } else {
    r.upper = B_est * (r.lower + 1.0);
    r.upper_margin = r.upper - r.chi;
    r.upper_holds = r.upper_margin >= 0;
  }
  r.truncation_dominated = !(r.remainder <= 0.1 * r.lower) ||
                           (!r.upper_vacuous && !(r.remainder <= 0.1 * r.upper));
  return r;
}

nlohmann::json DiffInequality::to_json() const {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json("infinite"); };
  return {{"z", z},
          {"zc", zc},
          {"B_zc", num(B_zc)},
          {"chi", chi},
          {"remainder", num(remainder)},
          {"lower", lower},
          {"upper", num(upper)},
          {"lower_margin", lower_margin},
          {"upper_margin", num(upper_margin)},
          {"lower_holds", lower_holds},
          {"upper_holds", upper_holds},
          {"upper_vacuous", upper_vacuous},
          {"truncation_dominated", truncation_dominated}};
}

}  // namespace lacelab
