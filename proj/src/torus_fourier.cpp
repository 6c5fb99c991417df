#include "lacelab/torus_fourier.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

namespace lacelab {

TorusGrid::TorusGrid(int d, int M) : d_(d), M_(M), size_(1) {
  if (d < 1) throw Error("d: must be a positive integer");
  if (M < 4 || M % 2 != 0) throw Error("M: must be even and at least 4");
  for (int j = 0; j < d; ++j) {
    if (size_ > (std::int64_t{1} << 40) / M) throw Error("M: grid too large");
    size_ *= M;
  }
}

int TorusGrid::wrap(std::int64_t m) const {
  const std::int64_t r = m % M_;
  return static_cast<int>(r < 0 ? r + M_ : r);
}

int TorusGrid::centered(int m) const { return m >= M_ / 2 ? m - M_ : m; }

std::int64_t TorusGrid::index(std::span<const int> x) const {
  if (x.size() != static_cast<std::size_t>(d_))
    throw Error("dimension mismatch: expected " + std::to_string(d_) + " coordinates");
  std::int64_t idx = 0;
  for (int j = d_ - 1; j >= 0; --j) idx = idx * M_ + wrap(x[j]);
  return idx;
}

void TorusGrid::coords(std::int64_t idx, std::span<int> out) const {
  for (int j = 0; j < d_; ++j) {
    out[j] = centered(static_cast<int>(idx % M_));
    idx /= M_;
  }
}

Site TorusGrid::coords(std::int64_t idx) const {
  Site x(d_);
  coords(idx, x);
  return x;
}

std::vector<double> TorusGrid::dual(std::int64_t idx) const {
  std::vector<double> k(d_);
  for (int j = 0; j < d_; ++j) {
    k[j] = 2.0 * std::numbers::pi * centered(static_cast<int>(idx % M_)) / M_;
    idx /= M_;
  }
  return k;
}

std::int64_t TorusGrid::neg(std::int64_t idx) const {
  std::int64_t out = 0, mul = 1;
  for (int j = 0; j < d_; ++j) {
    const int m = static_cast<int>(idx % M_);
    out += ((M_ - m) % M_) * mul;
    idx /= M_;
    mul *= M_;
  }
  return out;
}

std::int64_t TorusGrid::add(std::int64_t a, std::int64_t b) const {
  std::int64_t out = 0, mul = 1;
  for (int j = 0; j < d_; ++j) {
    out += ((a % M_ + b % M_) % M_) * mul;
    a /= M_;
    b /= M_;
    mul *= M_;
  }
  return out;
}

std::int64_t TorusGrid::sub(std::int64_t a, std::int64_t b) const { return add(a, neg(b)); }

// ---------------------------------------------------------------------------

TorusField TorusField::delta(const TorusGrid& g) {
  TorusField f(g, Space::X);
  f.v[0] = 1.0;
  return f;
}

TorusField TorusField::constant(const TorusGrid& g, Space s, double c) {
  TorusField f(g, s);
  std::fill(f.v.begin(), f.v.end(), cplx(c, 0.0));
  return f;
}

std::vector<double> TorusField::real_part() const {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) r[i] = v[i].real();
  return r;
}

double TorusField::max_imag() const {
  double m = 0;
  for (const auto& c : v) m = std::max(m, std::abs(c.imag()));
  return m;
}

double TorusField::asymmetry() const {
  double m = 0;
  for (std::int64_t i = 0; i < grid.size(); ++i) m = std::max(m, std::abs(v[i] - v[grid.neg(i)]));
  return m;
}

double TorusField::l1() const {
  double s = 0;
  for (const auto& c : v) s += std::abs(c);
  return s;
}

nlohmann::json TorusField::to_json() const {
  nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
  bool complex_valued = max_imag() != 0.0;
  for (const auto& c : v) {
    re.push_back(c.real());
    if (complex_valued) im.push_back(c.imag());
  }
  nlohmann::json j{{"d", grid.dim()}, {"M", grid.side()}, {"space_tag", space == Space::X ? "X" : "K"},
                   {"re", re}};
  if (complex_valued) j["im"] = im;
  return j;
}

TorusField TorusField::from_json(const nlohmann::json& j) {
  for (const char* key : {"d", "M", "space_tag", "re"})
    if (!j.contains(key)) throw Error(std::string(key) + ": required field missing");
  TorusGrid g(j.at("d").get<int>(), j.at("M").get<int>());
  const std::string tag = j.at("space_tag").get<std::string>();
  if (tag != "X" && tag != "K") throw Error("space_tag: expected X or K");
  TorusField f(g, tag == "X" ? Space::X : Space::K);
  const auto& re = j.at("re");
  if (!re.is_array() || re.size() != static_cast<std::size_t>(g.size()))
    throw Error("re: expected an array of length M^d");
  for (std::size_t i = 0; i < re.size(); ++i) f.v[i] = re[i].get<double>();
  if (j.contains("im")) {
    const auto& im = j.at("im");
    if (!im.is_array() || im.size() != re.size()) throw Error("im: length mismatch");
    for (std::size_t i = 0; i < im.size(); ++i) f.v[i].imag(im[i].get<double>());
  }
  return f;
}

// ---------------------------------------------------------------------------

TorusField fold_distribution(const StepDistribution& dist, const TorusGrid& grid) {
  if (dist.dim() != grid.dim()) throw Error("dimension mismatch between distribution and grid");
  TorusField f(grid, Space::X);
  dist.for_each_support([&](std::span<const int> x, double p) { f.v[grid.index(x)] += p; });
  return f;
}

namespace {

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

// sign = +1 computes sum_x f(x) e^{+ikx} (FFTW_BACKWARD), -1 the conjugate.
std::vector<cplx> transform(const TorusGrid& g, const std::vector<cplx>& in, int sign) {
  std::vector<cplx> out(in.size());
  std::vector<cplx> buf(in);
  std::vector<int> n(g.dim(), g.side());
  auto* pin = reinterpret_cast<fftw_complex*>(buf.data());
  auto* pout = reinterpret_cast<fftw_complex*>(out.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    plan = fftw_plan_dft(g.dim(), n.data(), pin, pout, sign > 0 ? FFTW_BACKWARD : FFTW_FORWARD,
                         FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

void require_same(const TorusField& f, const TorusField& g) {
  if (!(f.grid == g.grid)) throw Error("grid mismatch");
}

}  // namespace

TorusField dft(const TorusField& f) {
  if (f.space != Space::X) throw Error("dft: expected an x-space field");
  TorusField out(f.grid, Space::K);
  out.v = transform(f.grid, f.v, +1);
  return out;
}

TorusField idft(const TorusField& f) {
  if (f.space != Space::K) throw Error("idft: expected a k-space field");
  TorusField out(f.grid, Space::X);
  out.v = transform(f.grid, f.v, -1);
  const double inv = 1.0 / static_cast<double>(f.grid.size());
  for (auto& c : out.v) c *= inv;
  return out;
}

TorusField convolve(const TorusField& f, const TorusField& g) {
  require_same(f, g);
  if (f.space != Space::X || g.space != Space::X) throw Error("convolve: expected x-space fields");
  TorusField fh = dft(f);
  const TorusField gh = dft(g);
  for (std::int64_t i = 0; i < fh.grid.size(); ++i) fh.v[i] *= gh.v[i];
  return idft(fh);
}

TorusField convolve_direct(const TorusField& f, const TorusField& g) {
  require_same(f, g);
  if (f.space != Space::X || g.space != Space::X) throw Error("convolve: expected x-space fields");
  if (f.grid.size() > 4096) throw Error("convolve_direct: grid exceeds 4096 sites");
  const auto& grid = f.grid;
  TorusField out(grid, Space::X);
  for (std::int64_t x = 0; x < grid.size(); ++x) {
    cplx s = 0;
    for (std::int64_t y = 0; y < grid.size(); ++y) s += f.v[y] * g.v[grid.sub(x, y)];
    out.v[x] = s;
  }
  return out;
}

cplx delta_k(const TorusField& ghat, std::int64_t k, std::int64_t l) {
  const auto& g = ghat.grid;
  return ghat.v[g.sub(l, k)] + ghat.v[g.add(l, k)] - 2.0 * ghat.v[l];
}

double one_minus_cos_sum(const TorusField& g, std::int64_t k_index) {
  const auto& grid = g.grid;
  const std::vector<double> k = grid.dual(k_index);
  std::vector<int> x(grid.dim());
  double s = 0;
  for (std::int64_t i = 0; i < grid.size(); ++i) {
    if (g.v[i] == 0.0) continue;
    grid.coords(i, x);
    double phase = 0;
    for (int j = 0; j < grid.dim(); ++j) phase += k[j] * x[j];
    s += (1.0 - std::cos(phase)) * std::abs(g.v[i]);
  }
  return s;
}

}  // namespace lacelab
