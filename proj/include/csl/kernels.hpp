#pragma once

// Singular kernels k(t,x;y) on R x R^n x R^n with their Hoelder regularity
// data: the Poisson and Riesz families, the Cauchy integral for a Lipschitz
// graph (exposed as two real kernels), tabulated custom kernels, and the
// off-diagonal regularity checker.
//
// The Poisson kernel carries the dimensional normalization c_n making
// its y-integral one; Riesz and Cauchy are unnormalized.

#include <complex>
#include <fstream>
#include <functional>
#include <sstream>
#include <variant>

#include "csl/dyadic.hpp"

namespace csl {

struct Kernel {
  int dim = 1;
  double delta = 1.0;  // Hoelder exponent in (0, 1]
  std::string name;
  std::function<double(double t, const Point& x, const Point& y)> eval;

  double operator()(double t, const Point& x, const Point& y) const { return eval(t, x, y); }
};

// piecewise-linear Lipschitz graph t = phi(x), constant beyond the samples
class PiecewiseLinear {
 public:
  PiecewiseLinear() : xs_{0.0}, ys_{0.0} {}
  PiecewiseLinear(std::vector<double> xs, std::vector<double> ys)
      : xs_(std::move(xs)), ys_(std::move(ys)) {
    if (xs_.size() != ys_.size() || xs_.empty())
      throw std::invalid_argument("PiecewiseLinear: need matching nonempty samples");
    for (std::size_t i = 1; i < xs_.size(); ++i)
      if (!(xs_[i] > xs_[i - 1]))
        throw std::invalid_argument("PiecewiseLinear: x samples must be strictly increasing");
    lip_ = 0.0;
    for (std::size_t i = 1; i < xs_.size(); ++i)
      lip_ = std::max(lip_, std::abs((ys_[i] - ys_[i - 1]) / (xs_[i] - xs_[i - 1])));
    if (!std::isfinite(lip_)) throw std::invalid_argument("PiecewiseLinear: infinite slope");
  }

  double operator()(double x) const {
    if (x <= xs_.front()) return ys_.front();
    if (x >= xs_.back()) return ys_.back();
    auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    std::size_t i = std::size_t(it - xs_.begin());
    double u = (x - xs_[i - 1]) / (xs_[i] - xs_[i - 1]);
    return ys_[i - 1] + u * (ys_[i] - ys_[i - 1]);
  }

  // right derivative (0 beyond the samples)
  double slope(double x) const {
    if (x < xs_.front() || x >= xs_.back()) return 0.0;
    auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    std::size_t i = std::size_t(it - xs_.begin());
    if (i == 0) i = 1;
    return (ys_[i] - ys_[i - 1]) / (xs_[i] - xs_[i - 1]);
  }

  double lipschitz() const { return lip_; }
  const std::vector<double>& xs() const { return xs_; }
  const std::vector<double>& ys() const { return ys_; }

 private:
  std::vector<double> xs_, ys_;
  double lip_ = 0.0;
};

inline double poisson_constant(int n) {
  // 1 / integral of (1+|u|^2)^(-(1+n)/2) over R^n
  if (n == 1) return 1.0 / 3.14159265358979323846;
  return 1.0 / (2.0 * 3.14159265358979323846);
}

inline Kernel poisson_kernel(int n) {
  if (n < 1 || n > kMaxDim) throw std::invalid_argument("poisson_kernel: dimension 1 or 2");
  Kernel k;
  k.dim = n;
  k.delta = 1.0;
  k.name = "poisson n=" + std::to_string(n);
  double c = poisson_constant(n);
  k.eval = [n, c](double t, const Point& x, const Point& y) {
    double r2 = t * t;
    for (int a = 0; a < n; ++a) r2 += (x[a] - y[a]) * (x[a] - y[a]);
    return c * t / std::pow(r2, 0.5 * (1 + n));
  };
  return k;
}

inline Kernel riesz_kernel(int j, int n) {
  if (n < 1 || n > kMaxDim) throw std::invalid_argument("riesz_kernel: dimension 1 or 2");
  if (j < 1 || j > n) throw std::invalid_argument("riesz_kernel: index j must satisfy 1 <= j <= n");
  Kernel k;
  k.dim = n;
  k.delta = 1.0;
  k.name = "riesz j=" + std::to_string(j) + " n=" + std::to_string(n);
  k.eval = [j, n](double t, const Point& x, const Point& y) {
    double r2 = t * t;
    for (int a = 0; a < n; ++a) r2 += (x[a] - y[a]) * (x[a] - y[a]);
    return (x[j - 1] - y[j - 1]) / std::pow(r2, 0.5 * (1 + n));
  };
  return k;
}

// Cauchy integral kernel for the graph of a Lipschitz phi (dimension 1):
// (1/(2 pi i)) (1 + i phi'(y)) / (y + i phi(y) - x - i (t + phi(x))),
// exposed as its real or imaginary part.
inline Kernel cauchy_graph_kernel(PiecewiseLinear phi, bool imaginary) {
  Kernel k;
  k.dim = 1;
  k.delta = 1.0;
  k.name = imaginary ? "cauchy-im" : "cauchy-re";
  k.eval = [phi = std::move(phi), imaginary](double t, const Point& x, const Point& y) {
    std::complex<double> denom(y[0] - x[0], phi(y[0]) - phi(x[0]) - t);
    std::complex<double> numer(1.0, phi.slope(y[0]));
    std::complex<double> val =
        numer / (std::complex<double>(0.0, 2.0 * 3.14159265358979323846) * denom);
    return imaginary ? val.imag() : val.real();
  };
  return k;
}

inline Kernel custom_kernel(int n, double delta,
                            std::function<double(double, const Point&, const Point&)> eval,
                            std::string name = "custom") {
  if (!(delta > 0.0 && delta <= 1.0))
    throw std::invalid_argument("custom_kernel: delta must lie in (0,1]");
  Kernel k;
  k.dim = n;
  k.delta = delta;
  k.name = std::move(name);
  k.eval = std::move(eval);
  return k;
}

// ---------------------------------------------------------------------------
// tabulated kernels (dimension 1): trilinear interpolation in (t, x, y)
// ---------------------------------------------------------------------------

struct KernelTable {
  double delta = 1.0;
  double t_lo = 0, t_hi = 1;
  double x_lo = 0, x_hi = 1;
  double y_lo = 0, y_hi = 1;
  int nt = 2, nx = 2, ny = 2;
  std::vector<double> values;  // row-major in (t, x, y): ((it*nx)+ix)*ny+iy

  double& at(int it, int ix, int iy) { return values[std::size_t((it * nx + ix) * ny + iy)]; }
  double at(int it, int ix, int iy) const { return values[std::size_t((it * nx + ix) * ny + iy)]; }
};

inline Kernel tabulated_kernel(KernelTable table) {
  if (table.nt < 2 || table.nx < 2 || table.ny < 2)
    throw std::invalid_argument("tabulated_kernel: need at least 2 nodes per axis");
  if (std::int64_t(table.values.size()) != std::int64_t(table.nt) * table.nx * table.ny)
    throw std::invalid_argument("tabulated_kernel: value count mismatch");
  Kernel k;
  k.dim = 1;
  k.delta = table.delta;
  k.name = "tabulated";
  k.eval = [tb = std::move(table)](double t, const Point& x, const Point& y) {
    auto locate = [](double v, double lo, double hi, int n, int& i, double& u) {
      double s = (v - lo) / (hi - lo) * (n - 1);
      s = std::max(0.0, std::min(s, double(n - 1)));
      i = std::min(int(s), n - 2);
      u = s - i;
    };
    int it, ix, iy;
    double ut, ux, uy;
    locate(t, tb.t_lo, tb.t_hi, tb.nt, it, ut);
    locate(x[0], tb.x_lo, tb.x_hi, tb.nx, ix, ux);
    locate(y[0], tb.y_lo, tb.y_hi, tb.ny, iy, uy);
    double acc = 0.0;
    for (int dt = 0; dt < 2; ++dt)
      for (int dx = 0; dx < 2; ++dx)
        for (int dy = 0; dy < 2; ++dy) {
          double wgt = (dt ? ut : 1 - ut) * (dx ? ux : 1 - ux) * (dy ? uy : 1 - uy);
          acc += wgt * tb.at(it + dt, ix + dx, iy + dy);
        }
    return acc;
  };
  return k;
}

inline std::string to_string(const KernelTable& t) {
  std::ostringstream os;
  os.precision(17);
  os << "csl-kernel-table 1 " << t.delta << '\n';
  os << t.t_lo << ' ' << t.t_hi << ' ' << t.nt << '\n';
  os << t.x_lo << ' ' << t.x_hi << ' ' << t.nx << '\n';
  os << t.y_lo << ' ' << t.y_hi << ' ' << t.ny << '\n';
  for (std::size_t i = 0; i < t.values.size(); ++i)
    os << t.values[i] << (((i + 1) % 8 == 0) ? '\n' : ' ');
  os << '\n';
  return os.str();
}

inline KernelTable parse_kernel_table(const std::string& text) {
  std::istringstream is(text);
  std::string tag;
  int n;
  KernelTable t;
  if (!(is >> tag >> n >> t.delta) || tag != "csl-kernel-table" || n != 1)
    throw std::invalid_argument("parse_kernel_table: bad header");
  if (!(is >> t.t_lo >> t.t_hi >> t.nt >> t.x_lo >> t.x_hi >> t.nx >> t.y_lo >> t.y_hi >> t.ny))
    throw std::invalid_argument("parse_kernel_table: bad axis spec");
  t.values.resize(std::size_t(t.nt) * t.nx * t.ny);
  for (auto& v : t.values)
    if (!(is >> v)) throw std::invalid_argument("parse_kernel_table: short value list");
  return t;
}

// ---------------------------------------------------------------------------
// kernel spec strings: "poisson n=1" | "riesz j=1 n=2" |
// "cauchy-re lip=x:y,x:y,..." | "cauchy-im lip=..." | "custom file=<path>"
// ---------------------------------------------------------------------------

namespace detail {
inline std::vector<std::pair<std::string, std::string>> parse_kv(std::istringstream& is) {
  std::vector<std::pair<std::string, std::string>> kv;
  std::string tok;
  while (is >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("kernel spec: expected key=value, got '" + tok + "'");
    kv.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
  }
  return kv;
}

inline PiecewiseLinear parse_lip_samples(const std::string& csv) {
  std::vector<double> xs, ys;
  std::istringstream is(csv);
  std::string item;
  while (std::getline(is, item, ',')) {
    auto colon = item.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("kernel spec: lip sample '" + item + "' must be x:y");
    xs.push_back(std::stod(item.substr(0, colon)));
    ys.push_back(std::stod(item.substr(colon + 1)));
  }
  return PiecewiseLinear(std::move(xs), std::move(ys));
}
}  // namespace detail

inline Kernel parse_kernel_spec(const std::string& spec) {
  std::istringstream is(spec);
  std::string kind;
  if (!(is >> kind)) throw std::invalid_argument("kernel spec: empty");
  auto kv = detail::parse_kv(is);
  auto get = [&](const std::string& key, const char* fallback = nullptr) -> std::string {
    for (auto& [k, v] : kv)
      if (k == key) return v;
    if (fallback) return fallback;
    throw std::invalid_argument("kernel spec: missing " + key);
  };
  if (kind == "poisson") return poisson_kernel(std::stoi(get("n", "1")));
  if (kind == "riesz") return riesz_kernel(std::stoi(get("j", "1")), std::stoi(get("n", "1")));
  if (kind == "cauchy-re") return cauchy_graph_kernel(detail::parse_lip_samples(get("lip")), false);
  if (kind == "cauchy-im") return cauchy_graph_kernel(detail::parse_lip_samples(get("lip")), true);
  if (kind == "custom") {
    std::ifstream in(get("file"));
    if (!in) throw std::invalid_argument("kernel spec: cannot open " + get("file"));
    std::stringstream buf;
    buf << in.rdbuf();
    return tabulated_kernel(parse_kernel_table(buf.str()));
  }
  throw std::invalid_argument("kernel spec: unknown kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// off-diagonal Hoelder regularity checker
// ---------------------------------------------------------------------------

enum class RegularityDirection { x, y };

struct RegularitySample {
  double t = 1.0;
  Point x{0, 0};
  Point y{0, 0};
  double s = 0.0;  // t-displacement (x-direction only)
  Point z{0, 0};   // spatial displacement
};

struct RegularityResult {
  double sup_ratio = 0.0;
  RegularitySample worst;
};

namespace detail {
inline double euclid(double t, const Point& p, int n) {
  double r2 = t * t;
  for (int a = 0; a < n; ++a) r2 += p[a] * p[a];
  return std::sqrt(r2);
}
}  // namespace detail

// ratio |k(shifted) - k| * dist^(n+delta) / |displacement|^delta per sample,
// where dist = |(t,x)-(0,y)|; samples must respect the half-distance
// constraint of their direction.
inline RegularityResult check_regularity(const Kernel& k, RegularityDirection dir,
                                         const std::vector<RegularitySample>& samples) {
  RegularityResult out;
  const int n = k.dim;
  for (const auto& smp : samples) {
    Point diff{smp.x[0] - smp.y[0], smp.x[1] - smp.y[1]};
    double dist = detail::euclid(smp.t, diff, n);
    double disp = dir == RegularityDirection::x ? detail::euclid(smp.s, smp.z, n)
                                                : detail::euclid(0.0, smp.z, n);
    if (disp > dist / 2)
      throw std::invalid_argument("check_regularity: displacement violates the half-distance constraint");
    if (dir == RegularityDirection::x && smp.t + smp.s <= 0)
      throw std::invalid_argument("check_regularity: shifted t must stay positive");
    if (disp == 0.0) continue;
    double shifted;
    if (dir == RegularityDirection::x) {
      Point xs{smp.x[0] + smp.z[0], smp.x[1] + smp.z[1]};
      shifted = k(smp.t + smp.s, xs, smp.y);
    } else {
      Point ys{smp.y[0] + smp.z[0], smp.y[1] + smp.z[1]};
      shifted = k(smp.t, smp.x, ys);
    }
    double dk = std::abs(shifted - k(smp.t, smp.x, smp.y));
    double ratio = dk * std::pow(dist, n + k.delta) / std::pow(disp, k.delta);
    if (ratio > out.sup_ratio) {
      out.sup_ratio = ratio;
      out.worst = smp;
    }
  }
  return out;
}

}  // namespace csl
