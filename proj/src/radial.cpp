#include "nls_norm/radial.hpp"

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace nls {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Sixth-order staggered difference (u_{j-2}, ..., u_{j+3}) -> u'(r_{j+1/2}), scaled by 1/(1920 h)
constexpr int kWidth = 6;
constexpr double kStencil[kWidth] = {-9.0, 125.0, -2250.0, 2250.0, -125.0, 9.0};
constexpr double kScale = 1920.0;

// Maps a stencil index onto a stored node with even reflection at 0 and odd at R.
inline void ghost(int k, int n, int& node, double& sign) {
  if (k < 0) {
    node = -k;
    sign = 1.0;
  } else if (k > n) {
    node = 2 * n - k;
    sign = -1.0;
  } else {
    node = k;
    sign = 1.0;
  }
}

inline double at(const std::vector<double>& u, int k, int n) {
  int node;
  double sign;
  ghost(k, n, node, sign);
  return sign * u[node];
}

std::vector<double> half_derivative(const std::vector<double>& u, const RadialGrid& g) {
  std::vector<double> d(g.n);
  double s = 1.0 / (kScale * g.dr);
  for (int j = 0; j < g.n; ++j) {
    double acc = 0.0;
    for (int k = 0; k < kWidth; ++k) acc += kStencil[k] * at(u, j - 2 + k, g.n);
    d[j] = acc * s;
  }
  return d;
}

// d(K/2)/du_i for all nodes
std::vector<double> half_kinetic_gradient(const std::vector<double>& u, const RadialGrid& g) {
  auto d = half_derivative(u, g);
  std::vector<double> grad(g.nodes(), 0.0);
  double s = 1.0 / (kScale * g.dr);
  for (int j = 0; j < g.n; ++j) {
    double F = g.w_half[j] * d[j] * s;
    for (int k = 0; k < kWidth; ++k) {
      int node;
      double sign;
      ghost(j - 2 + k, g.n, node, sign);
      grad[node] += sign * kStencil[k] * F;
    }
  }
  return grad;
}

void require_same_grid(const RadialField& a, const RadialField& b) {
  if (a.grid != b.grid && (a.grid->n != b.grid->n || a.grid->R != b.grid->R || a.grid->N != b.grid->N))
    throw std::invalid_argument("fields live on different grids");
}

}  // namespace

GridPtr make_grid(int N, double R, int n) {
  if (N < 3) throw std::invalid_argument("grid dimension must be at least 3");
  if (!(R > 0.0) || !std::isfinite(R)) throw std::invalid_argument("grid radius must be positive");
  if (n < 8) throw std::invalid_argument("grid needs at least 8 intervals");
  auto g = std::make_shared<RadialGrid>();
  g->N = N;
  g->R = R;
  g->n = n;
  g->dr = R / n;
  g->omega = 2.0 * std::pow(kPi, N / 2.0) / std::tgamma(N / 2.0);
  g->r.resize(n + 1);
  g->w.resize(n + 1);
  g->w_half.resize(n);
  for (int i = 0; i <= n; ++i) {
    g->r[i] = i * g->dr;
    g->w[i] = g->omega * std::pow(g->r[i], N - 1) * g->dr;
  }
  // trapezoid, with the fourth-order Gregory end correction at R
  g->w[0] = 0.0;
  g->w[n] *= 3.0 / 8.0;
  g->w[n - 1] *= 7.0 / 6.0;
  g->w[n - 2] *= 23.0 / 24.0;
  for (int j = 0; j < n; ++j) g->w_half[j] = g->omega * std::pow((j + 0.5) * g->dr, N - 1) * g->dr;

  // u_0 minimizing K is linear in u_1..u_5: -sum w a b_k / sum w a^2 over the half points touching u_0
  std::vector<double> e(n + 1, 0.0);
  e[0] = 1.0;
  auto a = half_derivative(e, *g);
  double aa = 0.0;
  for (int j = 0; j < kWidth / 2; ++j) aa += g->w_half[j] * a[j] * a[j];
  for (int k = 1; k <= kClosure; ++k) {
    std::fill(e.begin(), e.end(), 0.0);
    e[k] = 1.0;
    auto b = half_derivative(e, *g);
    double ab = 0.0;
    for (int j = 0; j < kWidth / 2; ++j) ab += g->w_half[j] * a[j] * b[j];
    g->closure[k - 1] = -ab / aa;
  }
  return g;
}

RadialField::RadialField(GridPtr g, std::vector<double> values) : grid(std::move(g)), u(std::move(values)) {
  if (!grid) throw std::invalid_argument("field needs a grid");
  if (static_cast<int>(u.size()) != grid->nodes())
    throw std::invalid_argument("field size does not match grid");
  u.back() = 0.0;
}

RadialField RadialField::zeros(GridPtr g) {
  std::vector<double> v(g->nodes(), 0.0);
  return RadialField(std::move(g), std::move(v));
}

RadialField RadialField::from_function(GridPtr g, const std::function<double(double)>& f) {
  std::vector<double> v(g->nodes());
  for (int i = 0; i < g->nodes(); ++i) v[i] = f(g->r[i]);
  return RadialField(std::move(g), std::move(v));
}

double integrate(const std::vector<double>& f, const RadialGrid& grid) {
  if (static_cast<int>(f.size()) != grid.nodes()) throw std::invalid_argument("sample count mismatch");
  double s = 0.0;
  for (int i = 1; i <= grid.n; ++i) s += grid.w[i] * f[i];
  return s;
}

double inner(const RadialField& a, const RadialField& b) {
  require_same_grid(a, b);
  const auto& w = a.grid->w;
  double s = 0.0;
  for (int i = 1; i < a.size(); ++i) s += w[i] * a.u[i] * b.u[i];
  return s;
}

double mass(const RadialField& u) { return inner(u, u); }

double kinetic(const RadialField& u) {
  const auto& g = *u.grid;
  auto d = half_derivative(u.u, g);
  double K = 0.0;
  for (int j = 0; j < g.n; ++j) K += g.w_half[j] * d[j] * d[j];
  return K;
}

std::vector<double> laplacian(const RadialField& u) {
  const auto& g = *u.grid;
  auto grad = half_kinetic_gradient(u.u, g);
  std::vector<double> lap(g.nodes(), 0.0);
  for (int i = 1; i < g.n; ++i) lap[i] = -grad[i] / g.w[i];
  double h2 = g.dr * g.dr;
  lap[0] = g.N * (4.0 * u.u[3] - 54.0 * u.u[2] + 540.0 * u.u[1] - 490.0 * u.u[0]) / (180.0 * h2);
  return lap;
}

std::vector<double> laplacian_strong(const RadialField& f) {
  const auto& g = *f.grid;
  const auto& u = f.u;
  int n = g.n;
  double h = g.dr;
  std::vector<double> lap(g.nodes(), 0.0);
  auto d2 = [&](int i) {
    return (2.0 * (at(u, i - 3, n) + at(u, i + 3, n)) - 27.0 * (at(u, i - 2, n) + at(u, i + 2, n)) +
            270.0 * (at(u, i - 1, n) + at(u, i + 1, n)) - 490.0 * u[i]) /
           (180.0 * h * h);
  };
  auto d1 = [&](int i) {
    return (-at(u, i - 3, n) + 9.0 * at(u, i - 2, n) - 45.0 * at(u, i - 1, n) + 45.0 * at(u, i + 1, n) -
            9.0 * at(u, i + 2, n) + at(u, i + 3, n)) /
           (60.0 * h);
  };
  lap[0] = g.N * d2(0);
  for (int i = 1; i < n; ++i) lap[i] = d2(i) + (g.N - 1) / g.r[i] * d1(i);
  return lap;
}

void apply_origin_closure(std::vector<double>& u, const RadialGrid& g) {
  double s = 0.0;
  for (int k = 0; k < kClosure; ++k) s += g.closure[k] * u[k + 1];
  u[0] = s;
}

double interpolate(const RadialField& f, double x) {
  const auto& g = *f.grid;
  x = std::abs(x);
  if (x >= g.R) return 0.0;
  int i = std::min(static_cast<int>(x / g.dr), g.n - 1);
  double t = x / g.dr - i;
  const auto& u = f.u;
  int n = g.n;
  if (t == 0.0) return u[i];
  // degree-7 Lagrange on nodes i-3..i+4, barycentric form with equispaced weights
  static constexpr double bw[8] = {-1.0, 7.0, -21.0, 35.0, -35.0, 21.0, -7.0, 1.0};
  double num = 0.0, den = 0.0;
  for (int k = 0; k < 8; ++k) {
    double c = bw[k] / (t - (k - 3));
    num += c * at(u, i - 3 + k, n);
    den += c;
  }
  return num / den;
}

RadialField resample(const RadialField& u, GridPtr target) {
  std::vector<double> v(target->nodes());
  for (int i = 0; i < target->nodes(); ++i) v[i] = interpolate(u, target->r[i]);
  return RadialField(std::move(target), std::move(v));
}

namespace {

double lost_fraction(const RadialField& u, double cutoff) {
  double total = 0.0, lost = 0.0;
  const auto& g = *u.grid;
  for (int i = 1; i <= g.n; ++i) {
    double m = g.w[i] * u.u[i] * u.u[i];
    total += m;
    if (g.r[i] > cutoff) lost += m;
  }
  return total > 0.0 ? lost / total : 0.0;
}

}  // namespace

RadialField dilate_plain(const RadialField& u, double s, double* lost) {
  if (!(s > 0.0)) throw std::invalid_argument("dilation factor must be positive");
  if (lost) *lost = lost_fraction(u, s * u.grid->R);
  if (s == 1.0) return u;
  std::vector<double> v(u.size());
  for (int i = 0; i < u.size(); ++i) v[i] = interpolate(u, s * u.grid->r[i]);
  return RadialField(u.grid, std::move(v));
}

RadialField dilate_mass_preserving(const RadialField& u, double lam, double* lost) {
  RadialField v = dilate_plain(u, lam, lost);
  double amp = std::pow(lam, u.grid->N / 2.0);
  for (auto& x : v.u) x *= amp;
  return v;
}

namespace {

// |u| restricted to [lo, hi], where it is monotone
struct MonotonePiece {
  double lo, hi, v_lo, v_hi;
};

double solve_root(const std::function<double(double)>& fn, double lo, double hi, double flo, double fhi) {
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  std::uintmax_t iters = 100;
  boost::math::tools::eps_tolerance<double> tol(std::numeric_limits<double>::digits - 1);
  auto [a, b] = boost::math::tools::toms748_solve(fn, lo, hi, flo, fhi, tol, iters);
  return 0.5 * (a + b);
}

}  // namespace

RadialField rearrange(const RadialField& f) {
  const auto& g = *f.grid;
  const int m = g.nodes(), N = g.N;
  std::vector<double> a(m);
  for (int i = 0; i < m; ++i) a[i] = std::abs(f.u[i]);
  bool decreasing = true;
  for (int i = 1; i < m && decreasing; ++i) decreasing = a[i] <= a[i - 1];
  if (decreasing) return RadialField(f.grid, std::move(a));

  auto u = [&](double r) { return interpolate(f, r); };
  // breakpoints of monotonicity of |u|: roots and extrema of the interpolant
  std::vector<double> br{0.0};
  for (int j = 0; j < g.n; ++j) {
    double y0 = f.u[j], y1 = f.u[j + 1];
    if (j > 0 && y0 == 0.0 && f.u[j - 1] != 0.0) br.push_back(g.r[j]);
    if (y0 * y1 < 0.0) br.push_back(solve_root(u, g.r[j], g.r[j + 1], y0, y1));
    if (j == 0 || y0 == 0.0) continue;
    double d0 = y0 - f.u[j - 1], d1 = y1 - y0;
    if (d0 * d1 < 0.0 || (d0 != 0.0 && d1 == 0.0)) {
      double sgn = d0 > 0.0 ? -1.0 : 1.0;
      auto [x, v] = boost::math::tools::brent_find_minima([&](double r) { return sgn * u(r); }, g.r[j - 1], g.r[j + 1],
                                                          std::numeric_limits<double>::digits / 2);
      (void)v;
      br.push_back(x);
    }
  }
  br.push_back(g.R);
  std::sort(br.begin(), br.end());
  br.erase(std::unique(br.begin(), br.end()), br.end());

  std::vector<MonotonePiece> pieces;
  for (std::size_t k = 0; k + 1 < br.size(); ++k)
    if (br[k + 1] > br[k]) pieces.push_back({br[k], br[k + 1], std::abs(u(br[k])), std::abs(u(br[k + 1]))});

  // volume (in units of omega/N) of {|u| > t}
  auto measure = [&](double t) {
    double vol = 0.0;
    for (const auto& p : pieces) {
      double top = std::max(p.v_lo, p.v_hi), bot = std::min(p.v_lo, p.v_hi);
      if (t >= top) continue;
      double full = std::pow(p.hi, N) - std::pow(p.lo, N);
      if (t < bot) {
        vol += full;
        continue;
      }
      auto fn = [&](double r) { return std::abs(u(r)) - t; };
      double x = solve_root(fn, p.lo, p.hi, p.v_lo - t, p.v_hi - t);
      vol += p.v_lo >= p.v_hi ? std::pow(x, N) - std::pow(p.lo, N) : std::pow(p.hi, N) - std::pow(x, N);
    }
    return vol;
  };

  double top = 0.0;
  for (const auto& p : pieces) top = std::max({top, p.v_lo, p.v_hi});
  std::vector<double> out(m, 0.0);
  out[0] = top;
  double hi = top;
  for (int i = 1; i < g.n; ++i) {
    double target = std::pow(g.r[i], N);
    auto fn = [&](double t) { return measure(t) - target; };
    double fhi = fn(hi);
    if (fhi >= 0.0) {
      out[i] = hi;
      continue;
    }
    double f0 = fn(0.0);
    out[i] = f0 <= 0.0 ? 0.0 : solve_root(fn, 0.0, hi, f0, fhi);
    hi = out[i];
  }
  RadialField s(f.grid, std::move(out));
  double m0 = mass(f), m1 = mass(s);
  if (m1 > 0.0) {
    double c = std::sqrt(m0 / m1);
    for (double& x : s.u) x *= c;
  }
  return s;
}

RadialField precondition(const std::vector<double>& res, GridPtr gp, double shift) {
  if (!(shift > 0.0)) throw std::invalid_argument("preconditioner shift must be positive");
  const auto& g = *gp;
  if (static_cast<int>(res.size()) != g.nodes()) throw std::invalid_argument("residual size mismatch");
  const int n = g.n, M = n - 1;  // unknowns at nodes 1..n-1
  constexpr int B = kWidth - 1;
  // band[i][B + j - i] = A(i, j), probed with 2B+1 interleaved unit-vector sums
  std::vector<std::array<double, 2 * B + 1>> band(M);
  for (auto& row : band) row.fill(0.0);
  for (int c = 0; c < 2 * B + 1; ++c) {
    std::vector<double> e(g.nodes(), 0.0);
    for (int j = 1 + c; j < n; j += 2 * B + 1) e[j] = 1.0;
    apply_origin_closure(e, g);
    auto grad = half_kinetic_gradient(e, g);
    for (int i = 1; i < n; ++i) {
      double Ae = shift * e[i] + grad[i] / g.w[i];
      // column owning row i in this color
      int off = ((i - 1 - c) % (2 * B + 1) + (2 * B + 1)) % (2 * B + 1);
      int j = i;
      if (off <= B)
        j = i - off;
      else
        j = i + (2 * B + 1 - off);
      if (j < 1 || j >= n || std::abs(j - i) > B) continue;
      band[i - 1][B + j - i] = Ae;
    }
  }
  // banded LU without pivoting; A is a positive diagonal scaling of an SPD matrix
  std::vector<double> b(M);
  for (int i = 0; i < M; ++i) b[i] = res[i + 1];
  for (int k = 0; k < M; ++k) {
    double piv = band[k][B];
    for (int i = k + 1; i <= std::min(M - 1, k + B); ++i) {
      double l = band[i][B + k - i] / piv;
      if (l == 0.0) continue;
      for (int j = k; j <= std::min(M - 1, k + B); ++j) band[i][B + j - i] -= l * band[k][B + j - k];
      b[i] -= l * b[k];
    }
  }
  std::vector<double> z(g.nodes(), 0.0);
  for (int k = M - 1; k >= 0; --k) {
    double s = b[k];
    for (int j = k + 1; j <= std::min(M - 1, k + B); ++j) s -= band[k][B + j - k] * z[j + 1];
    z[k + 1] = s / band[k][B];
  }
  apply_origin_closure(z, g);
  return RadialField(gp, std::move(z));
}

// ---------------------------------------------------------------- IO

void write_text(std::ostream& os, const RadialField& u) {
  char buf[64];
  for (int i = 0; i < u.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", u.grid->r[i], u.u[i]);
    os << buf;
  }
}

RadialField read_text(std::istream& is, int N) {
  std::vector<double> r, v;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    double a, b;
    if (!(ls >> a >> b)) throw std::runtime_error("malformed field line: " + line);
    r.push_back(a);
    v.push_back(b);
  }
  if (r.size() < 9) throw std::runtime_error("field file too short");
  int n = static_cast<int>(r.size()) - 1;
  return RadialField(make_grid(N, r.back(), n), std::move(v));
}

namespace {

template <class T>
void put_le(std::ostream& os, T x) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &x, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  unsigned char b[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(b), sizeof(T))) throw std::runtime_error("truncated binary field");
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T x;
  std::memcpy(&x, b, sizeof(T));
  return x;
}

}  // namespace

// header: "NLSR", version, N, n; then columns r_0..r_n and u_0..u_n
void write_binary(std::ostream& os, const RadialField& u) {
  os.write("NLSR", 4);
  put_le<std::uint32_t>(os, 1);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(u.grid->N));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(u.grid->n));
  for (double r : u.grid->r) put_le<double>(os, r);
  for (double x : u.u) put_le<double>(os, x);
}

RadialField read_binary(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "NLSR", 4) != 0) throw std::runtime_error("not an NLSR field");
  auto version = get_le<std::uint32_t>(is);
  if (version != 1) throw std::runtime_error("unsupported field version");
  int N = static_cast<int>(get_le<std::uint32_t>(is));
  int n = static_cast<int>(get_le<std::uint32_t>(is));
  std::vector<double> r(n + 1), v(n + 1);
  for (auto& x : r) x = get_le<double>(is);
  for (auto& x : v) x = get_le<double>(is);
  return RadialField(make_grid(N, r.back(), n), std::move(v));
}

void save_field(const std::string& path, const RadialField& u, bool binary) {
  std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
  if (!os) throw std::runtime_error("cannot write " + path);
  if (binary)
    write_binary(os, u);
  else
    write_text(os, u);
}

RadialField load_field(const std::string& path, int N) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  char magic[4] = {0, 0, 0, 0};
  is.read(magic, 4);
  is.clear();
  is.seekg(0);
  if (std::memcmp(magic, "NLSR", 4) == 0) return read_binary(is);
  return read_text(is, N);
}

}  // namespace nls
