#include "nls_norm/oracle.hpp"

#include <array>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nls_norm/functionals.hpp"

namespace nls {

namespace {

namespace odeint = boost::numeric::odeint;
using State = std::array<double, 2>;

struct Trajectory {
  int verdict = 0;              // +1 crosses zero, -1 turns upward or blows up, 0 undecided
  std::vector<double> samples;  // u at grid nodes reached before the verdict
  std::vector<double> slopes;
};

// Integrates u'' = lam u - g(u) - (N-1)/r u' from the series start at u(0) = s.
Trajectory integrate(const NonlinearitySpec& spec, double lam, double s, const RadialGrid& grid,
                     bool sample) {
  const int N = grid.N;
  auto rhs = [&](const State& x, State& dx, double r) {
    dx[0] = x[1];
    dx[1] = lam * x[0] - spec.g(x[0]) - (N - 1) / r * x[1];
  };
  double f0 = lam * s - spec.g(s);
  double r0 = 1e-6 / std::sqrt(lam + std::abs(spec.dg(s)) + 1.0);
  State x{s + r0 * r0 / (2.0 * N) * f0, r0 / N * f0};
  Trajectory t;
  auto decide = [&](const State& y) {
    if (y[0] < 0.0) return +1;
    if (y[1] > 0.0 || std::abs(y[0]) > 10.0 * std::abs(s)) return -1;
    return 0;
  };

  if (sample) {
    // land exactly on every node so the samples carry no dense-output error
    struct Stop {};
    std::vector<double> times(grid.r.begin(), grid.r.end());
    times[0] = r0;
    t.samples.reserve(grid.nodes());
    auto observe = [&](const State& y, double r) {
      if (r == r0) {
        t.samples.push_back(s);
        t.slopes.push_back(0.0);
        return;
      }
      t.samples.push_back(y[0]);
      t.slopes.push_back(y[1]);
      if ((t.verdict = decide(y)) != 0) throw Stop{};
    };
    try {
      odeint::integrate_times(odeint::make_controlled(1e-14, 1e-13, odeint::runge_kutta_dopri5<State>()), rhs, x,
                              times.begin(), times.end(), r0, observe);
    } catch (const Stop&) {
    }
    return t;
  }

  auto stepper = odeint::make_dense_output(1e-14, 1e-13, odeint::runge_kutta_dopri5<State>());
  stepper.initialize(x, r0, r0);
  while (true) {
    stepper.do_step(rhs);
    if ((t.verdict = decide(stepper.current_state())) != 0) break;
    if (stepper.current_time() >= grid.R) break;
  }
  return t;
}

double tail_shape(int N, double k, double r) {
  double nu = 0.5 * (N - 2);
  return std::pow(r, -nu) * boost::math::cyl_bessel_k(nu, k * r);
}

}  // namespace

ShootingResult shoot(const NonlinearitySpec& spec, double lam, GridPtr gp) {
  if (!(lam > 0.0)) throw OracleError("shooting needs lambda > 0");
  const auto& grid = *gp;

  // bracket on a geometric scan of initial heights
  double a = 0.0, b = 0.0;
  int va = 0;
  {
    double prev_s = 0.0;
    int prev_v = 0;
    for (int k = 0; k <= 120; ++k) {
      double s = 1e-6 * std::pow(10.0, k * 0.1);
      int v = integrate(spec, lam, s, grid, false).verdict;
      if (v != 0 && prev_v != 0 && v != prev_v) {
        a = prev_s;
        va = prev_v;
        b = s;
        break;
      }
      if (v != 0) {
        prev_s = s;
        prev_v = v;
      }
    }
  }
  if (va == 0) throw OracleError("no-bracket: no sign dichotomy for u(0) in [1e-6, 1e6]");

  int steps = 0;
  for (; steps < 200; ++steps) {
    double m = 0.5 * (a + b);
    if (m <= a || m >= b) break;
    int v = integrate(spec, lam, m, grid, false).verdict;
    if (v == 0) break;
    if (v == va)
      a = m;
    else
      b = m;
  }

  Trajectory ta = integrate(spec, lam, a, grid, true);
  Trajectory tb = integrate(spec, lam, b, grid, true);
  const Trajectory& up = va == -1 ? ta : tb;
  const Trajectory& down = va == -1 ? tb : ta;

  ShootingResult res;
  res.lambda = lam;
  res.u0 = 0.5 * (a + b);
  res.bisections = steps;

  std::size_t limit = std::min(up.samples.size(), down.samples.size());
  std::size_t cut = limit > 0 ? limit - 1 : 0;
  for (std::size_t i = 1; i < limit; ++i) {
    double u1 = up.samples[i], u2 = down.samples[i];
    if (u2 <= 0.0 || up.slopes[i] > 0.0 || std::abs(u1 - u2) > 1e-8 * std::abs(u1)) {
      cut = i - 1;
      break;
    }
  }
  if (cut < 1) throw OracleError("shooting branches separate at the origin");

  std::vector<double> u(grid.nodes(), 0.0);
  for (std::size_t i = 0; i <= cut; ++i) u[i] = 0.5 * (up.samples[i] + down.samples[i]);
  double k = std::sqrt(lam), rc = grid.r[cut];
  double base = tail_shape(grid.N, k, rc);
  for (int i = static_cast<int>(cut) + 1; i <= grid.n; ++i) u[i] = u[cut] * tail_shape(grid.N, k, grid.r[i]) / base;
  res.tail_start = rc;
  res.decay_ok = std::abs(u[grid.n]) < 1e-10;
  for (int i = 1; i <= grid.n; ++i)
    if ((u[i] < 0.0) != (u[i - 1] < 0.0)) ++res.crossings;
  res.profile = RadialField(gp, std::move(u));
  return res;
}

double ScalingLaw::lambda_at(double rho) const { return std::pow(base_mass / rho, -1.0 / beta); }

double ScalingLaw::energy_at(double rho) const {
  return base_energy * std::pow(rho / base_mass, alpha / beta);
}

ScalingLaw power_scaling(double p, int N, GridPtr grid) {
  double ls = lower_critical(N), us = upper_critical(N);
  if (!(p > ls + 1e-12 && p < us - 1e-12))
    throw OracleError("scaling law needs 2_* < p < 2^*, got p = " + std::to_string(p));
  GnRow row = GnCache::global().get(N, p, grid->R, grid->n);
  ScalingLaw s;
  s.p = p;
  s.N = N;
  s.alpha = 2.0 / (p - 2.0) - N / 2.0 + 1.0;
  s.beta = 2.0 / (p - 2.0) - N / 2.0;
  s.base_mass = row.base_mass;
  s.base_energy = row.base_energy;
  s.u0 = row.u0;
  return s;
}

double gn_quotient(const RadialField& v, double p) {
  int N = v.grid->N;
  double delta = N * (0.5 - 1.0 / p);
  double Lp = 0.0;
  for (int i = 1; i < v.size(); ++i) Lp += v.grid->w[i] * std::pow(std::abs(v.u[i]), p);
  Lp = std::pow(Lp, 1.0 / p);
  double grad = std::sqrt(kinetic(v)), L2 = std::sqrt(mass(v));
  return Lp / (std::pow(grad, delta) * std::pow(L2, 1.0 - delta));
}

double gn_constant(int N, double p, GridPtr grid) {
  if (!(p > 2.0 && p < upper_critical(N))) throw OracleError("GN constant needs 2 < p < 2^*");
  auto spec = NonlinearitySpec::powers({{1.0, p}});
  return gn_quotient(shoot(spec, 1.0, grid).profile, p);
}

double sobolev_constant(int N) {
  constexpr double pi = 3.14159265358979323846;
  return std::pow(std::tgamma(N) / std::tgamma(N / 2.0), 1.0 / N) / std::sqrt(pi * N * (N - 2.0));
}

double growth_constant(const NonlinearitySpec& spec, int N, double eps, double eta) {
  double ls = lower_critical(N), us = upper_critical(N);
  double c = 0.0;
  for (int k = 0; k <= 1600; ++k) {
    double t = std::pow(10.0, -8.0 + k * 0.01);
    for (double s : {t, -t}) c = std::max(c, (spec.G(s) - (eps + eta) * std::pow(t, ls)) / std::pow(t, us));
  }
  return c;
}

SmallGradientBound small_gradient_bound(const NonlinearitySpec& spec, int N, double rho, double eta,
                                        double gn_critical) {
  double ls = lower_critical(N), us = upper_critical(N);
  SmallGradientBound b;
  b.eps = 1.0 / (4.0 * N * std::pow(gn_critical, ls) * std::pow(rho, 2.0 / N));
  b.C_eps = growth_constant(spec, N, b.eps, eta);
  double S = std::pow(sobolev_constant(N), us);
  b.delta = b.C_eps > 0.0 ? std::pow(1.0 / (4.0 * N * b.C_eps * S), (N - 2.0) / 4.0) : kInf;
  return b;
}

// ---------------------------------------------------------------- cache

namespace {

std::string default_cache_path() {
  if (const char* p = std::getenv("NLS_NORM_CACHE"); p && *p) return p;
  std::filesystem::path base;
  if (const char* x = std::getenv("XDG_CACHE_HOME"); x && *x)
    base = x;
  else if (const char* h = std::getenv("HOME"); h && *h)
    base = std::filesystem::path(h) / ".cache";
  else
    base = std::filesystem::temp_directory_path();
  return (base / "nls-norm" / "gn_table.txt").string();
}

bool same_key(const GnRow& r, int N, double p, double R, int n) {
  return r.N == N && r.n == n && std::abs(r.p - p) <= 1e-13 * p && std::abs(r.R - R) <= 1e-13 * R;
}

}  // namespace

GnCache::GnCache(std::string path) : path_(std::move(path)) { load(); }

GnCache& GnCache::global() {
  static GnCache cache(default_cache_path());
  return cache;
}

void GnCache::load() {
  std::ifstream is(path_);
  if (!is) return;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    GnRow r;
    if (ls >> r.N >> r.p >> r.R >> r.n >> r.C >> r.u0 >> r.base_mass >> r.base_energy) rows_.push_back(r);
  }
}

void GnCache::append(const GnRow& r) {
  std::error_code ec;
  auto dir = std::filesystem::path(path_).parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir, ec);
  bool fresh = !std::filesystem::exists(path_);
  std::ofstream os(path_, std::ios::app);
  if (!os) return;  // read-only location: keep the in-memory row
  if (fresh) os << "# N p R n C u0 base_mass base_energy\n";
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d %.17g %.17g %d %.17g %.17g %.17g %.17g\n", r.N, r.p, r.R, r.n, r.C, r.u0,
                r.base_mass, r.base_energy);
  os << buf;
}

std::optional<GnRow> GnCache::find(int N, double p, double R, int n) const {
  std::shared_lock lock(mu_);
  for (const auto& r : rows_)
    if (same_key(r, N, p, R, n)) return r;
  return std::nullopt;
}

GnRow GnCache::get(int N, double p, double R, int n) {
  if (auto r = find(N, p, R, n)) return *r;
  std::lock_guard gate(compute_mu_);
  if (auto r = find(N, p, R, n)) return *r;
  auto grid = make_grid(N, R, n);
  auto spec = NonlinearitySpec::powers({{1.0, p}});
  ShootingResult s = shoot(spec, 1.0, grid);
  GnRow row{N, p, R, n, gn_quotient(s.profile, p), s.u0, mass(s.profile), energy_J(s.profile, spec)};
  {
    std::unique_lock lock(mu_);
    rows_.push_back(row);
    append(row);
  }
  return row;
}

AssumptionReport assess(const NonlinearitySpec& spec, int N, double rho, const ScanOptions& opt) {
  double C = GnCache::global().get(N, lower_critical(N)).C;
  return check_assumptions(spec, N, rho, C, opt);
}

}  // namespace nls
