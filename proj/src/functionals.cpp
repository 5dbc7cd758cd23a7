#include "nls_norm/functionals.hpp"

#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>

namespace nls {

namespace {

struct Sums {
  double G = 0.0, H = 0.0;
};

// sums of w G(a u) and w H(a u)
Sums scaled_sums(const RadialField& u, const NonlinearitySpec& spec, double a) {
  const auto& w = u.grid->w;
  Sums s;
  for (int i = 1; i < u.size(); ++i) {
    if (u.u[i] == 0.0) continue;
    auto v = spec.eval_all(a * u.u[i]);
    s.G += w[i] * v.G;
    s.H += w[i] * v.H;
  }
  return s;
}

struct FiberEval {
  const RadialField& u;
  const NonlinearitySpec& spec;
  double K;
  int count = 0;

  double phi(double lam) {
    ++count;
    int N = u.grid->N;
    Sums s = scaled_sums(u, spec, std::pow(lam, N / 2.0));
    return 0.5 * lam * lam * K - std::pow(lam, -N) * s.G;
  }
  double dphi(double lam) {
    ++count;
    int N = u.grid->N;
    Sums s = scaled_sums(u, spec, std::pow(lam, N / 2.0));
    return lam * K - 0.5 * N * std::pow(lam, -N - 1) * s.H;
  }
  double tol(double lam) { return 1e-12 * (1.0 + std::abs(phi(lam))); }
};

// root of phi' in [lo, hi] with phi'(lo) > 0 >= phi'(hi)
double refine(FiberEval& f, double lo, double hi) {
  double flo = f.dphi(lo), fhi = f.dphi(hi);
  if (fhi == 0.0) return hi;
  std::uintmax_t iters = 200;
  auto fn = [&](double x) { return f.dphi(std::exp(x)); };
  boost::math::tools::eps_tolerance<double> tol(std::numeric_limits<double>::digits - 2);
  auto [a, b] = boost::math::tools::toms748_solve(fn, std::log(lo), std::log(hi), flo, fhi, tol, iters);
  double la = std::exp(a), lb = std::exp(b);
  return std::abs(f.dphi(la)) <= std::abs(f.dphi(lb)) ? la : lb;
}

// leftmost point where phi' drops to within tolerance, below lam
double plateau_left(FiberEval& f, double lo, double lam) {
  double t = f.tol(lam);
  double a = std::log(lo), b = std::log(lam);
  for (int i = 0; i < 80 && b - a > 1e-15 * (1.0 + std::abs(b)); ++i) {
    double m = 0.5 * (a + b);
    if (f.dphi(std::exp(m)) > t)
      a = m;
    else
      b = m;
  }
  return std::exp(b);
}

FiberResult finish(FiberEval& f, double lo, double lam) {
  FiberResult r;
  r.lambda = lam;
  r.phi = f.phi(lam);
  double ahead = f.phi(lam * (1.0 + 1e-3));
  if (std::abs(ahead - r.phi) <= 1e-12 * (1.0 + std::abs(r.phi))) {
    r.plateau = true;
    r.lambda = plateau_left(f, lo, lam);
    r.phi = f.phi(r.lambda);
  }
  r.dphi = f.dphi(r.lambda);
  r.evaluations = f.count;
  return r;
}

}  // namespace

double integral_of(const RadialField& u, const NonlinearitySpec& spec, Quantity q) {
  const auto& w = u.grid->w;
  double s = 0.0;
  for (int i = 1; i < u.size(); ++i) s += w[i] * spec.eval(q, u.u[i]);
  return s;
}

double energy_J(const RadialField& u, const NonlinearitySpec& spec) {
  return 0.5 * kinetic(u) - integral_of(u, spec, Quantity::G);
}

double constraint_M(const RadialField& u, const NonlinearitySpec& spec) {
  return kinetic(u) - 0.5 * u.grid->N * integral_of(u, spec, Quantity::H);
}

std::vector<double> grad_J(const RadialField& u, const NonlinearitySpec& spec) {
  auto lap = laplacian(u);
  std::vector<double> g(u.size(), 0.0);
  for (int i = 1; i + 1 < u.size(); ++i) g[i] = -lap[i] - spec.g(u.u[i]);
  return g;
}

std::vector<double> grad_M(const RadialField& u, const NonlinearitySpec& spec) {
  auto lap = laplacian(u);
  double c = 0.5 * u.grid->N;
  std::vector<double> g(u.size(), 0.0);
  for (int i = 1; i + 1 < u.size(); ++i) g[i] = -2.0 * lap[i] - c * spec.h(u.u[i]);
  return g;
}

double r_of_u(const RadialField& u, const NonlinearitySpec& spec) {
  double H = integral_of(u, spec, Quantity::H);
  double K = kinetic(u);
  if (!(H > 0.0)) throw FiberError("H integral is not positive; projection onto the constraint is undefined");
  if (!(K > 0.0)) throw FiberError("kinetic energy vanishes");
  return std::sqrt(0.5 * u.grid->N * H / K);
}

double fiber_phi(const RadialField& u, const NonlinearitySpec& spec, double lam) {
  FiberEval f{u, spec, kinetic(u)};
  return f.phi(lam);
}

double fiber_dphi(const RadialField& u, const NonlinearitySpec& spec, double lam) {
  FiberEval f{u, spec, kinetic(u)};
  return f.dphi(lam);
}

FiberResult maximize_fiber(const RadialField& u, const NonlinearitySpec& spec, const FiberOptions& opt) {
  FiberEval f{u, spec, kinetic(u)};
  if (!(f.K > 0.0)) throw FiberError("kinetic energy vanishes");

  if (opt.global) {
    int decades = static_cast<int>(std::ceil(std::log10(opt.lam_max / opt.lam_min)));
    int m = decades * opt.per_decade;
    double best_phi = -std::numeric_limits<double>::infinity();
    double best = -1.0, best_lo = opt.lam_min;
    double prev = opt.lam_min, dprev = f.dphi(prev);
    for (int k = 1; k <= m; ++k) {
      double lam = opt.lam_min * std::pow(opt.lam_max / opt.lam_min, double(k) / m);
      double d = f.dphi(lam);
      if (dprev > 0.0 && d <= 0.0) {
        double root = refine(f, prev, lam);
        double ph = f.phi(root);
        if (ph > best_phi + 1e-12 * (1.0 + std::abs(ph))) {
          best_phi = ph;
          best = root;
          best_lo = prev;
        }
      }
      prev = lam;
      dprev = d;
    }
    if (best < 0.0) throw FiberError("no-sign-change: fiber derivative keeps one sign on the lambda range");
    return finish(f, best_lo, best);
  }

  double lam = 1.0, d = f.dphi(lam);
  double lo, hi;
  if (d > 0.0) {
    do {
      lo = lam;
      lam *= 2.0;
      if (lam > opt.lam_max) throw FiberError("no-sign-change: fiber derivative stays positive");
      d = f.dphi(lam);
    } while (d > 0.0);
    hi = lam;
  } else {
    do {
      hi = lam;
      lam *= 0.5;
      if (lam < opt.lam_min) throw FiberError("no-sign-change: fiber derivative stays negative");
      d = f.dphi(lam);
    } while (d <= 0.0);
    lo = lam;
  }
  return finish(f, lo, refine(f, lo, hi));
}

double lambda_multiplier(const RadialField& u, const NonlinearitySpec& spec) {
  const auto& w = u.grid->w;
  double gu = 0.0;
  for (int i = 1; i < u.size(); ++i) gu += w[i] * spec.g(u.u[i]) * u.u[i];
  return (gu - kinetic(u)) / mass(u);
}

IdentityResiduals residuals(const RadialField& u, const NonlinearitySpec& spec, double lam) {
  const auto& g = *u.grid;
  int N = g.N;
  double K = kinetic(u), m = mass(u);
  auto lap = laplacian(u);
  double gu = 0.0, G = 0.0, H = 0.0, rd = 0.0, dd = 0.0, rr = 0.0, uu = 0.0;
  for (int i = 1; i < g.n; ++i) {
    auto v = spec.eval_all(u.u[i]);
    double w = g.w[i];
    gu += w * v.g * u.u[i];
    G += w * v.G;
    H += w * v.H;
    double r = -lap[i] + lam * u.u[i] - v.g;
    double d = -lap[i] - 0.25 * N * v.h;
    rd += w * r * d;
    dd += w * d * d;
    rr += w * r * r;
    uu += w * lam * lam * u.u[i] * u.u[i];
  }
  IdentityResiduals res;
  res.m_residual = (K - 0.5 * N * H) / K;
  res.nehari_residual = (K + lam * m - gu) / K;
  res.pohozaev_residual = (K - upper_critical(N) * (G - 0.5 * lam * m)) / K;
  res.mu_estimate = dd > 0.0 ? -rd / dd : 0.0;
  res.strong_residual = uu > 0.0 ? std::sqrt(rr / uu) : 0.0;
  return res;
}

}  // namespace nls
