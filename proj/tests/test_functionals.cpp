#include <cmath>
#include <random>

#include "doctest.h"
#include "nls_norm/functionals.hpp"
#include "nls_norm/oracle.hpp"

using namespace nls;

namespace {

NonlinearitySpec pure(double p) { return NonlinearitySpec::powers({{1.0, p}}); }

RadialField bump(GridPtr g, double A = 1.0, double s = 1.0) {
  auto f = RadialField::from_function(g, [A, s](double r) { return A * std::exp(-s * r * r) * (1.0 + 0.3 * r); });
  f.u.back() = 0.0;
  apply_origin_closure(f.u, *g);
  return f;
}

// derivative of F along a perturbation supported away from the origin and R
template <class F>
double fd(const RadialField& u, const std::vector<double>& dir, F&& f) {
  double e = 1e-5;
  RadialField a = u, b = u;
  for (int i = 0; i < u.size(); ++i) {
    a.u[i] += e * dir[i];
    b.u[i] -= e * dir[i];
  }
  return (f(a) - f(b)) / (2.0 * e);
}

double h_scaled(const RadialField& u, const NonlinearitySpec& spec, double lam) {
  int N = u.grid->N;
  double s = 0.0;
  for (int i = 1; i < u.size(); ++i) s += u.grid->w[i] * spec.H(std::pow(lam, 0.5 * N) * u.u[i]);
  return std::pow(lam, -N - 2.0) * s;
}

}  // namespace

TEST_SUITE("functionals") {
  TEST_CASE("gradients match finite differences") {
    auto g = make_grid(3, 10.0, 1000);
    auto u = bump(g, 1.2);
    std::mt19937 rng(11);
    std::normal_distribution<double> nd;
    for (auto spec : {pure(4.0), NonlinearitySpec::powers({{1.0, 3.0}, {0.5, 5.0}})}) {
      std::vector<double> dir(u.size(), 0.0);
      for (int i = 20; i < g->n - 20; ++i) dir[i] = nd(rng) * std::exp(-0.05 * g->r[i]);
      auto gJ = grad_J(u, spec);
      auto gM = grad_M(u, spec);
      double pj = 0.0, pm = 0.0;
      for (int i = 0; i < u.size(); ++i) {
        pj += g->w[i] * gJ[i] * dir[i];
        pm += g->w[i] * gM[i] * dir[i];
      }
      CHECK(pj == doctest::Approx(fd(u, dir, [&](const RadialField& v) { return energy_J(v, spec); })).epsilon(1e-6));
      CHECK(pm == doctest::Approx(fd(u, dir, [&](const RadialField& v) { return constraint_M(v, spec); })).epsilon(1e-6));
    }
  }

  TEST_CASE("pure power fiber has the closed-form maximizer") {
    auto g = make_grid(3, 12.0, 1500);
    for (double p : {3.5, 4.0, 5.0}) {
      auto spec = pure(p);
      auto u = bump(g, 3.0, 0.8);
      double K = kinetic(u), G = integral_of(u, spec, Quantity::G);
      double e = 1.5 * (p - 2.0);
      double lam = std::pow(K / (e * G), 1.0 / (e - 2.0));
      auto fr = maximize_fiber(u, spec);
      CHECK(fr.lambda == doctest::Approx(lam).epsilon(1e-9));
      CHECK_FALSE(fr.plateau);
      CHECK(fr.phi == doctest::Approx(0.5 * lam * lam * K - std::pow(lam, e) * G).epsilon(1e-9));
      CHECK(std::abs(fr.dphi) < 1e-8 * K * lam);
      CHECK(fiber_phi(u, spec, 1.0) == doctest::Approx(energy_J(u, spec)).epsilon(1e-12));
      // the maximizer lies on the constraint, r(u) = 1 there
      auto d = dilate_mass_preserving(u, fr.lambda);
      CHECK(std::abs(constraint_M(d, spec)) < 1e-4 * kinetic(d));
      CHECK(r_of_u(u, spec) == doctest::Approx(std::sqrt(1.5 * integral_of(u, spec, Quantity::H) / K)));
      auto gl = maximize_fiber(u, spec, {1e-4, 1e4, true, 20});
      CHECK(gl.lambda == doctest::Approx(fr.lambda).epsilon(1e-8));
    }
  }

  TEST_CASE("fiber derivative matches finite differences") {
    auto g = make_grid(3, 10.0, 1000);
    auto spec = NonlinearitySpec::powers({{1.0, 3.0}, {0.2, 4.5}});
    auto u = bump(g);
    for (double lam : {0.3, 1.0, 2.5}) {
      double e = 1e-6 * lam;
      double num = (fiber_phi(u, spec, lam + e) - fiber_phi(u, spec, lam - e)) / (2 * e);
      CHECK(fiber_dphi(u, spec, lam) == doctest::Approx(num).epsilon(1e-6));
    }
  }

  TEST_CASE("fiber contract failures") {
    auto g = make_grid(3, 10.0, 500);
    auto spec = pure(4.0);
    auto z = RadialField::zeros(g);
    CHECK_THROWS_AS(maximize_fiber(z, spec), FiberError);
    CHECK_THROWS_AS(r_of_u(z, spec), FiberError);
    // critical power: phi is a multiple of lam^2, no interior maximum
    auto crit = pure(lower_critical(3));
    auto u = bump(g, 0.1);
    CHECK_THROWS_AS(maximize_fiber(u, crit), FiberError);
  }

  TEST_CASE("flat fiber reports the leftmost maximizer") {
    auto g = make_grid(3, 10.0, 1000);
    auto u = bump(g, 0.5);
    double ls = lower_critical(3);
    double K = kinetic(u);
    double Gc = integral_of(u, pure(ls), Quantity::G);
    // G = K/2 exactly in the critical regime; supercritical above amplitude 1
    double c = K / (2.0 * Gc);
    auto spec = NonlinearitySpec::piecewise({{0.0, 1.0, {{c * (ls - 1.0), ls - 2.0}}},
                                             {1.0, kInf, {{c * (ls - 1.0), ls - 2.0}, {1.0, 2.0}}}});
    auto fr = maximize_fiber(u, spec, {1e-2, 1e2, true, 40});
    CHECK(fr.plateau);
    CHECK(std::abs(fr.phi) < 1e-10 * K);
  }

  TEST_CASE("rescaled H integral is nondecreasing in lambda") {
    auto g = make_grid(3, 10.0, 1000);
    auto u = bump(g);
    for (auto spec : {pure(4.0), NonlinearitySpec::powers({{1.0, 3.5}, {2.0, 5.0}}),
                      NonlinearitySpec::powers({{1.0, 4.0}, {0.3 * lower_critical(3), lower_critical(3)}})}) {
      double prev = 0.0;
      for (double lam = 0.05; lam < 20.0; lam *= 1.2) {
        double v = h_scaled(u, spec, lam);
        CHECK(v >= prev * (1.0 - 1e-12));
        prev = v;
      }
    }
  }

  TEST_CASE("lambda multiplier and identities at the exact ground state") {
    auto g = make_grid(3, 30.0, 4000);
    auto spec = pure(4.0);
    auto s = shoot(spec, 1.0, g);
    auto res = residuals(s.profile, spec, 1.0);
    CHECK(std::abs(res.m_residual) < 1e-6);
    CHECK(std::abs(res.nehari_residual) < 1e-6);
    CHECK(std::abs(res.pohozaev_residual) < 1e-6);
    CHECK(res.strong_residual < 1e-5);
    CHECK(std::abs(res.mu_estimate) < 1e-4);
    CHECK(lambda_multiplier(s.profile, spec) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(constraint_M(s.profile, spec)) < 1e-6 * kinetic(s.profile));
    // off the constraint the m residual is order one
    auto off = dilate_mass_preserving(s.profile, 1.3);
    CHECK(std::abs(residuals(off, spec, 1.0).m_residual) > 0.1);
  }
}
