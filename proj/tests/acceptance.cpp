// One line per acceptance criterion; exit status is the number of failures.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "nls_norm/energymap.hpp"
#include "nls_norm/functionals.hpp"
#include "nls_norm/nonlinearity.hpp"
#include "nls_norm/oracle.hpp"
#include "nls_norm/radial.hpp"
#include "nls_norm/solver.hpp"

using namespace nls;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& name, const std::string& detail) {
  std::printf("criterion %2d: %s  %s  [%s]\n", id, ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

NonlinearitySpec pure(double p) { return NonlinearitySpec::powers({{1.0, p}}); }

// sum of a few shells and bumps of either sign; not monotone in general
RadialField random_field(std::mt19937& rng, GridPtr g, bool positive = false) {
  std::uniform_real_distribution<double> amp(0.3, 2.0), ctr(0.0, 4.0), wid(0.6, 2.0), coin(0.0, 1.0);
  struct Bump {
    double a, c, s;
  };
  std::vector<Bump> b;
  int k = 1 + static_cast<int>(coin(rng) * 3.0);
  for (int j = 0; j < k; ++j) {
    double a = amp(rng);
    if (!positive && coin(rng) < 0.3) a = -0.5 * a;
    b.push_back({a, j == 0 ? 0.0 : ctr(rng), wid(rng)});
  }
  auto f = RadialField::from_function(g, [&](double r) {
    double s = 0.0;
    for (const auto& x : b) s += x.a * (std::exp(-std::pow((r - x.c) / x.s, 2)) + std::exp(-std::pow((r + x.c) / x.s, 2)));
    return s;
  });
  f.u.back() = 0.0;
  apply_origin_closure(f.u, *g);
  return f;
}

// lam^{N/2} u(lam x) sampled exactly on the grid scaled by 1/lam
RadialField exact_dilation(const RadialField& u, double lam) {
  const auto& g = *u.grid;
  auto t = make_grid(g.N, g.R / lam, g.n);
  std::vector<double> v(u.u);
  for (double& x : v) x *= std::pow(lam, 0.5 * g.N);
  return RadialField(t, std::move(v));
}

double lp_norm(const RadialField& u, double p) {
  std::vector<double> f(u.size());
  for (int i = 0; i < u.size(); ++i) f[i] = std::pow(std::abs(u.u[i]), p);
  return std::pow(integrate(f, *u.grid), 1.0 / p);
}

Instance instance(NonlinearitySpec spec, double rho, bool auto_scale) {
  Instance in;
  in.N = 3;
  in.rho = rho;
  in.spec = std::move(spec);
  in.grid.auto_scale = auto_scale;
  return in;
}

const std::vector<double> kRhos{0.1, 0.3, 1.0, 3.0, 10.0};

struct SweepRun {
  std::vector<EnergyMapPoint> pts;
  double secs = 0.0;
  bool all_converged = true;
};

SweepRun run_sweep(const NonlinearitySpec& spec, const std::vector<double>& rhos) {
  auto t0 = std::chrono::steady_clock::now();
  SweepRun s;
  s.pts = sweep(instance(spec, 1.0, true), rhos);
  s.secs = seconds_since(t0);
  for (const auto& p : s.pts) s.all_converged = s.all_converged && p.converged;
  return s;
}

}  // namespace

int main() {
  const int N = 3;
  auto std_grid = make_grid(N, 30.0, 4000);
  const double ls = lower_critical(N), us = upper_critical(N);

  // 1, 2: cubic, unit mass, fixed grid
  {
    auto in = instance(pure(4.0), 1.0, false);
    auto t0 = std::chrono::steady_clock::now();
    auto st = solve(in);
    double secs = seconds_since(t0);
    const auto& r = st.residuals;
    bool ok1 = st.converged && std::abs(r.m_residual) < 1e-8 && std::abs(r.nehari_residual) < 1e-6 &&
               std::abs(r.pohozaev_residual) < 1e-6 && std::abs(r.mu_estimate) < 1e-4 && st.energy > 0.0 && secs < 60.0;
    report(1, ok1, "identity suite",
           fmt("|M|/K=%.2e nehari=%.2e pohozaev=%.2e mu=%.2e J=%.6f t=%.2fs", std::abs(r.m_residual),
               std::abs(r.nehari_residual), std::abs(r.pohozaev_residual), std::abs(r.mu_estimate), st.energy, secs));

    auto law = power_scaling(4.0, N, std_grid);
    double ce = law.energy_at(1.0), le = law.lambda_at(1.0);
    double dc = std::abs(st.energy / ce - 1.0), dl = std::abs(st.lambda / le - 1.0);
    report(2, st.converged && dc < 5e-3 && dl < 1e-2, "oracle agreement",
           fmt("c=%.6f predicted %.6f (rel %.2e); lambda=%.4f predicted %.4f (rel %.2e)", st.energy, ce, dc,
               st.lambda, le, dl));
  }

  // 3, 4: sweeps
  {
    auto s4 = run_sweep(pure(4.0), kRhos);
    auto s36 = run_sweep(pure(3.6), kRhos);
    ExampleParams P;
    P.mu = 0.2;
    auto base = pure(4.0);
    auto e4 = build_example(ExampleKind::E4, &base, P);
    double rs = assess(e4, N, 1.0).rho_star;
    std::vector<double> e4_rhos;
    for (double r : kRhos)
      if (r < rs) e4_rhos.push_back(r);
    auto se4 = run_sweep(e4, e4_rhos);

    auto f4 = asymptotics(s4.pts, AsymptoticMode::rho_to_zero);
    auto f36 = asymptotics(s36.pts, AsymptoticMode::rho_to_zero);
    bool ok3 = s4.all_converged && s36.all_converged && std::abs(f4.slope + 1.0) < 0.02 &&
               std::abs(f36.slope + 3.0) < 0.15 && s4.secs < 600 && s36.secs < 600;
    report(3, ok3, "scaling-law slope",
           fmt("p=4 slope %.5f (%.1fs), p=3.6 slope %.5f (%.1fs)", f4.slope, s4.secs, f36.slope, s36.secs));

    bool ok4 = true;
    std::string d;
    for (auto* s : {&s4, &s36, &se4}) {
      auto m = check_monotone(s->pts);
      auto fit = asymptotics(s->pts, AsymptoticMode::rho_to_zero);
      bool grows = fit.verdict == AsymptoticVerdict::divergence_consistent;
      ok4 = ok4 && s->all_converged && m == Monotone::strict && grows;
      d += to_string(m) + "/" + to_string(fit.verdict) + " ";
    }
    d += fmt("(E4 mu=0.2, rho* = %.3f, %zu points)", rs, e4_rhos.size());
    report(4, ok4, "strict monotonicity", d);
  }

  // 5: Gagliardo-Nirenberg constant
  {
    double c = gn_constant(N, 4.0, std_grid);
    double c2 = gn_constant(N, 4.0, make_grid(N, 60.0, 8000));
    double stab = std::abs(c2 / c - 1.0);
    std::mt19937 rng(5);
    double fine = std::abs(gn_constant(N, 4.0, make_grid(N, 30.0, 8000)) / c - 1.0);
    double worst = -1.0;
    for (int k = 0; k < 100; ++k) worst = std::max(worst, gn_quotient(random_field(rng, std_grid), 4.0) / c - 1.0);
    report(5, stab < 1e-6 && worst <= 1e-6, "Gagliardo-Nirenberg extremality",
           fmt("C=%.10f, (R,n) doubling change %.2e, dr halving change %.2e, best random quotient %+.3e relative", c,
               stab, fine, worst));
  }

  // 6: truth table and examples
  {
    bool ok = true;
    std::string d;
    auto rep_of = [&](const NonlinearitySpec& s) { return check_assumptions(s, N, 1.0, 0.5); };
    for (double p : {3.0, ls, 3.5, 4.0, 5.0, us}) {
      auto r = rep_of(pure(p));
      bool a2 = r.passes("A2"), a3 = r.passes("A3");
      bool inside = p > ls && p < us;
      bool expect_a2 = p > ls, expect_a3 = p < us;
      bool all = true;
      for (const char* k : {"A0", "A1", "A2", "A3", "A4", "A5"}) all = all && r.passes(k);
      bool row = a2 == expect_a2 && a3 == expect_a3 && all == inside;
      ok = ok && row;
      d += fmt("p=%.4g:%s ", p, row ? "ok" : "MISMATCH");
    }
    auto base = pure(4.0);
    auto a05 = [&](const AssumptionReport& r) {
      bool all = true;
      for (const char* k : {"A0", "A1", "A2", "A3", "A4", "A5"}) all = all && r.passes(k);
      return all;
    };
    ExampleParams P;
    P.zeta = 1.0;
    bool e1 = a05(rep_of(build_example(ExampleKind::E1, &base, P)));
    // thin shells, q ramping between them; a long flat stretch of q up to M breaks A4
    auto e2_params = [](double lo, double M, int J) {
      ExampleParams Q;
      Q.M = M;
      Q.p = 4.0;
      for (int j = 1; j <= J; ++j) {
        Q.levels.push_back(0.5 + std::pow(2.0, -j));
        Q.intervals.emplace_back(lo * std::pow(2.0, -j), std::pow(2.0, -j));
      }
      Q.a_limit = Q.levels.back();
      return Q;
    };
    auto r2 = rep_of(build_example(ExampleKind::E2, nullptr, e2_params(0.9, 0.55, 48)));
    bool e2 = r2.passes("A0") && r2.passes("A1") && r2.passes("A2") && r2.passes("A3") && r2.passes("A4_preceq") &&
              r2.passes("A5_preceq") && std::abs(r2.eta.value - 0.5 / (ls * (ls - 1.0))) < 1e-9;
    bool e2_wide = rep_of(build_example(ExampleKind::E2, nullptr, e2_params(0.6, 1.0, 48))).passes("A4");
    ExampleParams B;
    B.a = 1.0;
    B.b = 1.4;
    auto r3 = rep_of(build_example(ExampleKind::E3, &base, B));
    bool e3 = a05(r3) && r3.passes("A4_preceq") == rep_of(base).passes("A4_preceq");
    B.b = 2.0;
    bool wide = rep_of(build_example(ExampleKind::E3, &base, B)).passes("A4");
    ExampleParams M4;
    M4.mu = 0.2;
    auto r4 = rep_of(build_example(ExampleKind::E4, &base, M4));
    bool e4 = a05(r4) && std::abs(r4.eta.value - 0.2) < 1e-9;
    ok = ok && e1 && e2 && e3 && e4;
    d += fmt("E1:%s E2:%s E3[1,1.4]:%s E4:%s; A4 on wide E2 shells %s, on E3[1,2] %s", e1 ? "ok" : "MISMATCH",
             e2 ? "ok" : "MISMATCH", e3 ? "ok" : "MISMATCH", e4 ? "ok" : "MISMATCH", e2_wide ? "holds" : "fails",
             wide ? "holds" : "fails");
    report(6, ok, "assumption truth table", d);
  }

  auto specs = std::vector<NonlinearitySpec>{pure(4.0), NonlinearitySpec::powers({{1.0, 3.5}, {0.5, 5.0}})};
  auto grid7 = make_grid(N, 20.0, 2000);

  // 7: J - M/2 = (N/4) int (H - 4G/N) on the constraint set
  {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> rho(0.5, 20.0);
    double worst = 0.0;
    int used = 0;
    for (int k = 0; k < 200; ++k) {
      const auto& spec = specs[k % 2];
      auto u = random_field(rng, grid7);
      retract(u, spec, rho(rng));
      double J = energy_J(u, spec);
      double rhs = 0.25 * N * (integral_of(u, spec, Quantity::H) - 4.0 / N * integral_of(u, spec, Quantity::G));
      worst = std::max(worst, std::abs(J - rhs) / std::abs(J));
      ++used;
    }
    report(7, used == 200 && worst < 1e-8, "coercivity identity", fmt("%d fields, max rel error %.2e", used, worst));
  }

  // 8: fiber map contract
  {
    std::mt19937 rng(8);
    double worst_d = 0.0, worst_m = 0.0, worst_one = 0.0;
    for (int k = 0; k < 50; ++k) {
      const auto& spec = specs[k % 2];
      auto u = random_field(rng, grid7);
      auto fr = maximize_fiber(u, spec);
      auto d = exact_dilation(u, fr.lambda);
      worst_d = std::max(worst_d, std::abs(fr.dphi));
      worst_m = std::max(worst_m, std::abs(constraint_M(d, spec)) / kinetic(d));
      retract(u, spec, 1.0 + k);
      worst_one = std::max(worst_one, std::abs(maximize_fiber(u, spec).lambda - 1.0));
    }
    report(8, worst_d < 1e-10 && worst_m < 1e-8 && worst_one < 1e-6, "fiber-map contract",
           fmt("max |phi'(lam*)|=%.2e, max |M|/K=%.2e, on M max |lam*-1|=%.2e", worst_d, worst_m, worst_one));
  }

  // 9: gradients against central differences
  {
    std::mt19937 rng(9);
    std::normal_distribution<double> nd;
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
      const auto& spec = specs[k % 2];
      auto u = random_field(rng, grid7);
      std::vector<double> dir(u.size(), 0.0);
      for (int i = 1; i < grid7->n; ++i) dir[i] = nd(rng) * std::exp(-0.1 * grid7->r[i]);
      apply_origin_closure(dir, *grid7);
      auto gJ = grad_J(u, spec), gM = grad_M(u, spec);
      double pj = 0.0, pm = 0.0;
      for (int i = 0; i < u.size(); ++i) {
        pj += grid7->w[i] * gJ[i] * dir[i];
        pm += grid7->w[i] * gM[i] * dir[i];
      }
      double e = 1e-5;
      RadialField a = u, b = u;
      for (int i = 0; i < u.size(); ++i) {
        a.u[i] += e * dir[i];
        b.u[i] -= e * dir[i];
      }
      double fj = (energy_J(a, spec) - energy_J(b, spec)) / (2 * e);
      double fm = (constraint_M(a, spec) - constraint_M(b, spec)) / (2 * e);
      worst = std::max({worst, std::abs(pj - fj) / std::abs(fj), std::abs(pm - fm) / std::abs(fm)});
    }
    report(9, worst < 1e-5, "gradient correctness", fmt("20 pairs, max rel deviation %.2e", worst));
  }

  // 10: symmetrization
  {
    std::mt19937 rng(10);
    const double ps[] = {ls, 3.0, 4.0, us};
    double worst_m = 0.0, worst_p = 0.0, worst_k = -1.0;
    for (int k = 0; k < 50; ++k) {
      auto u = random_field(rng, std_grid);
      auto s = rearrange(u);
      worst_m = std::max(worst_m, std::abs(mass(s) / mass(u) - 1.0));
      for (double p : ps) worst_p = std::max(worst_p, std::abs(lp_norm(s, p) / lp_norm(u, p) - 1.0));
      worst_k = std::max(worst_k, kinetic(s) / kinetic(u) - 1.0);
    }
    report(10, worst_m < 1e-10 && worst_p < 1e-10 && worst_k <= 0.0, "symmetrization",
           fmt("mass %.2e, L^p (p=2_*,3,4,2^*) %.2e, max kinetic change %+.2e", worst_m, worst_p, worst_k));
  }

  // 11: small-gradient energy bound
  {
    double Cgn = GnCache::global().get(N, ls).C;
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> t(0.01, 1.0);
    bool ok = true;
    std::string d;
    ExampleParams P;
    P.mu = 0.2;
    auto base = pure(4.0);
    for (const auto& spec : {pure(4.0), build_example(ExampleKind::E4, &base, P)}) {
      auto rep = assess(spec, N, 1.0);
      double rho = 0.5 * std::min(rep.rho_star, 10.0);
      auto b = small_gradient_bound(spec, N, rho, rep.eta.value, Cgn);
      double worst = std::numeric_limits<double>::infinity();
      for (int k = 0; k < 100; ++k) {
        auto u = random_field(rng, std_grid);
        double sc = std::sqrt(rho / mass(u));
        for (double& x : u.u) x *= sc;
        auto v = exact_dilation(u, std::sqrt(t(rng) * b.delta * b.delta / kinetic(u)));
        worst = std::min(worst, energy_J(v, spec) / (kinetic(v) / (2.0 * N)));
      }
      ok = ok && worst >= 1.0;
      d += fmt("%s rho=%.3g delta=%.3e min J/(K/2N)=%.4f; ", spec.label.empty() ? "powers" : spec.label.c_str(), rho,
               b.delta, worst);
    }
    report(11, ok, "small-gradient energy bound", d);
  }

  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
