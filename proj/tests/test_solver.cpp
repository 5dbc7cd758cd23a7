#include <cmath>

#include "doctest.h"
#include "nls_norm/oracle.hpp"
#include "nls_norm/solver.hpp"

using namespace nls;

namespace {

NonlinearitySpec pure(double p) { return NonlinearitySpec::powers({{1.0, p}}); }

Instance inst(NonlinearitySpec spec, double rho, bool auto_scale = false) {
  Instance in;
  in.N = 3;
  in.rho = rho;
  in.spec = std::move(spec);
  in.grid.auto_scale = auto_scale;
  return in;
}

const GroundState& cubic_unit_mass() {
  static GroundState st = solve(inst(pure(4.0), 1.0));
  return st;
}

}  // namespace

TEST_SUITE("solver") {
  TEST_CASE("cubic, unit mass, fixed grid") {
    const auto& st = cubic_unit_mass();
    auto s = power_scaling(4.0, 3, make_grid(3, 30.0, 4000));
    CHECK(st.converged);
    CHECK(st.status == "converged");
    CHECK(st.on_sphere);
    CHECK(st.rho_attained == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(st.lambda == doctest::Approx(s.lambda_at(1.0)).epsilon(1e-3));
    CHECK(st.energy == doctest::Approx(s.energy_at(1.0)).epsilon(1e-3));
    CHECK(std::abs(st.residuals.mu_estimate) < 1e-4);
    CHECK(st.grad_norm < 1e-9);
    CHECK(st.max_symmetrization_increase <= 1e-10);
    CHECK(st.max_constraint_violation < 1e-8);
    for (size_t k = 1; k < st.energy_history.size(); ++k)
      CHECK(st.energy_history[k] <= st.energy_history[k - 1] + 1e-12 * std::abs(st.energy_history[k - 1]));
    for (int i = 1; i < st.u.size(); ++i) CHECK(st.u.u[i] <= st.u.u[i - 1] + 1e-12 * st.u.u[0]);
  }

  TEST_CASE("energy scales like 1/rho for the cubic") {
    auto a = solve(inst(pure(4.0), 1.0, true));
    auto b = solve(inst(pure(4.0), 4.0, true));
    REQUIRE(a.converged);
    REQUIRE(b.converged);
    CHECK(b.energy == doctest::Approx(0.25 * a.energy).epsilon(1e-2));
    CHECK(b.lambda == doctest::Approx(a.lambda / 16.0).epsilon(1e-2));
  }

  TEST_CASE("resolved run at the oracle mass verifies") {
    auto law = power_scaling(4.0, 3, make_grid(3, 30.0, 4000));
    auto in = inst(pure(4.0), law.base_mass);
    auto st = solve(in);
    REQUIRE(st.converged);
    CHECK(st.lambda == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(st.energy == doctest::Approx(law.base_energy).epsilon(1e-6));
    auto v = verify(st, in.spec);
    SolverOptions opt;
    CHECK(std::abs(v.refined.m_residual) < 4 * opt.tol_identity);
    CHECK(std::abs(v.refined.nehari_residual) < 4 * opt.tol_identity);
    CHECK(std::abs(v.refined.pohozaev_residual) < 4 * opt.tol_identity);
  }

  TEST_CASE("mixed power with a mass-critical part") {
    ExampleParams P;
    P.mu = 0.2;
    auto base = pure(4.0);
    auto spec = build_example(ExampleKind::E4, &base, P);
    auto st = solve(inst(spec, 1.0, true));
    CHECK(st.converged);
    CHECK(st.energy > 0.0);
    CHECK(std::abs(st.residuals.nehari_residual) < 1e-6);
    CHECK(std::abs(st.residuals.pohozaev_residual) < 1e-6);
  }

  TEST_CASE("seed clears a negative H well") {
    // H < 0 for small amplitudes, positive beyond zeta0
    auto spec = NonlinearitySpec::powers({{-1.0, 3.0}, {1.0, 5.0}});
    auto rep = check_assumptions(spec, 3, 1.0, 0.5);
    REQUIRE(rep.zeta0.has_value());
    CHECK(spec.H(0.5 * *rep.zeta0) < 0.0);
    auto in = inst(spec, 1.0);
    SolverOptions opt;
    auto u = initial_guess(in, opt, working_grid(in, opt));
    CHECK(u.u[0] > *rep.zeta0);
    CHECK(integral_of(u, spec, Quantity::H) > 0.0);
  }

  TEST_CASE("narrow critical band") {
    ExampleParams P;
    P.a = 1.0;
    P.b = 1.4;
    auto base = pure(4.0);
    auto st = solve(inst(build_example(ExampleKind::E3, &base, P), 2.0, true));
    CHECK(st.converged);
    CHECK(st.lambda > 0.0);
  }

  TEST_CASE("runs are deterministic") {
    auto a = solve(inst(pure(3.6), 3.0, true));
    auto b = solve(inst(pure(3.6), 3.0, true));
    CHECK(a.iterations == b.iterations);
    CHECK(a.energy == b.energy);
    CHECK(a.u.u == b.u.u);
  }

  TEST_CASE("iteration cap") {
    SolverOptions opt;
    opt.max_iters = 1;
    auto st = solve(inst(pure(4.0), 1.0), opt);
    CHECK_FALSE(st.converged);
    CHECK(st.status == "max-iters-exceeded");
    CHECK(st.iterations <= 1);
    CHECK(st.on_sphere);
  }

  TEST_CASE("inadmissible problems are refused") {
    try {
      solve(inst(pure(3.0), 1.0));
      FAIL("expected SolveError");
    } catch (const SolveError& e) {
      CHECK(e.kind == SolveErrorKind::inadmissible_spec);
    }
    ExampleParams P;
    P.mu = 0.5;
    auto base = pure(4.0);
    auto spec = build_example(ExampleKind::E4, &base, P);
    auto rep = assess(spec, 3, 1.0);
    try {
      solve(inst(spec, 2.0 * rep.rho_star));
      FAIL("expected SolveError");
    } catch (const SolveError& e) {
      CHECK(e.kind == SolveErrorKind::inadmissible_rho);
    }
  }
}
