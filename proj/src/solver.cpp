#include "nls_norm/solver.hpp"

#include <algorithm>
#include <cmath>

#include "nls_norm/oracle.hpp"

namespace nls {

namespace {

constexpr double kPi = 3.14159265358979323846;

double norm_w(const std::vector<double>& v, const RadialGrid& g) {
  double s = 0.0;
  for (int i = 1; i < g.n; ++i) s += g.w[i] * v[i] * v[i];
  return std::sqrt(s);
}

double dot_w(const std::vector<double>& a, const std::vector<double>& b, const RadialGrid& g) {
  double s = 0.0;
  for (int i = 1; i < g.n; ++i) s += g.w[i] * a[i] * b[i];
  return s;
}

void scale_to_mass(RadialField& u, double rho) {
  double m = mass(u);
  if (!(m > 0.0)) throw SolveError(SolveErrorKind::fiber_projection_failed, "field vanished during descent");
  double t = std::sqrt(rho / m);
  for (auto& x : u.u) x *= t;
}

struct Seed {
  double A = 0.0;
  double sigma = 0.0;
};

double seed_width(double A, double rho, int N) {
  return std::pow(rho / (A * A * std::pow(kPi, N / 2.0)), 1.0 / N);
}

RadialField gaussian(GridPtr g, double A, double sigma) {
  return RadialField::from_function(g, [=](double r) { return A * std::exp(-r * r / (2.0 * sigma * sigma)); });
}

// First amplitude whose seed has a positive H integral and a fiber maximum, judged on a grid
// scaled to the seed. lam_star is the fiber maximizer of the returned seed.
Seed pick_seed(const Instance& inst, const SolverOptions& opt, double* lam_star) {
  FiberOptions fo;
  for (double A0 : opt.seed_amplitude_scan) {
    Seed s{A0, seed_width(A0, inst.rho, inst.N)};
    // a maximizer beyond the fiber range: dilate the seed in closed form and look again
    for (int hop = 0; hop < 4; ++hop) {
      RadialField u = gaussian(make_grid(inst.N, inst.grid.R * s.sigma, inst.grid.n), s.A, s.sigma);
      if (!(integral_of(u, inst.spec, Quantity::H) > 0.0)) break;
      try {
        FiberResult fr = maximize_fiber(u, inst.spec, fo);
        if (lam_star) *lam_star = fr.lambda;
        return s;
      } catch (const FiberError& e) {
        if (std::string(e.what()).rfind("no-sign-change", 0) != 0) break;
        s.A *= std::pow(fo.lam_max, inst.N / 2.0);
        s.sigma /= fo.lam_max;
      }
    }
  }
  std::string hint;
  try {
    auto rep = check_assumptions(inst.spec, inst.N, inst.rho, 1.0);
    if (rep.zeta0) hint = "; H is positive at s = " + std::to_string(*rep.zeta0) + ", try larger amplitudes";
  } catch (const std::exception&) {
  }
  throw SolveError(SolveErrorKind::seed_failure, "no seed amplitude gives a positive H integral" + hint);
}

// |grad J - a u - b grad M| / |grad J| with (a, b) the least-squares multipliers
double tangent_norm(const RadialField& u, const NonlinearitySpec& spec) {
  const auto& g = *u.grid;
  auto gJ = grad_J(u, spec);
  auto gM = grad_M(u, spec);
  double uu = dot_w(u.u, u.u, g), um = dot_w(u.u, gM, g), mm = dot_w(gM, gM, g);
  double ju = dot_w(gJ, u.u, g), jm = dot_w(gJ, gM, g);
  double det = uu * mm - um * um;
  double ca = (ju * mm - jm * um) / det, cb = (jm * uu - ju * um) / det;
  std::vector<double> t(gJ.size(), 0.0);
  for (int i = 1; i < g.n; ++i) t[i] = gJ[i] - ca * u.u[i] - cb * gM[i];
  return norm_w(t, g) / norm_w(gJ, g);
}

}  // namespace

std::vector<double> SolverOptions::default_scan() {
  std::vector<double> s;
  for (int k = -2; k <= 6; ++k) s.push_back(std::ldexp(1.0, k));
  return s;
}

std::string to_string(SolveErrorKind k) {
  switch (k) {
    case SolveErrorKind::inadmissible_rho:
      return "inadmissible";
    case SolveErrorKind::inadmissible_spec:
      return "inadmissible-spec";
    case SolveErrorKind::seed_failure:
      return "seed-failure";
    case SolveErrorKind::fiber_projection_failed:
      return "fiber-projection-failed";
  }
  return "error";
}

GridPtr working_grid(const Instance& inst, const SolverOptions& opt) {
  if (!inst.grid.auto_scale) return make_grid(inst.N, inst.grid.R, inst.grid.n);
  double lam = 1.0;
  Seed s = pick_seed(inst, opt, &lam);
  return make_grid(inst.N, inst.grid.R * s.sigma / lam, inst.grid.n);
}

void polish(RadialField& u, const NonlinearitySpec& spec, double rho) {
  const auto& g = *u.grid;
  RadialField base = u;
  double shift = std::max(1.0, lambda_multiplier(base, spec));
  RadialField q = precondition(grad_M(base, spec), base.grid, shift);
  double a = 1.0, b = 0.0;
  RadialField v = base;
  auto defect = [&](const RadialField& x, double& f1, double& f2) {
    f1 = mass(x) - rho;
    f2 = constraint_M(x, spec);
    return std::abs(f1) / rho + std::abs(f2) / kinetic(x);
  };
  double f1, f2;
  double F = defect(v, f1, f2);
  for (int it = 0; it < 30 && F > 1e-15; ++it) {
    auto gM = grad_M(v, spec);
    double j11 = 2.0 * inner(v, base), j12 = 2.0 * inner(v, q);
    double j21 = dot_w(gM, base.u, g), j22 = dot_w(gM, q.u, g);
    double det = j11 * j22 - j12 * j21;
    if (det == 0.0 || !std::isfinite(det)) break;
    double da = (j22 * f1 - j12 * f2) / det, db = (j11 * f2 - j21 * f1) / det;
    // damped: the defect has to shrink
    bool moved = false;
    for (double t = 1.0; t > 1e-3; t *= 0.5) {
      RadialField w = v;
      double at = a - t * da, bt = b - t * db;
      for (int i = 0; i <= g.n; ++i) w.u[i] = at * base.u[i] + bt * q.u[i];
      double e1, e2;
      double Fw = defect(w, e1, e2);
      if (Fw < F) {
        a = at;
        b = bt;
        v = std::move(w);
        F = Fw;
        f1 = e1;
        f2 = e2;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  u = std::move(v);
}

FiberResult retract(RadialField& u, const NonlinearitySpec& spec, double rho, const FiberOptions& fopt) {
  scale_to_mass(u, rho);
  FiberResult fr = maximize_fiber(u, spec, fopt);
  if (std::abs(fr.lambda - 1.0) > 1e-12) {
    u = dilate_mass_preserving(u, fr.lambda);
    apply_origin_closure(u.u, *u.grid);
  }
  polish(u, spec, rho);
  return fr;
}

RadialField initial_guess(const Instance& inst, const SolverOptions& opt, GridPtr grid) {
  double lam = 1.0;
  Seed s = pick_seed(inst, opt, &lam);
  // the dilated seed is evaluated in closed form rather than resampled
  for (int pass = 0; pass < 2; ++pass) {
    s.A *= std::pow(lam, inst.N / 2.0);
    s.sigma /= lam;
    RadialField u = gaussian(grid, s.A, s.sigma);
    scale_to_mass(u, inst.rho);
    lam = pass == 0 ? maximize_fiber(u, inst.spec).lambda : 1.0;
    if (pass == 1 || std::abs(lam - 1.0) < 1e-12) {
      apply_origin_closure(u.u, *grid);
      scale_to_mass(u, inst.rho);
      polish(u, inst.spec, inst.rho);
      return u;
    }
  }
  throw SolveError(SolveErrorKind::seed_failure, "seed projection did not settle");
}

GroundState solve(const Instance& inst, const SolverOptions& opt, const AssumptionReport* report_in,
                  const RadialField* warm) {
  const auto& spec = inst.spec;
  const double rho = inst.rho;
  AssumptionReport local;
  if (!report_in) {
    local = assess(spec, inst.N, rho);
    report_in = &local;
  }
  const AssumptionReport& rep = *report_in;
  bool spec_fails = false;
  for (const char* k : {"A0", "A1", "A2", "A3", "A4", "A5"})
    spec_fails = spec_fails || rep.verdicts.at(k).verdict == Verdict::fail;
  if (spec_fails)
    throw SolveError(SolveErrorKind::inadmissible_spec, "nonlinearity is inadmissible: " + rep.branch_note);
  if (!rep.rho_admissible)
    throw SolveError(SolveErrorKind::inadmissible_rho,
                     "mass " + std::to_string(rho) + " is not below the threshold " + std::to_string(rep.rho_star));

  FiberOptions fopt;
  fopt.global = !rep.passes("A4");

  GridPtr grid = working_grid(inst, opt);
  const auto& g = *grid;
  RadialField u;
  try {
    if (warm) {
      u = resample(*warm, grid);
      apply_origin_closure(u.u, g);
      retract(u, spec, rho, fopt);
    } else {
      u = initial_guess(inst, opt, grid);
    }
  } catch (const FiberError& e) {
    throw SolveError(SolveErrorKind::fiber_projection_failed, e.what());
  }

  GroundState st;
  st.branch_note = to_string(rep.branch) + ": " + rep.branch_note;
  double J = energy_J(u, spec);
  st.energy_history.push_back(J);
  double alpha = opt.step;
  auto track_constraints = [&](const RadialField& v) {
    double viol = std::max(std::abs(constraint_M(v, spec)) / kinetic(v), std::abs(mass(v) - rho) / rho);
    st.max_constraint_violation = std::max(st.max_constraint_violation, viol);
  };
  track_constraints(u);

  auto try_symmetrize = [&]() {
    RadialField v = rearrange(u);
    apply_origin_closure(v.u, g);
    try {
      scale_to_mass(v, rho);
      FiberResult fr = maximize_fiber(v, spec, fopt);
      double incr = (fr.phi - J) / std::abs(J);
      ++st.symmetrizations;
      st.max_symmetrization_increase = std::max(st.max_symmetrization_increase, incr);
      if (fr.phi <= J + 1e-10 * std::abs(J)) {
        retract(v, spec, rho, fopt);
        u = std::move(v);
        J = energy_J(u, spec);
      }
    } catch (const std::exception&) {
    }
  };

  st.status = "max-iters-exceeded";
  int it = 0;
  for (; it < opt.max_iters; ++it) {
    double lam = lambda_multiplier(u, spec);
    auto gJ = grad_J(u, spec);
    auto gM = grad_M(u, spec);

    st.grad_norm = tangent_norm(u, spec);

    if (st.grad_norm < opt.tol_grad) {
      auto res = residuals(u, spec, lam);
      if (std::abs(res.m_residual) < opt.tol_identity && std::abs(res.nehari_residual) < opt.tol_identity &&
          std::abs(res.pohozaev_residual) < opt.tol_identity) {
        st.status = "converged";
        st.converged = true;
        break;
      }
    }

    std::vector<double> gvec(gJ.size(), 0.0);
    for (int i = 1; i < g.n; ++i) gvec[i] = gJ[i] + lam * u.u[i];
    double shift = opt.shift_follows_lambda ? std::max(opt.precondition_shift, lam) : opt.precondition_shift;
    // preconditioned gradient, projected onto the tangent space of mass and M in the P^{-1} metric
    RadialField Pg = precondition(gvec, grid, shift);
    RadialField Pu = precondition(u.u, grid, shift);
    RadialField Pm = precondition(gM, grid, shift);
    double a11 = dot_w(u.u, Pu.u, g), a12 = dot_w(u.u, Pm.u, g), a22 = dot_w(gM, Pm.u, g);
    double r1 = dot_w(u.u, Pg.u, g), r2 = dot_w(gM, Pg.u, g);
    double dd = a11 * a22 - a12 * a12;
    double c1 = (r1 * a22 - r2 * a12) / dd, c2 = (r2 * a11 - r1 * a12) / dd;
    for (int i = 0; i <= g.n; ++i) Pg.u[i] -= c1 * Pu.u[i] + c2 * Pm.u[i];
    double slope = dot_w(gvec, Pg.u, g);

    bool accepted = false;
    bool first = true;
    for (int bt = 0; bt < opt.max_backtracks; ++bt, first = false) {
      RadialField v = u;
      for (int i = 0; i <= g.n; ++i) v.u[i] -= alpha * Pg.u[i];
      apply_origin_closure(v.u, g);
      FiberResult fr;
      try {
        scale_to_mass(v, rho);
        fr = maximize_fiber(v, spec, fopt);
      } catch (const std::exception&) {
        alpha *= opt.backtrack;
        continue;
      }
      double decrease = 1e-4 * alpha * slope;
      double noise = 1e-13 * std::abs(J);
      // below the energy noise floor the tangent gradient has to shrink instead
      bool quiet = decrease < noise;
      if (!(fr.phi <= J - decrease || (quiet && fr.phi <= J + noise))) {
        alpha *= opt.backtrack;
        continue;
      }
      // small fiber corrections are left to the polish, resampling would add noise
      if (std::abs(fr.lambda - 1.0) > opt.dilation_threshold) {
        v = dilate_mass_preserving(v, fr.lambda);
        apply_origin_closure(v.u, g);
      }
      polish(v, spec, rho);
      if (quiet && tangent_norm(v, spec) >= st.grad_norm) {
        alpha *= opt.backtrack;
        continue;
      }
      u = std::move(v);
      J = energy_J(u, spec);
      st.energy_history.push_back(J);
      track_constraints(u);
      if (first && !quiet) alpha = std::min(alpha * 2.0, 16.0);
      accepted = true;
      break;
    }
    if (!accepted) {
      st.status = "stalled";
      break;
    }
    if (spec.odd() && opt.symmetrize_every > 0 && (it + 1) % opt.symmetrize_every == 0) try_symmetrize();
  }
  st.iterations = it;
  if (spec.odd()) try_symmetrize();

  st.u = u;
  st.lambda = lambda_multiplier(u, spec);
  st.energy = energy_J(u, spec);
  st.rho_attained = mass(u);
  st.residuals = residuals(u, spec, st.lambda);
  st.on_sphere = std::abs(st.rho_attained - rho) <= 1e-8 * rho;
  return st;
}

Verification verify(const GroundState& state, const NonlinearitySpec& spec) {
  Verification v;
  v.original = residuals(state.u, spec, state.lambda);
  const auto& g = *state.u.grid;
  RadialField fine = resample(state.u, make_grid(g.N, g.R, 2 * g.n));
  v.refined = residuals(fine, spec, state.lambda);
  return v;
}

}  // namespace nls
