#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nls_norm/functionals.hpp"
#include "nls_norm/nonlinearity.hpp"
#include "nls_norm/radial.hpp"

namespace nls {

enum class SolveErrorKind { inadmissible_rho, inadmissible_spec, seed_failure, fiber_projection_failed };

std::string to_string(SolveErrorKind k);

class SolveError : public std::runtime_error {
 public:
  SolveError(SolveErrorKind k, const std::string& what) : std::runtime_error(what), kind(k) {}
  SolveErrorKind kind;
};

struct GridSpec {
  double R = 30.0;
  int n = 4000;
  // R is measured in widths of the fiber-projected seed instead of absolute units
  bool auto_scale = false;
};

struct Instance {
  int N = 3;
  double rho = 1.0;
  NonlinearitySpec spec;
  GridSpec grid;
};

struct SolverOptions {
  int max_iters = 5000;
  double step = 0.1;
  double backtrack = 0.5;
  double tol_grad = 1e-9;
  double tol_identity = 1e-6;
  double precondition_shift = 1.0;
  bool shift_follows_lambda = true;  // use max(shift, lambda_k)
  std::vector<double> seed_amplitude_scan = default_scan();
  int symmetrize_every = 25;
  int max_backtracks = 40;
  double dilation_threshold = 1e-3;  // |lambda* - 1| below this skips resampling

  static std::vector<double> default_scan();
};

struct GroundState {
  RadialField u;
  double lambda = 0.0;
  double energy = 0.0;
  double rho_attained = 0.0;
  IdentityResiduals residuals;
  bool on_sphere = false;
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;
  std::string status;       // converged, max-iters-exceeded, stalled
  std::string branch_note;
  std::vector<double> energy_history;
  int symmetrizations = 0;
  double max_symmetrization_increase = 0.0;  // relative; expected <= 1e-10
  double max_constraint_violation = 0.0;     // over accepted iterates, |M|/K and |mass-rho|/rho
};

// Working grid for an instance: the configured grid, or one scaled to the seed width.
GridPtr working_grid(const Instance& inst, const SolverOptions& opt);

RadialField initial_guess(const Instance& inst, const SolverOptions& opt, GridPtr grid);

// Retraction onto mass = rho and M = 0 for a nonzero field; returns the fiber result.
FiberResult retract(RadialField& u, const NonlinearitySpec& spec, double rho, const FiberOptions& fopt = {});

// Exact constraint polish: u <- a u + b q with q a smooth direction, Newton in (a, b).
void polish(RadialField& u, const NonlinearitySpec& spec, double rho);

GroundState solve(const Instance& inst, const SolverOptions& opt = {}, const AssumptionReport* report = nullptr,
                  const RadialField* warm_start = nullptr);

struct Verification {
  IdentityResiduals original;
  IdentityResiduals refined;
};

Verification verify(const GroundState& state, const NonlinearitySpec& spec);

}  // namespace nls
