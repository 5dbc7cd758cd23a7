#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "nls_norm/solver.hpp"

namespace nls {

struct EnergyMapPoint {
  double rho = 0.0;
  double c = 0.0;
  double lambda = 0.0;
  bool converged = false;
  double grad_norm = 0.0;
  std::string status;  // solver status, or the failure kind for points that never ran
  int iterations = 0;
};

struct SweepOptions {
  SolverOptions solver;
  int parallelism = 1;     // cold starts only; warm starts run in order
  bool warm_start = true;
};

// One solve per rho; failures are flagged on the point and the sweep goes on. Sorted by rho.
std::vector<EnergyMapPoint> sweep(const Instance& tmpl, std::vector<double> rho_list, const SweepOptions& opt = {});

enum class Monotone { strict, violated, inconclusive };
std::string to_string(Monotone m);

Monotone check_monotone(const std::vector<EnergyMapPoint>& points, double rel_tol = 1e-6);

class InsufficientSpan : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class AsymptoticMode { rho_to_zero, rho_to_infinity };
enum class AsymptoticVerdict { divergence_consistent, decay_consistent, inconsistent };
std::string to_string(AsymptoticVerdict v);

struct AsymptoticFit {
  double slope = 0.0;
  double intercept = 0.0;  // log c = intercept + slope log rho
  AsymptoticVerdict verdict = AsymptoticVerdict::inconsistent;
  int used = 0;
};

AsymptoticFit asymptotics(const std::vector<EnergyMapPoint>& points, AsymptoticMode mode);

void write_csv(std::ostream& os, const std::vector<EnergyMapPoint>& points);

}  // namespace nls
