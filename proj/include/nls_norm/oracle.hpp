#pragma once

#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "nls_norm/nonlinearity.hpp"
#include "nls_norm/radial.hpp"

namespace nls {

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ShootingResult {
  RadialField profile;
  double u0 = 0.0;
  double lambda = 1.0;
  int crossings = 0;
  bool decay_ok = false;
  double tail_start = 0.0;  // radius where the linear tail replaces the integrated branch
  int bisections = 0;
};

// Ground state of -Lap u + lam u = g(u) sampled on grid.
ShootingResult shoot(const NonlinearitySpec& spec, double lam, GridPtr grid);

struct ScalingLaw {
  double p = 4.0;
  int N = 3;
  double alpha = 0.0;
  double beta = 0.0;
  double base_mass = 0.0;
  double base_energy = 0.0;
  double u0 = 0.0;

  double lambda_at(double rho) const;
  double energy_at(double rho) const;
};

ScalingLaw power_scaling(double p, int N, GridPtr grid);

double gn_constant(int N, double p, GridPtr grid);
// |v|_p / (|grad v|^delta |v|_2^(1-delta))
double gn_quotient(const RadialField& v, double p);

// Best constant of |u|_{2^*} <= S |grad u|_2 (Aubin-Talenti)
double sobolev_constant(int N);

// G <= (eps + eta)|s|^{2_*} + C_eps |s|^{2^*}: smallest C_eps over a log scan
double growth_constant(const NonlinearitySpec& spec, int N, double eps, double eta);

struct SmallGradientBound {
  double eps = 0.0;
  double C_eps = 0.0;
  double delta = 0.0;
};

SmallGradientBound small_gradient_bound(const NonlinearitySpec& spec, int N, double rho, double eta,
                                        double gn_critical);

struct GnRow {
  int N = 3;
  double p = 0.0, R = 0.0;
  int n = 0;
  double C = 0.0, u0 = 0.0, base_mass = 0.0, base_energy = 0.0;
};

// Persistent table of shooting-derived constants keyed by (N, p, R, n).
class GnCache {
 public:
  explicit GnCache(std::string path);
  static GnCache& global();  // path from NLS_NORM_CACHE or a default under the user cache dir

  GnRow get(int N, double p, double R = 30.0, int n = 4000);
  std::optional<GnRow> find(int N, double p, double R, int n) const;
  const std::string& path() const { return path_; }

 private:
  void load();
  void append(const GnRow& row);

  std::string path_;
  mutable std::shared_mutex mu_;
  std::mutex compute_mu_;
  std::vector<GnRow> rows_;
};

// Convenience: check_assumptions with C_{N,2_*} taken from the cache.
AssumptionReport assess(const NonlinearitySpec& spec, int N, double rho, const ScanOptions& opt = {});

}  // namespace nls
