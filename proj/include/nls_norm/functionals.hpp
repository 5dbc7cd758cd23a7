#pragma once

#include <stdexcept>
#include <vector>

#include "nls_norm/nonlinearity.hpp"
#include "nls_norm/radial.hpp"

namespace nls {

class FiberError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// integral of q(u) over R^N
double integral_of(const RadialField& u, const NonlinearitySpec& spec, Quantity q);

double energy_J(const RadialField& u, const NonlinearitySpec& spec);
double constraint_M(const RadialField& u, const NonlinearitySpec& spec);
std::vector<double> grad_J(const RadialField& u, const NonlinearitySpec& spec);
std::vector<double> grad_M(const RadialField& u, const NonlinearitySpec& spec);

// Throws FiberError when the H integral is not positive.
double r_of_u(const RadialField& u, const NonlinearitySpec& spec);

double fiber_phi(const RadialField& u, const NonlinearitySpec& spec, double lam);
double fiber_dphi(const RadialField& u, const NonlinearitySpec& spec, double lam);

struct FiberOptions {
  double lam_min = 1e-4;
  double lam_max = 1e4;
  bool global = false;  // scan the whole lambda range instead of bracketing outward from 1
  int per_decade = 20;
};

struct FiberResult {
  double lambda = 1.0;
  double phi = 0.0;
  double dphi = 0.0;
  bool plateau = false;
  int evaluations = 0;
};

FiberResult maximize_fiber(const RadialField& u, const NonlinearitySpec& spec,
                           const FiberOptions& opt = {});

double lambda_multiplier(const RadialField& u, const NonlinearitySpec& spec);

struct IdentityResiduals {
  double m_residual = 0.0;
  double nehari_residual = 0.0;
  double pohozaev_residual = 0.0;
  double mu_estimate = 0.0;
  double strong_residual = 0.0;  // |-Lap u + lam u - g(u)| / |lam u|
};

IdentityResiduals residuals(const RadialField& u, const NonlinearitySpec& spec, double lam);

}  // namespace nls
