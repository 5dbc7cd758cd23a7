#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nls_norm/energymap.hpp"
#include "nls_norm/oracle.hpp"
#include "nls_norm/solver.hpp"

namespace nls {

// FNV-1a 64 of the compact, key-sorted dump; 16 hex digits
std::string spec_digest(const nlohmann::json& nonlinearity_block);

// finite doubles as numbers, infinities as "+inf"/"-inf", NaN as null
nlohmann::json num(double x);
double from_num(const nlohmann::json& j);

nlohmann::json to_json(const AssumptionReport& r);
nlohmann::json to_json(const IdentityResiduals& r);
IdentityResiduals residuals_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EnergyMapPoint& p);

struct GroundStateDoc {
  int N = 3;
  double rho = 0.0;
  std::string spec_digest;
  double lambda = 0.0;
  double energy = 0.0;
  double rho_attained = 0.0;
  IdentityResiduals residuals;
  IdentityResiduals refined;
  int iterations = 0;
  bool converged = false;
  std::string status;
  std::string branch_note;
  double grad_norm = 0.0;
  double R = 0.0;
  int n = 0;
  std::string profile_path;
};

nlohmann::json ground_state_json(const GroundState& st, const Verification& v, const Instance& inst,
                                 const std::string& digest, const std::string& profile_path = "");
GroundStateDoc read_ground_state(const nlohmann::json& j);

nlohmann::json shooting_json(const ShootingResult& s, const NonlinearitySpec& spec, bool with_profile = true);

}  // namespace nls
