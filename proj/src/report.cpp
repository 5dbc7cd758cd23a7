#include "nls_norm/report.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>

#include "nls_norm/functionals.hpp"

namespace nls {

using nlohmann::json;

std::string spec_digest(const json& block) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : block.dump()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json num(double x) {
  if (std::isnan(x)) return nullptr;
  if (std::isinf(x)) return x > 0 ? "+inf" : "-inf";
  return x;
}

double from_num(const json& j) {
  if (j.is_null()) return std::nan("");
  if (j.is_string()) {
    auto s = j.get<std::string>();
    if (s == "+inf" || s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    throw std::invalid_argument("not a number: " + s);
  }
  return j.get<double>();
}

json to_json(const AssumptionReport& r) {
  json v = json::object();
  for (const auto& [k, c] : r.verdicts) {
    json e = {{"verdict", to_string(c.verdict)}, {"detail", c.detail}};
    if (c.witness) e["witness"] = num(*c.witness);
    v[k] = e;
  }
  json shells = json::array();
  for (double s : r.eta.shell_sup) shells.push_back(num(s));
  json j = {{"N", r.N},
            {"rho", num(r.rho)},
            {"verdicts", v},
            {"eta",
             {{"value", num(r.eta.value)},
              {"exact", r.eta.exact},
              {"diverges", r.eta.diverges},
              {"trend", r.eta.trend},
              {"shell_sup", shells}}},
            {"growth_c", num(r.growth_c)},
            {"gn_critical", num(r.gn_critical)},
            {"rho_star", num(r.rho_star)},
            {"rho_admissible", r.rho_admissible},
            {"branch", to_string(r.branch)},
            {"branch_note", r.branch_note}};
  j["zeta0"] = r.zeta0 ? num(*r.zeta0) : json(nullptr);
  return j;
}

json to_json(const IdentityResiduals& r) {
  return {{"m", num(r.m_residual)},
          {"nehari", num(r.nehari_residual)},
          {"pohozaev", num(r.pohozaev_residual)},
          {"mu_estimate", num(r.mu_estimate)},
          {"strong", num(r.strong_residual)}};
}

IdentityResiduals residuals_from_json(const json& j) {
  IdentityResiduals r;
  r.m_residual = from_num(j.at("m"));
  r.nehari_residual = from_num(j.at("nehari"));
  r.pohozaev_residual = from_num(j.at("pohozaev"));
  r.mu_estimate = from_num(j.at("mu_estimate"));
  r.strong_residual = from_num(j.at("strong"));
  return r;
}

json to_json(const EnergyMapPoint& p) {
  return {{"rho", num(p.rho)},           {"c", num(p.c)},         {"lambda", num(p.lambda)},
          {"converged", p.converged},    {"grad_norm", num(p.grad_norm)}, {"status", p.status},
          {"iterations", p.iterations}};
}

json ground_state_json(const GroundState& st, const Verification& v, const Instance& inst, const std::string& digest,
                       const std::string& profile_path) {
  const auto& g = *st.u.grid;
  json j = {{"N", inst.N},
            {"rho", num(inst.rho)},
            {"spec_digest", digest},
            {"lambda", num(st.lambda)},
            {"energy", num(st.energy)},
            {"rho_attained", num(st.rho_attained)},
            {"residuals", to_json(v.original)},
            {"refined_residuals", to_json(v.refined)},
            {"iterations", st.iterations},
            {"converged", st.converged},
            {"status", st.status},
            {"grad_norm", num(st.grad_norm)},
            {"branch_note", st.branch_note},
            {"symmetrizations", st.symmetrizations},
            {"max_symmetrization_increase", num(st.max_symmetrization_increase)},
            {"grid", {{"R", num(g.R)}, {"n", g.n}, {"auto_scale", inst.grid.auto_scale}}}};
  if (!profile_path.empty()) j["profile"] = profile_path;
  return j;
}

GroundStateDoc read_ground_state(const json& j) {
  GroundStateDoc d;
  d.N = j.at("N").get<int>();
  d.rho = from_num(j.at("rho"));
  d.spec_digest = j.at("spec_digest").get<std::string>();
  d.lambda = from_num(j.at("lambda"));
  d.energy = from_num(j.at("energy"));
  d.rho_attained = from_num(j.at("rho_attained"));
  d.residuals = residuals_from_json(j.at("residuals"));
  d.refined = residuals_from_json(j.at("refined_residuals"));
  d.iterations = j.at("iterations").get<int>();
  d.converged = j.at("converged").get<bool>();
  d.status = j.at("status").get<std::string>();
  d.branch_note = j.value("branch_note", "");
  d.grad_norm = from_num(j.at("grad_norm"));
  d.R = from_num(j.at("grid").at("R"));
  d.n = j.at("grid").at("n").get<int>();
  d.profile_path = j.value("profile", "");
  return d;
}

json shooting_json(const ShootingResult& s, const NonlinearitySpec& spec, bool with_profile) {
  const auto& g = *s.profile.grid;
  json j = {{"u0", num(s.u0)},
            {"lambda", num(s.lambda)},
            {"crossings", s.crossings},
            {"decay_ok", s.decay_ok},
            {"tail_start", num(s.tail_start)},
            {"bisections", s.bisections},
            {"mass", num(mass(s.profile))},
            {"energy", num(energy_J(s.profile, spec))},
            {"residuals", to_json(residuals(s.profile, spec, s.lambda))},
            {"grid", {{"N", g.N}, {"R", num(g.R)}, {"n", g.n}}}};
  if (with_profile) {
    json r = json::array(), u = json::array();
    for (int i = 0; i <= g.n; ++i) {
      r.push_back(g.r[i]);
      u.push_back(s.profile.u[i]);
    }
    j["profile"] = {{"r", r}, {"u", u}};
  }
  return j;
}

}  // namespace nls
