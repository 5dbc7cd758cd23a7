#include "nls_norm/cli.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "nls_norm/config.hpp"
#include "nls_norm/report.hpp"

namespace nls {

using nlohmann::json;

namespace {

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
}

json plan(const std::string& cmd, const RunConfig& c) {
  const auto& o = c.solver;
  json rhos = json::array();
  for (double r : c.rho_list) rhos.push_back(r);
  json gp = json::array();
  for (double p : c.gn_p) gp.push_back(p);
  return {{"command", cmd},
          {"N", c.instance.N},
          {"rho", c.instance.rho},
          {"grid", {{"R", c.instance.grid.R}, {"n", c.instance.grid.n}, {"auto_scale", c.instance.grid.auto_scale}}},
          {"nonlinearity", c.nonlinearity},
          {"spec_label", c.instance.spec.label},
          {"spec_digest", spec_digest(c.nonlinearity)},
          {"odd", c.instance.spec.odd()},
          {"solver",
           {{"max_iters", o.max_iters},
            {"step", o.step},
            {"backtrack", o.backtrack},
            {"tol_grad", o.tol_grad},
            {"tol_identity", o.tol_identity},
            {"precondition_shift", o.precondition_shift},
            {"symmetrize_every", o.symmetrize_every}}},
          {"sweep", {{"rho_list", rhos}, {"parallelism", c.parallelism}, {"warm_start", c.warm_start}}},
          {"oracle", {{"lambda", c.oracle_lambda}}},
          {"gn", {{"p", gp}}},
          {"output", {{"format", c.output.format}, {"path", c.output.path}, {"emit_profile", c.output.emit_profile}}}};
}

json check_doc(const RunConfig& c, const AssumptionReport& rep) {
  json j = to_json(rep);
  j["spec_digest"] = spec_digest(c.nonlinearity);
  j["spec_label"] = c.instance.spec.label;
  if (c.example && c.instance.spec.label == "E2") j["e2_outer_constant"] = e2_outer_constant(*c.example);
  return j;
}

bool admissible(const AssumptionReport& rep) { return rep.rho_admissible && rep.branch != Branch::inadmissible; }

int cmd_check(const RunConfig& c, std::ostream& out) {
  auto rep = assess(c.instance.spec, c.instance.N, c.instance.rho, c.scan);
  emit(check_doc(c, rep).dump(2) + "\n", c.output.path, out);
  return admissible(rep) ? exit_ok : exit_inadmissible;
}

int cmd_solve(const RunConfig& c, std::ostream& out) {
  auto rep = assess(c.instance.spec, c.instance.N, c.instance.rho, c.scan);
  const auto digest = spec_digest(c.nonlinearity);
  GroundState st;
  try {
    st = solve(c.instance, c.solver, &rep);
  } catch (const SolveError& e) {
    bool inadm = e.kind == SolveErrorKind::inadmissible_rho || e.kind == SolveErrorKind::inadmissible_spec;
    json j = {{"error", e.what()}, {"status", to_string(e.kind)}, {"spec_digest", digest}, {"converged", false}};
    if (inadm) j["report"] = check_doc(c, rep);
    emit(j.dump(2) + "\n", c.output.path, out);
    return inadm ? exit_inadmissible : exit_not_converged;
  }
  auto ver = verify(st, c.instance.spec);
  std::string profile;
  if (c.output.emit_profile) {
    profile = c.output.profile_path;
    if (profile.empty()) profile = (c.output.path.empty() ? std::string("ground_state") : c.output.path) + ".profile";
    save_field(profile, st.u, c.output.profile_format == "binary");
  }
  emit(ground_state_json(st, ver, c.instance, digest, profile).dump(2) + "\n", c.output.path, out);
  return st.converged ? exit_ok : exit_not_converged;
}

int cmd_sweep(const RunConfig& c, std::ostream& out) {
  SweepOptions so;
  so.solver = c.solver;
  so.parallelism = c.parallelism;
  so.warm_start = c.warm_start;
  auto rhos = c.rho_list.empty() ? std::vector<double>{c.instance.rho} : c.rho_list;
  auto pts = sweep(c.instance, rhos, so);

  json summary = {{"spec_digest", spec_digest(c.nonlinearity)}, {"monotone", to_string(check_monotone(pts))}};
  auto fit = [&](AsymptoticMode m, const char* key) {
    try {
      auto f = asymptotics(pts, m);
      summary[key] = {{"slope", f.slope}, {"intercept", f.intercept}, {"verdict", to_string(f.verdict)}, {"points", f.used}};
    } catch (const InsufficientSpan& e) {
      summary[key] = {{"verdict", "insufficient-span"}, {"detail", e.what()}};
    }
  };
  fit(AsymptoticMode::rho_to_zero, "rho_to_zero");
  fit(AsymptoticMode::rho_to_infinity, "rho_to_infinity");

  int conv = 0;
  for (const auto& p : pts) conv += p.converged;
  if (c.output.format == "csv") {
    std::ostringstream ss;
    write_csv(ss, pts);
    if (c.output.path.empty()) {
      out << ss.str() << summary.dump() << "\n";
    } else {
      emit(ss.str(), c.output.path, out);
      emit(summary.dump(2) + "\n", c.output.path + ".summary.json", out);
    }
  } else {
    json arr = json::array();
    for (const auto& p : pts) arr.push_back(to_json(p));
    emit(json{{"points", arr}, {"summary", summary}}.dump(2) + "\n", c.output.path, out);
  }
  if (conv == static_cast<int>(pts.size())) return exit_ok;
  return conv == 0 ? exit_not_converged : exit_partial;
}

int cmd_gn(const RunConfig& c, std::ostream& out) {
  int N = c.instance.N;
  auto ps = c.gn_p.empty() ? std::vector<double>{lower_critical(N)} : c.gn_p;
  json rows = json::array();
  std::ostringstream csv;
  csv << "N,p,delta,C\n";
  for (double p : ps) {
    if (!(p > 2.0 && p < upper_critical(N))) throw ConfigError("gn exponent must lie in (2, 2N/(N-2))");
    auto row = GnCache::global().get(N, p, c.instance.grid.R, c.instance.grid.n);
    double delta = N * (0.5 - 1.0 / p);
    rows.push_back({{"N", N}, {"p", p}, {"delta", delta}, {"C", row.C}});
    char buf[128];
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", N, p, delta, row.C);
    csv << buf;
  }
  emit(c.output.format == "csv" ? csv.str() : rows.dump(2) + "\n", c.output.path, out);
  return exit_ok;
}

int cmd_oracle(const RunConfig& c, std::ostream& out) {
  auto grid = make_grid(c.instance.N, c.instance.grid.R, c.instance.grid.n);
  ShootingResult s;
  try {
    s = shoot(c.instance.spec, c.oracle_lambda, grid);
  } catch (const OracleError& e) {
    emit(json{{"error", e.what()}}.dump(2) + "\n", c.output.path, out);
    return exit_not_converged;
  }
  json j = shooting_json(s, c.instance.spec, true);
  j["spec_digest"] = spec_digest(c.nonlinearity);
  emit(j.dump(2) + "\n", c.output.path, out);
  return s.decay_ok ? exit_ok : exit_not_converged;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"normalized ground states of -Lap u + lambda u = g(u) with prescribed mass", "nls-norm"};
  app.require_subcommand(1);
  std::string config, out_path;
  bool dry = false;
  const char* names[] = {"check", "solve", "sweep", "gn", "oracle"};
  const char* help[] = {"assumption report and mass threshold", "minimize J on the constraint set",
                        "energy map over a list of masses", "Gagliardo-Nirenberg constants",
                        "shooting ground state at fixed lambda"};
  for (int i = 0; i < 5; ++i) {
    auto* sub = app.add_subcommand(names[i], help[i]);
    sub->add_option("--config", config, "YAML configuration")->required();
    sub->add_option("--out", out_path, "output path, overrides output.path");
    sub->add_flag("--dry-run", dry, "validate the config and print the resolved plan");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_config;
  }
  std::string cmd = app.get_subcommands().front()->get_name();

  RunConfig c;
  try {
    c = load_config(config);
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << "\n";
    return exit_config;
  }
  if (!out_path.empty()) c.output.path = out_path;
  if (dry) {
    out << plan(cmd, c).dump(2) << "\n";
    return exit_ok;
  }
  try {
    if (cmd == "check") return cmd_check(c, out);
    if (cmd == "solve") return cmd_solve(c, out);
    if (cmd == "sweep") return cmd_sweep(c, out);
    if (cmd == "gn") return cmd_gn(c, out);
    return cmd_oracle(c, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return exit_config;
  } catch (const std::exception& e) {
    err << cmd << " failed: " << e.what() << "\n";
    return exit_not_converged;
  }
}

}  // namespace nls
