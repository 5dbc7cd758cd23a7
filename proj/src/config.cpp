#include "nls_norm/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace nls {

using nlohmann::json;

namespace {

std::string at_mark(const YAML::Node& n) {
  auto m = n.Mark();
  if (m.is_null()) return "";
  return " (line " + std::to_string(m.line + 1) + ", column " + std::to_string(m.column + 1) + ")";
}

void check_keys(const YAML::Node& node, const std::set<std::string>& allowed, const std::string& where) {
  if (!node.IsMap()) throw ConfigError(where + " must be a mapping" + at_mark(node));
  for (auto it = node.begin(); it != node.end(); ++it) {
    auto key = it->first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where + at_mark(it->first));
  }
}

template <class T>
T scalar(const YAML::Node& n, const std::string& what) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("bad value for " + what + at_mark(n));
  }
}

double real(const YAML::Node& n, const std::string& what) {
  auto s = scalar<std::string>(n, what);
  if (s == "inf" || s == ".inf" || s == "+inf") return kInf;
  return scalar<double>(n, what);
}

std::vector<double> reals(const YAML::Node& n, const std::string& what) {
  std::vector<double> v;
  if (n.IsSequence()) {
    for (const auto& x : n) v.push_back(real(x, what));
  } else {
    v.push_back(real(n, what));
  }
  return v;
}

json to_json(const YAML::Node& n) {
  if (n.IsMap()) {
    json j = json::object();
    for (auto it = n.begin(); it != n.end(); ++it) j[it->first.as<std::string>()] = to_json(it->second);
    return j;
  }
  if (n.IsSequence()) {
    json j = json::array();
    for (const auto& x : n) j.push_back(to_json(x));
    return j;
  }
  if (n.IsNull()) return nullptr;
  auto s = n.as<std::string>();
  if (n.Tag() != "!") {
    if (s == "true") return true;
    if (s == "false") return false;
    double d;
    if (YAML::convert<double>::decode(n, d)) return d;
  }
  return s;
}

void check_json_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a mapping");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

double jreal(const json& j, const std::string& what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf" || s == ".inf") return kInf;
  }
  throw ConfigError("expected a number for " + what);
}

double jget(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError("missing '" + std::string(key) + "' in " + where);
  return jreal(j.at(key), where + "." + key);
}

std::vector<PieceDef> pieces_from_json(const json& arr, const std::string& where) {
  if (!arr.is_array() || arr.empty()) throw ConfigError(where + " must be a non-empty list of pieces");
  std::vector<PieceDef> out;
  for (const auto& p : arr) {
    check_json_keys(p, {"lo", "hi", "dg"}, where);
    PieceDef d;
    d.lo = jget(p, "lo", where);
    d.hi = p.contains("hi") ? jreal(p.at("hi"), where + ".hi") : kInf;
    if (!p.contains("dg") || !p.at("dg").is_array()) throw ConfigError("piece in " + where + " needs a dg list");
    for (const auto& m : p.at("dg")) {
      check_json_keys(m, {"coef", "power"}, where + ".dg");
      d.dg.push_back({jget(m, "coef", where + ".dg"), jget(m, "power", where + ".dg")});
    }
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace

NonlinearitySpec spec_from_json(const json& block, int N, std::optional<ExampleParams>* params) {
  const std::string where = "nonlinearity";
  if (!block.is_object() || !block.contains("kind") || !block.at("kind").is_string())
    throw ConfigError("nonlinearity block needs a string 'kind'");
  auto kind = block.at("kind").get<std::string>();
  try {
    if (kind == "powers") {
      check_json_keys(block, {"kind", "terms", "p", "coefficient", "label"}, where);
      std::vector<PowerTerm> terms;
      if (block.contains("terms")) {
        for (const auto& t : block.at("terms")) {
          check_json_keys(t, {"coefficient", "exponent"}, where + ".terms");
          PowerTerm pt;
          pt.coefficient = t.contains("coefficient") ? jreal(t.at("coefficient"), "coefficient") : 1.0;
          pt.exponent = jget(t, "exponent", where + ".terms");
          terms.push_back(pt);
        }
      } else if (block.contains("p")) {
        double c = block.contains("coefficient") ? jreal(block.at("coefficient"), "coefficient") : 1.0;
        terms.push_back({c, jreal(block.at("p"), "p")});
      } else {
        throw ConfigError("powers nonlinearity needs 'terms' or 'p'");
      }
      auto s = NonlinearitySpec::powers(terms);
      s.label = block.value("label", "powers");
      return s;
    }
    if (kind == "piecewise") {
      check_json_keys(block, {"kind", "positive", "negative", "label"}, where);
      if (!block.contains("positive")) throw ConfigError("piecewise nonlinearity needs 'positive'");
      std::optional<std::vector<PieceDef>> neg;
      if (block.contains("negative")) neg = pieces_from_json(block.at("negative"), where + ".negative");
      auto s = NonlinearitySpec::piecewise(pieces_from_json(block.at("positive"), where + ".positive"), neg);
      s.label = block.value("label", "piecewise");
      return s;
    }
    ExampleParams P;
    P.N = N;
    NonlinearitySpec base;
    bool has_base = false;
    ExampleKind ek = ExampleKind::E1;
    if (kind == "E1" || kind == "E3" || kind == "E4") {
      if (kind == "E1") check_json_keys(block, {"kind", "base", "zeta"}, where);
      if (kind == "E3") check_json_keys(block, {"kind", "base", "a", "b"}, where);
      if (kind == "E4") check_json_keys(block, {"kind", "base", "mu"}, where);
      if (!block.contains("base")) throw ConfigError(kind + " needs a 'base' nonlinearity");
      base = spec_from_json(block.at("base"), N, nullptr);
      has_base = true;
      if (kind == "E1") {
        ek = ExampleKind::E1;
        P.zeta = jget(block, "zeta", where);
      } else if (kind == "E3") {
        ek = ExampleKind::E3;
        P.a = jget(block, "a", where);
        P.b = jget(block, "b", where);
      } else {
        ek = ExampleKind::E4;
        P.mu = jget(block, "mu", where);
      }
    } else if (kind == "E2") {
      check_json_keys(block, {"kind", "M", "p", "levels", "intervals", "a_limit"}, where);
      ek = ExampleKind::E2;
      P.M = jget(block, "M", where);
      P.p = jget(block, "p", where);
      P.a_limit = jget(block, "a_limit", where);
      if (!block.contains("levels") || !block.contains("intervals")) throw ConfigError("E2 needs levels and intervals");
      for (const auto& a : block.at("levels")) P.levels.push_back(jreal(a, "levels"));
      for (const auto& I : block.at("intervals")) {
        if (!I.is_array() || I.size() != 2) throw ConfigError("E2 intervals are [lo, hi] pairs");
        P.intervals.emplace_back(jreal(I[0], "intervals"), jreal(I[1], "intervals"));
      }
    } else {
      throw ConfigError("unknown nonlinearity kind '" + kind + "'");
    }
    auto s = build_example(ek, has_base ? &base : nullptr, P);
    s.label = kind;
    if (params) *params = P;
    return s;
  } catch (const SpecError& e) {
    throw ConfigError(std::string("invalid nonlinearity: ") + e.what());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed nonlinearity block: ") + e.what());
  }
}

RunConfig parse_config_text(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(std::string("YAML parse error: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("config must be a mapping");
  check_keys(root, {"problem", "grid", "nonlinearity", "solver", "sweep", "oracle", "gn", "check", "output"},
             "config");
  RunConfig c;

  auto problem = root["problem"];
  if (!problem) throw ConfigError("missing 'problem' block");
  check_keys(problem, {"N", "rho"}, "problem");
  if (!problem["N"]) throw ConfigError("missing 'N' in problem" + at_mark(problem));
  c.instance.N = scalar<int>(problem["N"], "problem.N");
  if (c.instance.N < 3) throw ConfigError("problem.N must be at least 3" + at_mark(problem["N"]));
  if (problem["rho"]) {
    c.instance.rho = real(problem["rho"], "problem.rho");
    if (!(c.instance.rho > 0.0) || !std::isfinite(c.instance.rho))
      throw ConfigError("problem.rho must be positive" + at_mark(problem["rho"]));
  }

  if (auto g = root["grid"]) {
    check_keys(g, {"R", "n", "auto_scale"}, "grid");
    if (g["R"]) c.instance.grid.R = real(g["R"], "grid.R");
    if (g["n"]) c.instance.grid.n = scalar<int>(g["n"], "grid.n");
    if (g["auto_scale"]) c.instance.grid.auto_scale = scalar<bool>(g["auto_scale"], "grid.auto_scale");
    if (!(c.instance.grid.R > 0.0) || !std::isfinite(c.instance.grid.R)) throw ConfigError("grid.R must be positive");
    if (c.instance.grid.n < 8) throw ConfigError("grid.n must be at least 8");
  }

  auto nl = root["nonlinearity"];
  if (!nl) throw ConfigError("missing 'nonlinearity' block");
  c.nonlinearity = to_json(nl);
  try {
    c.instance.spec = spec_from_json(c.nonlinearity, c.instance.N, &c.example);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(e.what()) + " in block starting" + at_mark(nl));
  }

  if (auto s = root["solver"]) {
    check_keys(s,
               {"max_iters", "step", "backtrack", "tol_grad", "tol_identity", "precondition_shift",
                "shift_follows_lambda", "seed_amplitude_scan", "symmetrize_every", "max_backtracks",
                "dilation_threshold"},
               "solver");
    auto& o = c.solver;
    if (s["max_iters"]) o.max_iters = scalar<int>(s["max_iters"], "solver.max_iters");
    if (s["step"]) o.step = real(s["step"], "solver.step");
    if (s["backtrack"]) o.backtrack = real(s["backtrack"], "solver.backtrack");
    if (s["tol_grad"]) o.tol_grad = real(s["tol_grad"], "solver.tol_grad");
    if (s["tol_identity"]) o.tol_identity = real(s["tol_identity"], "solver.tol_identity");
    if (s["precondition_shift"]) o.precondition_shift = real(s["precondition_shift"], "solver.precondition_shift");
    if (s["shift_follows_lambda"])
      o.shift_follows_lambda = scalar<bool>(s["shift_follows_lambda"], "solver.shift_follows_lambda");
    if (s["seed_amplitude_scan"]) o.seed_amplitude_scan = reals(s["seed_amplitude_scan"], "solver.seed_amplitude_scan");
    if (s["symmetrize_every"]) o.symmetrize_every = scalar<int>(s["symmetrize_every"], "solver.symmetrize_every");
    if (s["max_backtracks"]) o.max_backtracks = scalar<int>(s["max_backtracks"], "solver.max_backtracks");
    if (s["dilation_threshold"]) o.dilation_threshold = real(s["dilation_threshold"], "solver.dilation_threshold");
    if (o.max_iters < 0 || !(o.step > 0.0) || !(o.backtrack > 0.0 && o.backtrack < 1.0) ||
        !(o.precondition_shift > 0.0) || o.seed_amplitude_scan.empty())
      throw ConfigError("solver block out of range" + at_mark(s));
  }

  if (auto s = root["sweep"]) {
    check_keys(s, {"rho_list", "log_range", "parallelism", "warm_start"}, "sweep");
    if (s["rho_list"] && s["log_range"]) throw ConfigError("sweep takes rho_list or log_range, not both" + at_mark(s));
    if (s["rho_list"]) c.rho_list = reals(s["rho_list"], "sweep.rho_list");
    if (auto lr = s["log_range"]) {
      check_keys(lr, {"start", "stop", "count"}, "sweep.log_range");
      double a = real(lr["start"], "log_range.start"), b = real(lr["stop"], "log_range.stop");
      int k = scalar<int>(lr["count"], "log_range.count");
      if (!(a > 0.0 && b > 0.0) || k < 1) throw ConfigError("log_range needs positive ends and count >= 1" + at_mark(lr));
      for (int i = 0; i < k; ++i)
        c.rho_list.push_back(k == 1 ? a : a * std::pow(b / a, static_cast<double>(i) / (k - 1)));
    }
    for (double r : c.rho_list)
      if (!(r > 0.0) || !std::isfinite(r)) throw ConfigError("sweep masses must be positive" + at_mark(s));
    if (s["parallelism"]) c.parallelism = scalar<int>(s["parallelism"], "sweep.parallelism");
    if (s["warm_start"]) c.warm_start = scalar<bool>(s["warm_start"], "sweep.warm_start");
    if (c.parallelism < 1) throw ConfigError("sweep.parallelism must be at least 1");
  }

  if (auto o = root["oracle"]) {
    check_keys(o, {"lambda"}, "oracle");
    if (o["lambda"]) c.oracle_lambda = real(o["lambda"], "oracle.lambda");
    if (!(c.oracle_lambda > 0.0)) throw ConfigError("oracle.lambda must be positive");
  }

  if (auto g = root["gn"]) {
    check_keys(g, {"p"}, "gn");
    if (g["p"]) c.gn_p = reals(g["p"], "gn.p");
  }

  if (auto s = root["check"]) {
    check_keys(s, {"s_min", "s_max", "per_decade", "preceq_depth", "force_scan"}, "check");
    if (s["s_min"]) c.scan.s_min = real(s["s_min"], "check.s_min");
    if (s["s_max"]) c.scan.s_max = real(s["s_max"], "check.s_max");
    if (s["per_decade"]) c.scan.per_decade = scalar<int>(s["per_decade"], "check.per_decade");
    if (s["preceq_depth"]) c.scan.preceq_depth = scalar<int>(s["preceq_depth"], "check.preceq_depth");
    if (s["force_scan"]) c.scan.force_scan = scalar<bool>(s["force_scan"], "check.force_scan");
  }

  if (auto o = root["output"]) {
    check_keys(o, {"format", "path", "emit_profile", "profile_format", "profile_path"}, "output");
    auto& out = c.output;
    if (o["format"]) out.format = scalar<std::string>(o["format"], "output.format");
    if (o["path"]) out.path = scalar<std::string>(o["path"], "output.path");
    if (o["emit_profile"]) out.emit_profile = scalar<bool>(o["emit_profile"], "output.emit_profile");
    if (o["profile_format"]) out.profile_format = scalar<std::string>(o["profile_format"], "output.profile_format");
    if (o["profile_path"]) out.profile_path = scalar<std::string>(o["profile_path"], "output.profile_path");
    if (out.format != "json" && out.format != "csv") throw ConfigError("output.format must be json or csv" + at_mark(o));
    if (out.profile_format != "binary" && out.profile_format != "text")
      throw ConfigError("output.profile_format must be binary or text" + at_mark(o));
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace nls
