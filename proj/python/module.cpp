#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <string>
#include <vector>

#include "nls_norm/cli.hpp"
#include "nls_norm/config.hpp"
#include "nls_norm/report.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

nls::Instance instance(const std::string& block, int N, double rho, double R, int n, bool auto_scale) {
  nls::Instance in;
  in.N = N;
  in.rho = rho;
  in.spec = nls::spec_from_json(json::parse(block), N);
  in.grid.R = R;
  in.grid.n = n;
  in.grid.auto_scale = auto_scale;
  return in;
}

std::string check(const std::string& block, int N, double rho) {
  auto spec = nls::spec_from_json(json::parse(block), N);
  return nls::to_json(nls::assess(spec, N, rho)).dump();
}

std::string solve(const std::string& block, int N, double rho, double R, int n, bool auto_scale, int max_iters) {
  auto in = instance(block, N, rho, R, n, auto_scale);
  nls::SolverOptions opt;
  opt.max_iters = max_iters;
  nls::GroundState st;
  {
    py::gil_scoped_release release;
    st = nls::solve(in, opt);
  }
  auto j = nls::ground_state_json(st, nls::verify(st, in.spec), in, nls::spec_digest(json::parse(block)));
  j["r"] = st.u.grid->r;
  j["u"] = st.u.u;
  return j.dump();
}

std::string sweep(const std::string& block, int N, std::vector<double> rhos, double R, int n, bool auto_scale,
                  bool warm_start, int parallelism) {
  auto in = instance(block, N, rhos.empty() ? 1.0 : rhos.front(), R, n, auto_scale);
  nls::SweepOptions so;
  so.warm_start = warm_start;
  so.parallelism = parallelism;
  std::vector<nls::EnergyMapPoint> pts;
  {
    py::gil_scoped_release release;
    pts = nls::sweep(in, rhos, so);
  }
  json arr = json::array();
  for (const auto& p : pts) arr.push_back(nls::to_json(p));
  return json{{"points", arr}, {"monotone", nls::to_string(nls::check_monotone(pts))}}.dump();
}

std::string shoot(const std::string& block, int N, double lam, double R, int n) {
  auto spec = nls::spec_from_json(json::parse(block), N);
  auto s = nls::shoot(spec, lam, nls::make_grid(N, R, n));
  return nls::shooting_json(s, spec, true).dump();
}

py::tuple run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "nls-norm");
  std::vector<const char*> argv;
  for (auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = nls::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "normalized ground states on R^N";
  py::register_exception<nls::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<nls::SolveError>(m, "SolveError", PyExc_RuntimeError);

  m.def("check", &check, py::arg("spec"), py::arg("N"), py::arg("rho"));
  m.def("solve", &solve, py::arg("spec"), py::arg("N"), py::arg("rho"), py::arg("R") = 30.0, py::arg("n") = 4000,
        py::arg("auto_scale") = false, py::arg("max_iters") = 5000);
  m.def("sweep", &sweep, py::arg("spec"), py::arg("N"), py::arg("rhos"), py::arg("R") = 30.0, py::arg("n") = 4000,
        py::arg("auto_scale") = true, py::arg("warm_start") = true, py::arg("parallelism") = 1);
  m.def("shoot", &shoot, py::arg("spec"), py::arg("N"), py::arg("lam") = 1.0, py::arg("R") = 30.0,
        py::arg("n") = 4000);
  m.def("gn_constant", [](int N, double p, double R, int n) { return nls::GnCache::global().get(N, p, R, n).C; },
        py::arg("N"), py::arg("p"), py::arg("R") = 30.0, py::arg("n") = 4000);
  m.def("run_cli", &run_cli, py::arg("args"));
  m.attr("lower_critical") = py::cpp_function([](int N) { return nls::lower_critical(N); });
}
