#include "nls_norm/energymap.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <thread>

#include "nls_norm/oracle.hpp"

namespace nls {

namespace {

EnergyMapPoint run_point(const Instance& tmpl, double rho, const SolverOptions& opt, const RadialField* warm,
                         RadialField* out) {
  Instance inst = tmpl;
  inst.rho = rho;
  EnergyMapPoint p;
  p.rho = rho;
  p.c = p.lambda = p.grad_norm = std::numeric_limits<double>::quiet_NaN();
  try {
    GroundState st = solve(inst, opt, nullptr, warm);
    p.c = st.energy;
    p.lambda = st.lambda;
    p.converged = st.converged;
    p.grad_norm = st.grad_norm;
    p.status = st.status;
    p.iterations = st.iterations;
    if (out) *out = std::move(st.u);
  } catch (const SolveError& e) {
    p.status = to_string(e.kind);
  } catch (const std::exception& e) {
    p.status = std::string("error: ") + e.what();
  }
  return p;
}

std::vector<const EnergyMapPoint*> converged_sorted(const std::vector<EnergyMapPoint>& points) {
  std::vector<const EnergyMapPoint*> v;
  for (const auto& p : points)
    if (p.converged) v.push_back(&p);
  std::sort(v.begin(), v.end(), [](auto* a, auto* b) { return a->rho < b->rho; });
  return v;
}

}  // namespace

std::vector<EnergyMapPoint> sweep(const Instance& tmpl, std::vector<double> rho_list, const SweepOptions& opt) {
  std::sort(rho_list.begin(), rho_list.end());
  std::vector<EnergyMapPoint> out(rho_list.size());
  if (opt.warm_start) {
    RadialField prev;
    bool have = false;
    for (std::size_t i = 0; i < rho_list.size(); ++i) {
      RadialField next;
      out[i] = run_point(tmpl, rho_list[i], opt.solver, have ? &prev : nullptr, &next);
      if (out[i].converged) {
        prev = std::move(next);
        have = true;
      }
    }
    return out;
  }
  int threads = std::max(1, std::min<int>(opt.parallelism, static_cast<int>(rho_list.size())));
  // the GN constant is shared; compute it once before fanning out
  if (threads > 1) GnCache::global().get(tmpl.N, lower_critical(tmpl.N));
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < rho_list.size(); i = next++)
      out[i] = run_point(tmpl, rho_list[i], opt.solver, nullptr, nullptr);
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

std::string to_string(Monotone m) {
  switch (m) {
    case Monotone::strict:
      return "strict";
    case Monotone::violated:
      return "violated";
    case Monotone::inconclusive:
      return "inconclusive";
  }
  return "?";
}

Monotone check_monotone(const std::vector<EnergyMapPoint>& points, double rel_tol) {
  auto v = converged_sorted(points);
  if (v.size() < 2) return Monotone::inconclusive;
  bool all_strict = true;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    double c0 = v[i]->c, c1 = v[i + 1]->c, tol = rel_tol * std::abs(c0);
    if (c1 > c0 + tol) return Monotone::violated;
    if (!(c1 < c0 - tol)) all_strict = false;
  }
  return all_strict ? Monotone::strict : Monotone::inconclusive;
}

std::string to_string(AsymptoticVerdict v) {
  switch (v) {
    case AsymptoticVerdict::divergence_consistent:
      return "divergence-consistent";
    case AsymptoticVerdict::decay_consistent:
      return "decay-consistent";
    case AsymptoticVerdict::inconsistent:
      return "inconsistent";
  }
  return "?";
}

AsymptoticFit asymptotics(const std::vector<EnergyMapPoint>& points, AsymptoticMode mode) {
  std::vector<const EnergyMapPoint*> v;
  for (auto* p : converged_sorted(points))
    if (p->c > 0.0) v.push_back(p);
  if (v.size() < 4) throw InsufficientSpan("need at least 4 converged points with positive energy");
  double lo = v.front()->rho, hi = v.back()->rho;
  if (std::log10(hi / lo) < 2.0 - 1e-12) throw InsufficientSpan("points span less than two decades of rho");

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto* p : v) {
    double x = std::log(p->rho), y = std::log(p->c);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  double n = static_cast<double>(v.size());
  AsymptoticFit fit;
  fit.used = static_cast<int>(v.size());
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / n;

  if (mode == AsymptoticMode::rho_to_zero) {
    double observed = v.front()->c / v.back()->c;
    double fitted = std::pow(lo / hi, fit.slope);
    if (fit.slope < 0.0 && std::abs(observed / fitted - 1.0) <= 0.2)
      fit.verdict = AsymptoticVerdict::divergence_consistent;
  } else {
    bool decreasing = true;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) decreasing = decreasing && v[i + 1]->c < v[i]->c;
    if (fit.slope < 0.0 && decreasing) fit.verdict = AsymptoticVerdict::decay_consistent;
  }
  return fit;
}

void write_csv(std::ostream& os, const std::vector<EnergyMapPoint>& points) {
  os << "rho,c,lambda,converged,grad_norm\n";
  char buf[160];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%s,%.17g\n", p.rho, p.c, p.lambda,
                  p.converged ? "true" : "false", p.grad_norm);
    os << buf;
  }
}

}  // namespace nls
