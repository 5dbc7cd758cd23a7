#include "nls_norm/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace nls {

namespace {

bool close_exp(double a, double b) { return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(b)); }

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

// Leading power law c*t^q of G on one side, near 0 (first piece) or at infinity (last piece).
struct Lead {
  double q = 0.0;
  double c = 0.0;
  bool zero = true;
};

Lead lead_of(std::vector<std::pair<double, double>> terms, bool lowest) {
  std::sort(terms.begin(), terms.end());
  std::vector<std::pair<double, double>> merged;
  for (auto& [q, c] : terms) {
    if (!merged.empty() && close_exp(merged.back().first, q))
      merged.back().second += c;
    else
      merged.push_back({q, c});
  }
  Lead out;
  auto consider = [&](const std::pair<double, double>& t) {
    double scale = 0.0;
    for (auto& [q, c] : terms) scale = std::max(scale, std::abs(c));
    if (std::abs(t.second) <= 1e-14 * scale) return false;
    out = {t.first, t.second, false};
    return true;
  };
  if (lowest) {
    for (auto& t : merged)
      if (consider(t)) break;
  } else {
    for (auto it = merged.rbegin(); it != merged.rend(); ++it)
      if (consider(*it)) break;
  }
  return out;
}

Lead lead_at_zero(const NonlinearitySpec::Piece& p) {
  std::vector<std::pair<double, double>> terms;
  for (const auto& m : p.dg)
    if (m.coef != 0.0) terms.push_back({m.power + 2.0, m.coef / ((m.power + 1.0) * (m.power + 2.0))});
  return lead_of(terms, true);
}

Lead lead_at_infinity(const NonlinearitySpec::Piece& p) {
  std::vector<std::pair<double, double>> terms;
  double lin = p.g_lo;
  double cst = p.G_lo - p.g_lo * p.lo;
  for (std::size_t k = 0; k < p.dg.size(); ++k) {
    const auto& m = p.dg[k];
    double e1 = m.power + 1.0, e2 = m.power + 2.0;
    terms.push_back({e2, m.coef / (e1 * e2)});
    lin -= m.coef * p.lo_e1[k] / e1;
    cst += m.coef * (-p.lo_e2[k] / (e1 * e2) + p.lo_e1[k] * p.lo / e1);
  }
  terms.push_back({1.0, lin});
  terms.push_back({0.0, cst});
  return lead_of(terms, false);
}

// Log-spaced magnitudes on [lo, hi] plus points straddling knots.
std::vector<double> scan_points(const NonlinearitySpec& spec, const ScanOptions& opt) {
  std::vector<double> t;
  double d0 = std::log10(opt.s_min), d1 = std::log10(opt.s_max);
  int count = std::max(2, static_cast<int>(std::ceil((d1 - d0) * opt.per_decade)) + 1);
  t.reserve(count + 8);
  for (int i = 0; i < count; ++i) t.push_back(std::pow(10.0, d0 + (d1 - d0) * i / (count - 1)));
  for (double k : spec.knots()) {
    if (k <= 0.0) continue;
    t.push_back(k * (1.0 - 1e-9));
    t.push_back(k);
    t.push_back(k * (1.0 + 1e-9));
  }
  std::sort(t.begin(), t.end());
  return t;
}

using PairFn = std::function<std::pair<double, double>(double)>;

PairFn pair_fn(const NonlinearitySpec& spec, PreceqPair pair, int N) {
  double ls = lower_critical(N), us = upper_critical(N);
  switch (pair) {
    case PreceqPair::four_over_N_G_vs_H:
      return [&spec, N](double s) {
        auto v = spec.eval_all(s);
        return std::pair{4.0 / N * v.G, v.H};
      };
    case PreceqPair::H_vs_crit_G:
      return [&spec, us](double s) {
        auto v = spec.eval_all(s);
        return std::pair{v.H, (us - 2.0) * v.G};
      };
    case PreceqPair::crit_H_vs_hs:
      break;
  }
  return [&spec, ls](double s) {
    auto v = spec.eval_all(s);
    return std::pair{ls * v.H, v.h * s};
  };
}

bool violates(double f1, double f2, double tol) {
  return f1 > f2 + tol * (std::abs(f1) + std::abs(f2)) + 1e-300;
}

// first violating s, if any
std::optional<double> find_violation(const NonlinearitySpec& spec, const PairFn& f,
                                     const ScanOptions& opt) {
  for (double t : scan_points(spec, opt)) {
    for (double s : {t, -t}) {
      auto [f1, f2] = f(s);
      if (violates(f1, f2, 1e-12)) return s;
    }
  }
  return std::nullopt;
}

bool strict_in_shells(const PairFn& f, int depth) {
  for (int k = 1; k <= depth; ++k) {
    double lo = std::ldexp(1.0, -k - 1);
    bool found = false;
    for (int i = 0; i < 16 && !found; ++i) {
      double t = lo * std::pow(2.0, (i + 0.5) / 16.0);
      for (double s : {t, -t}) {
        auto [f1, f2] = f(s);
        if (f1 < f2 - 1e-14 * std::abs(f2)) {
          found = true;
          break;
        }
      }
    }
    if (!found) return false;
  }
  return true;
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::undetermined: break;
  }
  return "undetermined";
}

std::string to_string(Branch b) {
  switch (b) {
    case Branch::theorem_a: return "theorem-a";
    case Branch::theorem_b: return "theorem-b";
    case Branch::main_only: return "main-only";
    case Branch::inadmissible: break;
  }
  return "inadmissible";
}

std::string to_string(Relation r) {
  switch (r) {
    case Relation::strict: return "strict";
    case Relation::weak_only: return "weak-only";
    case Relation::violated: break;
  }
  return "violated";
}

// ---------------------------------------------------------------- spec

std::vector<NonlinearitySpec::Piece> NonlinearitySpec::build_side(std::vector<PieceDef> defs) {
  if (defs.empty()) throw SpecError("nonlinearity needs at least one piece");
  std::sort(defs.begin(), defs.end(), [](auto& a, auto& b) { return a.lo < b.lo; });
  if (defs.front().lo != 0.0) throw SpecError("first piece must start at 0");
  if (!std::isinf(defs.back().hi)) throw SpecError("last piece must extend to infinity");
  std::vector<Piece> out;
  double g_lo = 0.0, G_lo = 0.0;
  for (std::size_t i = 0; i < defs.size(); ++i) {
    auto& d = defs[i];
    if (!(d.hi > d.lo)) throw SpecError("empty piece [" + fmt(d.lo) + ", " + fmt(d.hi) + ")");
    if (i + 1 < defs.size() && defs[i + 1].lo != d.hi)
      throw SpecError("pieces must be contiguous at " + fmt(d.hi));
    Piece p{d.lo, d.hi, d.dg, g_lo, G_lo, {}, {}};
    for (const auto& m : p.dg) {
      if (!std::isfinite(m.coef) || !std::isfinite(m.power))
        throw SpecError("non-finite monomial");
      if (m.power <= -1.0) throw SpecError("monomial power must exceed -1");
      p.lo_e1.push_back(p.lo > 0.0 ? std::pow(p.lo, m.power + 1.0) : 0.0);
      p.lo_e2.push_back(p.lo > 0.0 ? std::pow(p.lo, m.power + 2.0) : 0.0);
    }
    if (!std::isinf(p.hi)) {
      Values v = side_values({p}, p.hi);
      g_lo = v.g;
      G_lo = v.G;
    }
    out.push_back(std::move(p));
  }
  return out;
}

NonlinearitySpec::Values NonlinearitySpec::side_values(const std::vector<Piece>& side, double t) {
  if (t == 0.0) return {0.0, 0.0, 0.0, 0.0};
  auto it = std::upper_bound(side.begin(), side.end(), t,
                             [](double x, const Piece& p) { return x < p.lo; });
  const Piece& p = *(it - 1);
  double g = p.g_lo, G = p.G_lo + p.g_lo * (t - p.lo), dg = 0.0;
  for (std::size_t k = 0; k < p.dg.size(); ++k) {
    const auto& m = p.dg[k];
    double e1 = m.power + 1.0, e2 = m.power + 2.0;
    double te = std::pow(t, m.power);
    double te1 = te * t, te2 = te1 * t;
    dg += m.coef * te;
    g += m.coef * (te1 - p.lo_e1[k]) / e1;
    G += m.coef * ((te2 - p.lo_e2[k]) / (e1 * e2) - p.lo_e1[k] * (t - p.lo) / e1);
  }
  return {g, G, g * t - 2.0 * G, dg * t - g};
}

double NonlinearitySpec::side_dg(const std::vector<Piece>& side, double t) {
  auto it = std::upper_bound(side.begin(), side.end(), t,
                             [](double x, const Piece& p) { return x < p.lo; });
  const Piece& p = *(it - 1);
  double dg = 0.0;
  for (const auto& m : p.dg) dg += m.coef * std::pow(t, m.power);
  return dg;
}

NonlinearitySpec NonlinearitySpec::powers(std::vector<PowerTerm> terms) {
  if (terms.empty()) throw SpecError("power sum needs at least one term");
  PieceDef d{0.0, kInf, {}};
  for (const auto& t : terms) {
    if (!std::isfinite(t.coefficient)) throw SpecError("coefficient must be finite");
    if (!(t.exponent > 2.0) || !std::isfinite(t.exponent))
      throw SpecError("power exponent must exceed 2, got " + fmt(t.exponent));
    d.dg.push_back({t.coefficient * (t.exponent - 1.0), t.exponent - 2.0});
  }
  NonlinearitySpec s;
  s.pos_ = build_side({d});
  s.odd_ = true;
  s.terms_ = std::move(terms);
  s.label = "powers";
  return s;
}

NonlinearitySpec NonlinearitySpec::piecewise(std::vector<PieceDef> positive,
                                             std::optional<std::vector<PieceDef>> negative) {
  NonlinearitySpec s;
  s.pos_ = build_side(std::move(positive));
  if (negative) {
    s.neg_ = build_side(std::move(*negative));
    s.odd_ = false;
  }
  s.label = "piecewise";
  return s;
}

const std::vector<PowerTerm>& NonlinearitySpec::terms() const {
  if (!terms_) throw SpecError("spec is not a power sum");
  return *terms_;
}

NonlinearitySpec::Values NonlinearitySpec::eval_all(double s) const {
  double t = std::abs(s);
  if (terms_) {
    Values v{0, 0, 0, 0};
    if (t == 0.0) return v;
    for (const auto& term : *terms_) {
      double p = term.exponent, c = term.coefficient;
      double tp = c * std::pow(t, p - 2.0);
      v.g += tp * t;
      v.G += tp * t * t / p;
      v.H += tp * t * t * (p - 2.0) / p;
      v.h += tp * t * (p - 2.0);
    }
    if (s < 0) {
      v.g = -v.g;
      v.h = -v.h;
    }
    return v;
  }
  if (s >= 0.0) return side_values(pos_, t);
  Values v = side_values(odd_ ? pos_ : neg_, t);
  return {-v.g, v.G, v.H, -v.h};
}

double NonlinearitySpec::eval(Quantity which, double s) const {
  Values v = eval_all(s);
  switch (which) {
    case Quantity::g: return v.g;
    case Quantity::G: return v.G;
    case Quantity::H: return v.H;
    case Quantity::h: break;
  }
  return v.h;
}

double NonlinearitySpec::dg(double s) const {
  double t = std::abs(s);
  if (terms_) {
    double d = 0.0;
    for (const auto& term : *terms_)
      d += term.coefficient * (term.exponent - 1.0) * std::pow(t, term.exponent - 2.0);
    return d;
  }
  return side_dg(s >= 0.0 || odd_ ? pos_ : neg_, t);
}

std::vector<PieceDef> NonlinearitySpec::positive_defs() const {
  std::vector<PieceDef> out;
  for (const auto& p : pos_) out.push_back({p.lo, p.hi, p.dg});
  return out;
}

std::vector<PieceDef> NonlinearitySpec::negative_defs() const {
  std::vector<PieceDef> out;
  for (const auto& p : negative()) out.push_back({p.lo, p.hi, p.dg});
  return out;
}

std::vector<double> NonlinearitySpec::knots() const {
  std::vector<double> k;
  for (const auto& p : pos_)
    if (p.lo > 0) k.push_back(p.lo);
  if (!odd_)
    for (const auto& p : neg_)
      if (p.lo > 0) k.push_back(p.lo);
  std::sort(k.begin(), k.end());
  k.erase(std::unique(k.begin(), k.end()), k.end());
  return k;
}

// ---------------------------------------------------------------- assumptions

EtaEstimate estimate_eta(const NonlinearitySpec& spec, int N) {
  EtaEstimate e;
  double ls = lower_critical(N);
  double limit = -kInf;
  bool diverges = false;
  for (const auto* side : {&spec.positive(), &spec.negative()}) {
    Lead L = lead_at_zero(side->front());
    double v;
    if (L.zero || L.q > ls + 1e-12)
      v = 0.0;
    else if (close_exp(L.q, ls))
      v = L.c;
    else
      v = L.c > 0 ? kInf : -kInf;
    if (v == kInf) diverges = true;
    limit = std::max(limit, v);
  }
  e.exact = true;
  e.diverges = diverges;
  e.value = diverges ? kInf : limit;
  for (int k = 20; k <= 60; ++k) {
    double lo = std::ldexp(1.0, -k - 1), sup = -kInf;
    for (int i = 0; i <= 16; ++i) {
      double t = lo * std::pow(2.0, i / 16.0);
      for (double s : {t, -t}) sup = std::max(sup, spec.G(s) / std::pow(t, ls));
    }
    e.shell_sup.push_back(sup);
  }
  double first = e.shell_sup[e.shell_sup.size() - 11], last = e.shell_sup.back();
  double scale = std::max({std::abs(first), std::abs(last), 1e-300});
  if (last > first + 1e-9 * scale)
    e.trend = "increasing";
  else if (last < first - 1e-9 * scale)
    e.trend = "decreasing";
  else
    e.trend = "flat";
  return e;
}

double rho_threshold(double eta, int N, double C_gn) {
  if (!(eta > 0.0)) return kInf;
  if (std::isinf(eta)) return 0.0;
  return std::pow(upper_critical(N) * eta * std::pow(C_gn, lower_critical(N)), -N / 2.0);
}

Relation preceq(const NonlinearitySpec& spec, PreceqPair pair, int N, int depth,
                const ScanOptions& opt) {
  auto f = pair_fn(spec, pair, N);
  if (find_violation(spec, f, opt)) return Relation::violated;
  ScanOptions deep = opt;
  deep.s_min = std::min(opt.s_min, std::ldexp(1.0, -depth - 1));
  if (find_violation(spec, f, deep)) return Relation::violated;
  return strict_in_shells(f, depth) ? Relation::strict : Relation::weak_only;
}

bool AssumptionReport::passes(const std::string& key) const {
  auto it = verdicts.find(key);
  return it != verdicts.end() && it->second.verdict == Verdict::pass;
}

namespace {

AssumptionCheck verdict_of(bool ok, std::string detail, std::optional<double> witness = {}) {
  return {ok ? Verdict::pass : Verdict::fail, std::move(detail), witness};
}

void closed_form_checks(const NonlinearitySpec& spec, int N, AssumptionReport& r) {
  double ls = lower_critical(N), us = upper_critical(N);
  double pmin = kInf, pmax = -kInf;
  bool above = false;
  for (const auto& t : spec.terms()) {
    pmin = std::min(pmin, t.exponent);
    pmax = std::max(pmax, t.exponent);
    if (t.exponent > ls + 1e-12) above = true;
  }
  auto le = [](double a, double b) { return a <= b + 1e-12; };
  std::string range = "p in [" + fmt(pmin) + ", " + fmt(pmax) + "]";
  r.verdicts["A0"] = verdict_of(le(pmax, us), range + " vs 2^* = " + fmt(us));
  r.verdicts["A1"] = verdict_of(le(ls, pmin), range + " vs 2_* = " + fmt(ls));
  r.verdicts["A2"] = verdict_of(pmax > ls + 1e-12, "max p = " + fmt(pmax) + " vs 2_*");
  r.verdicts["A3"] = verdict_of(pmax < us - 1e-12, "max p = " + fmt(pmax) + " vs 2^*");
  bool a4 = le(ls, pmin);
  r.verdicts["A4"] = verdict_of(a4, "termwise (p - 2_*) >= 0");
  r.verdicts["A5"] = verdict_of(a4 && le(pmax, us), "termwise 2_* <= p <= 2^*");
  r.verdicts["A6"] = verdict_of(true, "positive coefficients", 1.0);
  r.zeta0 = 1.0;
  r.verdicts["A4_preceq"] = verdict_of(a4 && above, "strict iff some p > 2_*");
  bool first = a4 && above;
  bool second = le(pmax, us) && pmin < us - 1e-12;
  r.verdicts["A5_preceq"] = verdict_of(first && second, "both inequalities strict near 0");
  r.verdicts["A5_first_preceq"] = verdict_of(first, "4/N G strictly below H near 0");
  double c = 0.0;
  for (const auto& t : spec.terms()) c += std::abs(t.coefficient) * std::abs(t.exponent - 2.0);
  r.growth_c = c;
}

void scan_checks(const NonlinearitySpec& spec, int N, const ScanOptions& opt,
                 AssumptionReport& r) {
  double ls = lower_critical(N), us = upper_critical(N);
  auto pts = scan_points(spec, opt);

  // A0: h continuity at knots and the growth bound
  bool cont = true;
  double bad_knot = 0.0;
  for (double k : spec.knots()) {
    for (double sg : {1.0, -1.0}) {
      double hl = spec.h(sg * k * (1 - 1e-13)), hr = spec.h(sg * k);
      if (std::abs(hl - hr) > 1e-9 * (1.0 + std::abs(hr))) {
        cont = false;
        bad_knot = sg * k;
      }
    }
  }
  bool zero_ok = true, inf_ok = true;
  for (const auto* side : {&spec.positive(), &spec.negative()}) {
    for (const auto& m : side->front().dg)
      if (m.coef != 0.0 && m.power < -1e-14) zero_ok = false;
    double top = -kInf;
    for (const auto& m : side->back().dg)
      if (m.coef != 0.0 && std::abs(m.power) > 1e-14) top = std::max(top, m.power);
    if (top > us - 2.0 + 1e-12) inf_ok = false;
  }
  double c = 0.0;
  for (double t : pts)
    for (double s : {t, -t}) c = std::max(c, std::abs(spec.h(s)) / (t + std::pow(t, us - 1.0)));
  r.growth_c = c;
  if (!cont)
    r.verdicts["A0"] = verdict_of(false, "h jumps at knot", bad_knot);
  else
    r.verdicts["A0"] = verdict_of(zero_ok && inf_ok, "growth constant c = " + fmt(c) +
                                                         (zero_ok ? "" : "; h/s unbounded at 0") +
                                                         (inf_ok ? "" : "; h beyond 2^*-1"));

  // A1
  if (r.eta.diverges)
    r.verdicts["A1"] = verdict_of(false, "G/|s|^{2_*} unbounded near 0");
  else
    r.verdicts["A1"] = verdict_of(true, "eta = " + fmt(r.eta.value) + " (shell trend " +
                                            r.eta.trend + ")");

  // A2, A3 from the outermost pieces
  bool a2 = true, a3 = true;
  std::string d2, d3;
  for (const auto* side : {&spec.positive(), &spec.negative()}) {
    Lead L = lead_at_infinity(side->back());
    if (L.zero || !(L.q > ls + 1e-12 && L.c > 0)) a2 = false;
    if (!L.zero && L.q >= us - 1e-12) a3 = false;
    d2 = d3 = "leading growth |s|^" + fmt(L.q);
  }
  r.verdicts["A2"] = verdict_of(a2, d2 + " vs 2_*");
  r.verdicts["A3"] = verdict_of(a3, d3 + " vs 2^*");

  auto rel = [&](PreceqPair p) { return preceq(spec, p, N, opt.preceq_depth, opt); };
  Relation r4 = rel(PreceqPair::crit_H_vs_hs);
  Relation r5a = rel(PreceqPair::four_over_N_G_vs_H);
  Relation r5b = rel(PreceqPair::H_vs_crit_G);
  auto witness = [&](PreceqPair p) { return find_violation(spec, pair_fn(spec, p, N), opt); };
  r.verdicts["A4"] = verdict_of(r4 != Relation::violated, "scan " + to_string(r4),
                                r4 == Relation::violated ? witness(PreceqPair::crit_H_vs_hs)
                                                         : std::nullopt);
  bool a5 = r5a != Relation::violated && r5b != Relation::violated;
  std::optional<double> w5;
  if (!a5) {
    w5 = witness(PreceqPair::four_over_N_G_vs_H);
    if (!w5) w5 = witness(PreceqPair::H_vs_crit_G);
  }
  r.verdicts["A5"] = verdict_of(a5, "scan " + to_string(r5a) + " / " + to_string(r5b), w5);
  r.verdicts["A4_preceq"] = verdict_of(r4 == Relation::strict, to_string(r4));
  r.verdicts["A5_preceq"] = verdict_of(r5a == Relation::strict && r5b == Relation::strict,
                                       to_string(r5a) + " / " + to_string(r5b));
  r.verdicts["A5_first_preceq"] = verdict_of(r5a == Relation::strict, to_string(r5a));

  // A6: smallest |s| with H > 0
  for (double t : pts) {
    for (double s : {t, -t}) {
      if (spec.H(s) > 0.0) {
        r.zeta0 = s;
        break;
      }
    }
    if (r.zeta0) break;
  }
  r.verdicts["A6"] = verdict_of(r.zeta0.has_value(), r.zeta0 ? "H(zeta0) > 0" : "H <= 0 on scan",
                                r.zeta0);
}

}  // namespace

AssumptionReport check_assumptions(const NonlinearitySpec& spec, int N, double rho,
                                   double gn_critical, const ScanOptions& opt) {
  if (N < 3) throw SpecError("dimension must be at least 3");
  if (!(rho > 0.0)) throw SpecError("mass must be positive");
  AssumptionReport r;
  r.N = N;
  r.rho = rho;
  r.gn_critical = gn_critical;
  r.eta = estimate_eta(spec, N);

  bool closed = spec.is_powers() && !opt.force_scan;
  if (closed)
    for (const auto& t : spec.terms())
      if (!(t.coefficient > 0.0)) closed = false;
  if (closed) {
    closed_form_checks(spec, N, r);
    r.verdicts["A1"].detail += "; eta = " + fmt(r.eta.value);
  } else {
    scan_checks(spec, N, opt, r);
  }

  r.rho_star = r.eta.diverges ? 0.0 : rho_threshold(r.eta.value, N, gn_critical);
  r.rho_admissible = rho < r.rho_star;

  bool all_pass = true, any_fail = false;
  for (const char* k : {"A0", "A1", "A2", "A3", "A4", "A5"}) {
    Verdict v = r.verdicts[k].verdict;
    all_pass = all_pass && v == Verdict::pass;
    any_fail = any_fail || v == Verdict::fail;
  }
  bool small_dg = true;
  for (const auto* side : {&spec.positive(), &spec.negative()})
    for (const auto& m : side->front().dg)
      if (m.coef != 0.0 && m.power <= 1e-14) small_dg = false;

  if (any_fail || !r.rho_admissible) {
    r.branch = Branch::inadmissible;
    r.branch_note = any_fail ? "an assumption in A0-A5 fails" : "mass at or above the threshold";
  } else if (!all_pass) {
    r.branch = Branch::main_only;
    r.branch_note = "some verdict undetermined";
  } else if (spec.odd() && (r.passes("A5_preceq") ||
                            ((N == 3 || N == 4) && r.passes("A5_first_preceq")))) {
    r.branch = Branch::theorem_b;
    r.branch_note = "odd nonlinearity, minimizer on the sphere is a ground state";
  } else if (!spec.odd() && small_dg && r.passes("A5_preceq")) {
    r.branch = Branch::theorem_a;
    r.branch_note = "g' = o(1) at 0, minimizer on the sphere is a ground state";
  } else {
    r.branch = Branch::main_only;
    r.branch_note = "minimizer over the ball only";
  }
  return r;
}

// ---------------------------------------------------------------- builders

namespace {

std::vector<PieceDef> clip(const std::vector<PieceDef>& defs, double lo, double hi, double scale) {
  std::vector<PieceDef> out;
  for (const auto& d : defs) {
    double a = std::max(lo, d.lo), b = std::min(hi, d.hi);
    if (b <= a) continue;
    PieceDef c{a, b, d.dg};
    for (auto& m : c.dg) m.coef *= scale;
    out.push_back(c);
  }
  return out;
}

NonlinearitySpec with_label(NonlinearitySpec s, const char* label) {
  s.label = label;
  return s;
}

void require_odd_base(const NonlinearitySpec* base, const char* kind) {
  if (!base) throw SpecError(std::string(kind) + " needs a base nonlinearity");
  if (!base->odd()) throw SpecError(std::string(kind) + " needs an odd base nonlinearity");
}

}  // namespace

double e2_outer_constant(const ExampleParams& P) {
  double e = lower_critical(P.N) - 2.0;
  return P.levels.front() * std::pow(P.M, e - (P.p - 2.0));
}

NonlinearitySpec build_example(ExampleKind kind, const NonlinearitySpec* base,
                               const ExampleParams& P) {
  double ls = lower_critical(P.N), us = upper_critical(P.N);
  switch (kind) {
    case ExampleKind::E1: {
      require_odd_base(base, "E1");
      double z = P.zeta;
      if (!(z > 0.0)) throw SpecError("E1 knot must be positive");
      double d = base->dg(z);
      if (!(d > 0.0)) throw SpecError("E1 needs g'(zeta) > 0");
      std::vector<PieceDef> pos{{0.0, z, {{d * std::pow(z, -(us - 2.0)), us - 2.0}}}};
      auto rest = clip(base->positive_defs(), z, kInf, 1.0);
      pos.insert(pos.end(), rest.begin(), rest.end());
      return with_label(NonlinearitySpec::piecewise(pos), "E1");
    }
    case ExampleKind::E3: {
      require_odd_base(base, "E3");
      double a = P.a, b = P.b;
      if (!(a > 0.0 && b > a)) throw SpecError("E3 needs 0 < a < b");
      double da = base->dg(a), db = base->dg(b);
      if (!(da > 0.0 && db > 0.0)) throw SpecError("E3 needs g' > 0 on [a, b]");
      auto pos = clip(base->positive_defs(), 0.0, a, 1.0);
      pos.push_back({a, b, {{da * std::pow(a, -(ls - 2.0)), ls - 2.0}}});
      double scale = da * std::pow(b / a, ls - 2.0) / db;
      auto rest = clip(base->positive_defs(), b, kInf, scale);
      pos.insert(pos.end(), rest.begin(), rest.end());
      return with_label(NonlinearitySpec::piecewise(pos), "E3");
    }
    case ExampleKind::E4: {
      if (!base) throw SpecError("E4 needs a base nonlinearity");
      if (!(P.mu >= 0.0)) throw SpecError("E4 needs mu >= 0");
      if (P.mu == 0.0) return *base;
      if (base->is_powers()) {
        auto terms = base->terms();
        terms.push_back({P.mu * ls, ls});
        return with_label(NonlinearitySpec::powers(terms), "E4");
      }
      Monomial extra{P.mu * ls * (ls - 1.0), ls - 2.0};
      auto add = [&](std::vector<PieceDef> defs) {
        for (auto& d : defs) d.dg.push_back(extra);
        return defs;
      };
      auto pos = add(base->positive_defs());
      std::optional<std::vector<PieceDef>> neg;
      if (!base->odd()) neg = add(base->negative_defs());
      return with_label(NonlinearitySpec::piecewise(pos, neg), "E4");
    }
    case ExampleKind::E2:
      break;
  }

  // E2: q = g'/t^(2_*-2) equals a_j on I_j, linear in the gaps, a_limit at 0,
  // constant a_1 on [sup I_1, M], and g' = C t^(p-2) beyond M.
  const auto& a = P.levels;
  const auto& I = P.intervals;
  if (a.empty() || a.size() != I.size()) throw SpecError("E2 needs matching levels and intervals");
  if (!(P.p > ls && P.p < us)) throw SpecError("E2 needs 2_* < p < 2^*");
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (!(a[j] > 0.0)) throw SpecError("E2 levels must be positive");
    if (j > 0 && !(a[j] < a[j - 1])) throw SpecError("E2 levels must decrease");
    if (!(I[j].first > 0.0 && I[j].second >= I[j].first && I[j].second < P.M))
      throw SpecError("E2 intervals must be closed subsets of (0, M)");
    if (j > 0 && !(I[j].second < I[j - 1].first)) throw SpecError("E2 intervals must descend");
  }
  if (!(P.a_limit >= 0.0 && P.a_limit <= a.back())) throw SpecError("E2 limit level out of range");
  double e = ls - 2.0;
  auto linear = [e](double t0, double q0, double t1, double q1) {
    double beta = (q1 - q0) / (t1 - t0);
    double alpha = q0 - beta * t0;
    return std::vector<Monomial>{{alpha, e}, {beta, e + 1.0}};
  };
  std::vector<PieceDef> pos;
  std::size_t J = a.size();
  pos.push_back({0.0, I[J - 1].first, linear(0.0, P.a_limit, I[J - 1].first, a[J - 1])});
  for (std::size_t j = J; j-- > 0;) {
    if (I[j].second > I[j].first) pos.push_back({I[j].first, I[j].second, {{a[j], e}}});
    if (j > 0) pos.push_back({I[j].second, I[j - 1].first, linear(I[j].second, a[j], I[j - 1].first, a[j - 1])});
  }
  pos.push_back({I[0].second, P.M, {{a[0], e}}});
  pos.push_back({P.M, kInf, {{e2_outer_constant(P), P.p - 2.0}}});
  return with_label(NonlinearitySpec::piecewise(pos), "E2");
}

}  // namespace nls
