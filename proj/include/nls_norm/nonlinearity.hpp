#pragma once

#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nls {

/// 2 + 4/N
inline double lower_critical(int N) { return 2.0 + 4.0 / N; }
/// 2N/(N-2)
inline double upper_critical(int N) { return 2.0 * N / (N - 2.0); }

inline constexpr double kInf = std::numeric_limits<double>::infinity();

class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct PowerTerm {
  double coefficient = 1.0;
  double exponent = 4.0;  // g contains coefficient * |s|^(exponent-2) s
};

// coef * t^power, t = |s|
struct Monomial {
  double coef = 0.0;
  double power = 0.0;
};

// g'(t) on [lo, hi) of the half line t = |s|
struct PieceDef {
  double lo = 0.0;
  double hi = kInf;
  std::vector<Monomial> dg;
};

enum class Quantity { g, G, H, h };

class NonlinearitySpec {
 public:
  struct Values {
    double g, G, H, h;
  };
  struct Piece {
    double lo, hi;
    std::vector<Monomial> dg;
    double g_lo = 0.0, G_lo = 0.0;
    std::vector<double> lo_e1, lo_e2;  // lo^(e+1), lo^(e+2)
  };

  NonlinearitySpec() = default;
  static NonlinearitySpec powers(std::vector<PowerTerm> terms);
  // negative side given as k(t) = -g(-t) for t >= 0; absent means odd extension
  static NonlinearitySpec piecewise(std::vector<PieceDef> positive,
                                    std::optional<std::vector<PieceDef>> negative = std::nullopt);

  double eval(Quantity which, double s) const;
  Values eval_all(double s) const;
  double g(double s) const { return eval_all(s).g; }
  double G(double s) const { return eval_all(s).G; }
  double H(double s) const { return eval_all(s).H; }
  double h(double s) const { return eval_all(s).h; }
  double dg(double s) const;

  bool odd() const { return odd_; }
  bool is_powers() const { return terms_.has_value(); }
  const std::vector<PowerTerm>& terms() const;
  const std::vector<Piece>& positive() const { return pos_; }
  const std::vector<Piece>& negative() const { return odd_ ? pos_ : neg_; }
  std::vector<PieceDef> positive_defs() const;
  std::vector<PieceDef> negative_defs() const;
  std::vector<double> knots() const;

  std::string label;  // builder provenance, e.g. "E1"

 private:
  static std::vector<Piece> build_side(std::vector<PieceDef> defs);
  static Values side_values(const std::vector<Piece>& side, double t);
  static double side_dg(const std::vector<Piece>& side, double t);

  std::vector<Piece> pos_, neg_;
  bool odd_ = true;
  std::optional<std::vector<PowerTerm>> terms_;
};

enum class Verdict { pass, fail, undetermined };
enum class Branch { theorem_a, theorem_b, main_only, inadmissible };
enum class Relation { strict, weak_only, violated };
enum class PreceqPair { four_over_N_G_vs_H, H_vs_crit_G, crit_H_vs_hs };

std::string to_string(Verdict v);
std::string to_string(Branch b);
std::string to_string(Relation r);

struct AssumptionCheck {
  Verdict verdict = Verdict::undetermined;
  std::string detail;
  std::optional<double> witness;
};

struct EtaEstimate {
  double value = 0.0;
  bool exact = false;
  bool diverges = false;
  std::vector<double> shell_sup;  // sup over [2^-k-1, 2^-k], k = 20..60
  std::string trend;              // "increasing", "decreasing", "flat"
};

struct ScanOptions {
  double s_min = 1e-8;
  double s_max = 1e8;
  int per_decade = 100;
  int preceq_depth = 40;
  double tol = 1e-10;
  bool force_scan = false;  // ignore closed-form exponent rules for power sums
};

struct AssumptionReport {
  int N = 3;
  double rho = 1.0;
  std::map<std::string, AssumptionCheck> verdicts;  // A0..A6, A4_preceq, A5_preceq
  EtaEstimate eta;
  std::optional<double> zeta0;
  double growth_c = 0.0;
  double gn_critical = 0.0;  // C_{N,2_*}
  double rho_star = kInf;
  bool rho_admissible = true;
  Branch branch = Branch::inadmissible;
  std::string branch_note;

  bool passes(const std::string& key) const;
};

EtaEstimate estimate_eta(const NonlinearitySpec& spec, int N);
double rho_threshold(double eta, int N, double C_gn);
Relation preceq(const NonlinearitySpec& spec, PreceqPair pair, int N, int depth = 40,
                const ScanOptions& opt = {});
AssumptionReport check_assumptions(const NonlinearitySpec& spec, int N, double rho,
                                   double gn_critical, const ScanOptions& opt = {});

enum class ExampleKind { E1, E2, E3, E4 };

struct ExampleParams {
  int N = 3;
  double zeta = 1.0;        // E1 knot
  double a = 1.0, b = 2.0;  // E3 band
  double mu = 0.0;          // E4
  // E2
  double M = 1.0;
  double p = 4.0;
  std::vector<double> levels;                        // a_j, decreasing
  std::vector<std::pair<double, double>> intervals;  // I_j, decreasing in j
  double a_limit = 0.0;
};

NonlinearitySpec build_example(ExampleKind kind, const NonlinearitySpec* base,
                               const ExampleParams& params);

// E2 continuity constant at |s| = M, recorded in reports
double e2_outer_constant(const ExampleParams& params);

}  // namespace nls
