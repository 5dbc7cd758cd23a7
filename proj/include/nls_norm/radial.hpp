#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace nls {

constexpr int kClosure = 5;

// Uniform radial grid r_i = i*dr, i = 0..n, with quadrature weights for dx on R^N.
struct RadialGrid {
  int N = 3;
  double R = 30.0;
  int n = 4000;
  double dr = 0.0;
  double omega = 0.0;          // surface area of the unit sphere
  std::vector<double> r;       // n+1 nodes
  std::vector<double> w;       // n+1 weights, w[0] = 0
  std::vector<double> w_half;  // n staggered weights at r_{i+1/2}
  double closure[5] = {0, 0, 0, 0, 0};  // u_0 = closure . (u_1, ..., u_5)

  int nodes() const { return n + 1; }
};

using GridPtr = std::shared_ptr<const RadialGrid>;

GridPtr make_grid(int N, double R, int n);

struct RadialField {
  GridPtr grid;
  std::vector<double> u;  // u[n] = 0

  RadialField() = default;
  RadialField(GridPtr g, std::vector<double> values);
  static RadialField zeros(GridPtr g);
  static RadialField from_function(GridPtr g, const std::function<double(double)>& f);

  int size() const { return static_cast<int>(u.size()); }
  double operator[](int i) const { return u[i]; }
};

double integrate(const std::vector<double>& f, const RadialGrid& grid);
double inner(const RadialField& a, const RadialField& b);
double mass(const RadialField& u);
double kinetic(const RadialField& u);
std::vector<double> laplacian(const RadialField& u);
// Pointwise u'' + (N-1)/r u' by centered sixth-order differences; not the kinetic adjoint.
std::vector<double> laplacian_strong(const RadialField& u);

// Sets u_0 to the kinetic minimizer given the other nodes and u_n = 0.
void apply_origin_closure(std::vector<double>& u, const RadialGrid& grid);

double interpolate(const RadialField& u, double x);
RadialField resample(const RadialField& u, GridPtr target);
// lam^{N/2} u(lam r); lost receives the mass fraction of u beyond R*lam
RadialField dilate_mass_preserving(const RadialField& u, double lam, double* lost = nullptr);
// u(s r)
RadialField dilate_plain(const RadialField& u, double s, double* lost = nullptr);

RadialField rearrange(const RadialField& u);

// Solves (shift - Lap) z = res on interior nodes with the origin closure and z_n = 0.
RadialField precondition(const std::vector<double>& res, GridPtr grid, double shift);

void write_text(std::ostream& os, const RadialField& u);
RadialField read_text(std::istream& is, int N);
void write_binary(std::ostream& os, const RadialField& u);
RadialField read_binary(std::istream& is);
void save_field(const std::string& path, const RadialField& u, bool binary);
RadialField load_field(const std::string& path, int N);

}  // namespace nls
