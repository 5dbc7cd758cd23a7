#include <cmath>
#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "nls_norm/functionals.hpp"
#include "nls_norm/oracle.hpp"

using namespace nls;

namespace {

NonlinearitySpec pure(double p) { return NonlinearitySpec::powers({{1.0, p}}); }

GridPtr std_grid() {
  static GridPtr g = make_grid(3, 30.0, 4000);
  return g;
}

}  // namespace

TEST_SUITE("oracle") {
  TEST_CASE("cubic ground state in three dimensions") {
    auto s = shoot(pure(4.0), 1.0, std_grid());
    CHECK(s.u0 == doctest::Approx(4.33738768).epsilon(1e-7));
    CHECK(s.crossings == 0);
    CHECK(s.decay_ok);
    for (int i = 1; i < s.profile.size(); ++i) CHECK(s.profile.u[i] <= s.profile.u[i - 1]);
    CHECK(mass(s.profile) == doctest::Approx(18.89725130).epsilon(1e-7));
    CHECK(energy_J(s.profile, pure(4.0)) == doctest::Approx(9.44862571).epsilon(1e-7));
  }

  TEST_CASE("frequency scaling of pure power ground states") {
    double p = 4.0, lam = 4.0;
    auto w = shoot(pure(p), 1.0, std_grid());
    auto s = shoot(pure(p), lam, make_grid(3, 15.0, 4000));
    double k = std::pow(lam, 1.0 / (p - 2.0));
    double err = 0.0;
    for (double x = 0.0; x < 12.0; x += 0.137) err = std::max(err, std::abs(interpolate(s.profile, x) - k * interpolate(w.profile, 2.0 * x)));
    CHECK(err < 1e-4 * k * w.u0);
  }

  TEST_CASE("scaling law for p = 3.6") {
    auto law = power_scaling(3.6, 3, std_grid());
    CHECK(law.base_mass == doctest::Approx(38.32372529).epsilon(1e-7));
    CHECK(law.base_energy == doctest::Approx(6.38728757).epsilon(1e-7));
    CHECK(law.lambda_at(law.base_mass) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(law.energy_at(law.base_mass) == doctest::Approx(law.base_energy).epsilon(1e-12));
    // E(rho) is decreasing for mass-supercritical powers
    CHECK(law.energy_at(2.0) < law.energy_at(1.0));
    CHECK(law.lambda_at(2.0) < law.lambda_at(1.0));
  }

  TEST_CASE("Gagliardo-Nirenberg constants") {
    double ls = lower_critical(3);
    CHECK(gn_constant(3, ls, std_grid()) == doctest::Approx(0.5077073828).epsilon(1e-7));
    // the optimizer saturates the quotient; any other profile stays below
    auto w = shoot(pure(4.0), 1.0, std_grid());
    double C4 = gn_constant(3, 4.0, std_grid());
    CHECK(gn_quotient(w.profile, 4.0) == doctest::Approx(C4).epsilon(1e-8));
    auto gs = RadialField::from_function(std_grid(), [](double r) { return std::exp(-r * r); });
    gs.u.back() = 0.0;
    CHECK(gn_quotient(gs, 4.0) < C4);
    CHECK(sobolev_constant(3) == doctest::Approx(std::pow(3.0, -0.5) * std::pow(M_PI, -2.0 / 3.0) * std::pow(2.0, 2.0 / 3.0)).epsilon(1e-12));
  }

  TEST_CASE("cache persists rows") {
    auto path = (std::filesystem::temp_directory_path() / "nls_norm_cache_test.txt").string();
    std::remove(path.c_str());
    {
      GnCache c(path);
      CHECK_FALSE(c.find(3, 4.0, 30.0, 4000).has_value());
      auto row = c.get(3, 4.0, 30.0, 4000);
      CHECK(row.u0 == doctest::Approx(4.33738768).epsilon(1e-7));
    }
    GnCache again(path);
    auto hit = again.find(3, 4.0, 30.0, 4000);
    REQUIRE(hit.has_value());
    CHECK(hit->base_mass == doctest::Approx(18.89725130).epsilon(1e-7));
    CHECK(hit->C == doctest::Approx(gn_constant(3, 4.0, std_grid())).epsilon(1e-12));
    std::remove(path.c_str());
  }

  TEST_CASE("small gradient bound") {
    double ls = lower_critical(3);
    double Cgn = GnCache::global().get(3, ls).C;
    auto spec = NonlinearitySpec::powers({{1.0, 4.0}, {0.1 * ls, ls}});
    double eta = 0.1;
    auto b = small_gradient_bound(spec, 3, 1.0, eta, Cgn);
    CHECK(b.eps > 0.0);
    CHECK(b.delta > 0.0);
    // G(s) <= (eps + eta)|s|^{2_*} + C_eps |s|^{2^*} on a log scan
    double us = upper_critical(3);
    for (double s = 1e-6; s < 1e6; s *= 1.3)
      CHECK(spec.G(s) <= ((b.eps + eta) * std::pow(s, ls) + b.C_eps * std::pow(s, us)) * (1 + 1e-9));
    CHECK(growth_constant(spec, 3, b.eps, eta) == doctest::Approx(b.C_eps).epsilon(1e-9));
  }
}
