#include <doctest.h>

#include <cmath>
#include <numbers>

#include "tde/specfun.hpp"

using namespace tde;

TEST_CASE("ball source strength matches its closed form and series")
{
  for (double xi : {1e-3, 0.1, 1.0, 5.0, 20.0})
  {
    const double exact = xi * std::cosh(xi) - std::sinh(xi);
    CHECK(ball_source_strength(xi) == doctest::Approx(exact).epsilon(1e-12));
    if (xi >= 0.1)
    {
      CHECK(log_ball_source_strength(xi) == doctest::Approx(std::log(exact)).epsilon(1e-12));
    }
    CHECK(ball_source_strength_scaled(xi) == doctest::Approx(std::exp(-xi) * exact).epsilon(1e-12));
  }
  // Leading term xi^3 / 3 for small arguments.
  CHECK(ball_source_strength(1e-4) == doctest::Approx(1e-12 / 3.0).epsilon(1e-8));
  CHECK(std::isfinite(log_ball_source_strength(2000.0)));
}

TEST_CASE("Wronskian of the scaled modified spherical Bessel pair")
{
  for (double x : {0.05, 0.5, 5.0, 50.0, 400.0})
  {
    const auto t = mod_sph_bessel_table(30, x);
    const double expected = -std::numbers::pi / (2.0 * x * x);
    for (int n = 0; n <= 30; ++n)
    {
      const double w = t.i[n] * t.dk[n] - t.di[n] * t.k[n];
      if (std::isfinite(w) && t.i[n] != 0.0)
      {
        CHECK(std::abs(w / expected - 1.0) < 1e-10);
      }
    }
  }
}

TEST_CASE("low orders agree with elementary expressions")
{
  const double x = 1.7;
  const auto p0 = mod_sph_bessel(0, x);
  CHECK(p0.i_scaled == doctest::Approx(std::exp(-x) * std::sinh(x) / x).epsilon(1e-14));
  CHECK(p0.k_scaled == doctest::Approx(std::numbers::pi / (2.0 * x)).epsilon(1e-14));
  const auto p1 = mod_sph_bessel(1, x);
  const double i1 = (x * std::cosh(x) - std::sinh(x)) / (x * x);
  CHECK(p1.i_scaled == doctest::Approx(std::exp(-x) * i1).epsilon(1e-13));
}

TEST_CASE("log table agrees with the scaled table where both are finite")
{
  const double x = 3.0;
  const auto t = mod_sph_bessel_table(20, x);
  const auto lt = mod_sph_bessel_log_table(20, x);
  for (int n = 0; n <= 20; ++n)
  {
    CHECK(lt.log_i[n] == doctest::Approx(std::log(t.i[n])).epsilon(1e-12));
    CHECK(lt.log_k[n] == doctest::Approx(std::log(t.k[n])).epsilon(1e-12));
  }
  const auto k = scaled_k_orders(20, x);
  CHECK(k[20] == doctest::Approx(t.k[20]).epsilon(1e-13));
}

TEST_CASE("Legendre polynomials")
{
  const auto p = legendre_table(3, 0.3);
  CHECK(p[0] == 1.0);
  CHECK(p[2] == doctest::Approx(0.5 * (3 * 0.09 - 1)));
  CHECK(p[3] == doctest::Approx(0.5 * (5 * 0.027 - 3 * 0.3)));
}
