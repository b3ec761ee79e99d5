#include <doctest.h>

#include <cmath>
#include <numbers>

#include "tde/error.hpp"
#include "tde/fits.hpp"
#include "tde/specfun.hpp"

using namespace tde;

TEST_CASE("least squares recovers exact coefficients")
{
  std::vector<double> x, y;
  for (int i = 0; i < 20; ++i)
  {
    x.push_back(10.0 + i);
    y.push_back(2.0 - 0.5 / x.back() + 3.0 / (x.back() * x.back()));
  }
  const auto fit = least_squares(x, y, polynomial_in_inverse(3), 0, x.size() - 1);
  CHECK(fit.coefficients[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit.coefficients[1] == doctest::Approx(-0.5).epsilon(1e-9));
  CHECK(fit.coefficients[2] == doctest::Approx(3.0).epsilon(1e-8));
  CHECK(fit.residual < 1e-13);
  CHECK(fit.points() == 20);
}

TEST_CASE("rank-deficient bases are reported")
{
  std::vector<double> x{1, 2, 3, 4, 5}, y{1, 2, 3, 4, 5};
  const std::vector<BasisFunction> twice{[](double t) { return t; }, [](double t) { return 2 * t; }};
  CHECK_THROWS_AS(least_squares(x, y, twice, 0, 4), Error);
  CHECK_THROWS_AS(least_squares(x, y, polynomial_in_inverse(3), 0, 1), Error);
}

TEST_CASE("trailing window grows while the residual falls")
{
  std::vector<double> x, y;
  for (int i = 0; i < 30; ++i)
  {
    x.push_back(i);
    // Straight line, with a kink in the first third.
    y.push_back(i < 10 ? 5.0 * i : 1.0 + 0.2 * i + 40.0);
  }
  const std::vector<BasisFunction> line{[](double) { return 1.0; }, [](double t) { return t; }};
  const auto fit = trailing_window_fit(x, y, line, 0);
  CHECK(fit.first >= 10);
  CHECK(fit.coefficients[1] == doctest::Approx(0.2).epsilon(1e-10));
  CHECK(trailing_window_fit(x, y, line, 25).first >= 25);
}

TEST_CASE("normalization divides out the probe source strengths")
{
  IndicatorSamples s;
  s.probe = {Vec3::Zero(), 0.3};
  s.taus = {5.0, 10.0};
  for (double tau : s.taus)
  {
    const double log_i = std::log(4 * std::numbers::pi) + 2 * log_ball_source_strength(tau * 0.3) -
                         6 * std::log(tau) - 2 * tau;
    s.values.push_back(LogValue::from_log(1, log_i));
  }
  const auto g = normalize(s);
  CHECK(g.green[0].log_abs == doctest::Approx(-10.0).epsilon(1e-13));
  CHECK(g.green[1].log_abs == doctest::Approx(-20.0).epsilon(1e-13));
  s.receiver = s.probe;
  CHECK(normalize(s).green[0].sign == -1);
}
