#include <doctest.h>

#include <cmath>
#include <numbers>

#include "tde/error.hpp"
#include "tde/quadrature.hpp"

using namespace tde;

TEST_CASE("Gauss-Legendre integrates polynomials of degree 2n - 1 exactly")
{
  const auto r = gauss_legendre(4, 0.0, 2.0);
  double s = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i)
  {
    s += r.weights[i] * std::pow(r.nodes[i], 7);
  }
  CHECK(s == doctest::Approx(256.0 / 8.0).epsilon(1e-13));
}

TEST_CASE("sphere rules")
{
  for (int n : {26, 50})
  {
    const auto r = lebedev(n);
    double w = 0.0, x2 = 0.0, x4 = 0.0;
    for (std::size_t i = 0; i < r.directions.size(); ++i)
    {
      w += r.weights[i];
      x2 += r.weights[i] * std::pow(r.directions[i].x(), 2);
      x4 += r.weights[i] * std::pow(r.directions[i].x(), 4);
      CHECK(r.directions[i].norm() == doctest::Approx(1.0));
    }
    CHECK(w == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(x2 == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(x4 == doctest::Approx(1.0 / 5.0).epsilon(1e-14));
  }
  CHECK_THROWS_AS(lebedev(7), Error);
}

TEST_CASE("ball rules reproduce the volume and radial moments")
{
  const double r = 0.3;
  const auto q = ball_quadrature(Vec3(1, 2, 3), r);
  const auto d = ball_quadrature_dense(Vec3(1, 2, 3), r, 6, 8, 12);
  double v = 0.0, m2 = 0.0, vd = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i)
  {
    v += q.weights[i];
    m2 += q.weights[i] * (q.nodes[i] - q.center).squaredNorm();
  }
  for (double w : d.weights)
  {
    vd += w;
  }
  const double volume = 4.0 / 3.0 * std::numbers::pi * r * r * r;
  CHECK(v == doctest::Approx(volume).epsilon(1e-13));
  CHECK(vd == doctest::Approx(volume).epsilon(1e-13));
  CHECK(m2 == doctest::Approx(4.0 * std::numbers::pi * std::pow(r, 5) / 5.0).epsilon(1e-13));
}
