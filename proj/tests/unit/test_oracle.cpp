#include <doctest.h>

#include <cmath>

#include "tde/oracle.hpp"
#include "tde/specfun.hpp"

using namespace tde;

TEST_CASE("self-checks of the exact solution")
{
  const auto r = run_oracle_self_check(11);
  CHECK(r.addition_theorem < 1e-12);
  CHECK(r.mean_value < 1e-10);
  CHECK(r.reciprocity < 1e-10);
  CHECK(r.boundary < 1e-10);
  CHECK(r.wronskian < 1e-10);
}

TEST_CASE("incident potential outside the ball")
{
  const Probe b{Vec3::Zero(), 0.3};
  const double rate = 4.0;
  const Vec3 x(1.0, 0.5, 0.0);
  const double r = x.norm();
  const double expected = ball_source_strength(rate * b.radius) / std::pow(rate, 3) *
                          std::exp(-rate * r) / r;
  CHECK(incident_potential(b, x, rate).to_double() == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("indicator sign follows the boundary condition")
{
  const Probe p{Vec3(3, 0, 0), 0.2};
  auto sign_at = [&](SurfaceCoefficients c, double tau)
  { return indicator_oracle(SphereScatterModel({Vec3::Zero(), 1.0, c}, tau), p).sign; };
  CHECK(sign_at({0, 0, true}, 10.0) == -1);
  CHECK(sign_at({0, 0, false}, 10.0) == 1);
  CHECK(sign_at({0.5, 0, false}, 20.0) == 1);
  CHECK(sign_at({2.0, 0, false}, 20.0) == -1);
}

TEST_CASE("scattered response is symmetric in source and target")
{
  const SphereScatterModel m({Vec3::Zero(), 1.0, {0.3, 0.2, false}}, 2.0);
  const Vec3 a(2.0, 0.3, 0.1), b(-0.4, 1.8, 0.6);
  const auto ab = m.point_response(a, b).value.to_double();
  const auto ba = m.point_response(b, a).value.to_double();
  CHECK(ab == doctest::Approx(ba).epsilon(1e-11));
}

TEST_CASE("bistatic indicator with identical balls is minus the monostatic one")
{
  const SphereScatterModel m({Vec3::Zero(), 1.0, {}}, 6.0);
  const Probe p{Vec3(2.5, 0, 0), 0.25};
  const auto mono = indicator_oracle(m, p).to_double();
  const auto bi = bistatic_indicator_oracle(m, p, p).to_double();
  CHECK(bi == doctest::Approx(-mono).epsilon(1e-10));
}
