#include <doctest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "tde/error.hpp"
#include "tde/geometry.hpp"

using namespace tde;

TEST_CASE("sphere distances and first reflector")
{
  const Scene s = Scene::single_sphere({Vec3::Zero(), 1.0, {}});
  CHECK(boundary_distance(s, Vec3(3, 0, 0)) == doctest::Approx(2.0));
  CHECK(s.signed_distance(Vec3(0.5, 0, 0)) == doctest::Approx(-0.5));
  const auto lam = first_reflector(s, Vec3(0, 3, 0));
  REQUIRE(lam.finite);
  REQUIRE(lam.points.size() == 1);
  CHECK((lam.points.front() - Vec3(0, 1, 0)).norm() < 1e-8);
  CHECK_THROWS_AS(boundary_distance(s, Vec3(0.2, 0, 0)), Error);
}

TEST_CASE("overlapping spheres are rejected")
{
  Scene s{{{Vec3::Zero(), 1.0, {}}, {Vec3(1.5, 0, 0), 1.0, {}}}, std::nullopt};
  CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("sphere shape operator with the outward normal")
{
  const Scene s = Scene::single_sphere({Vec3(1, 1, 1), 2.0, {}});
  const auto so = shape_operator(s, Vec3(1, 1, 3));
  CHECK(so.k1 == doctest::Approx(-0.5).epsilon(1e-6));
  CHECK(so.k2 == doctest::Approx(-0.5).epsilon(1e-6));
  CHECK(so.mean() == doctest::Approx(-0.5).epsilon(1e-6));
  CHECK(so.gauss() == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("ellipsoid vertex curvatures and directions")
{
  const Mat3 rot = Eigen::AngleAxisd(20.0 * std::numbers::pi / 180.0, Vec3::UnitZ()).toRotationMatrix();
  const Scene s = Scene::single(ImplicitObstacle::ellipsoid(Vec3::Zero(), Vec3(1.0, 0.5, 0.5), rot));
  const auto so = shape_operator(s, Vec3(0, 0, 0.5));
  CHECK(so.k1 == doctest::Approx(-2.0).epsilon(1e-5));
  CHECK(so.k2 == doctest::Approx(-0.5).epsilon(1e-5));
  CHECK(std::abs(so.direction1.dot(rot * Vec3::UnitY())) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(so.direction2.dot(rot * Vec3::UnitX())) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("graph jet of a sphere")
{
  const Scene s = Scene::single_sphere({Vec3::Zero(), 1.0, {}});
  const HJet g = graph_jet(s, Vec3(1, 0, 0));
  const HJet e = sphere_jet(1.0, Vec3::UnitX());
  for (int i = 0; i < 2; ++i)
  {
    for (int j = 0; j < 2; ++j)
    {
      CHECK(g.hessian(i, j) == doctest::Approx(e.hessian(i, j)).epsilon(1e-5));
      CHECK(g.h4(i, i, j, j) == doctest::Approx(e.h4(i, i, j, j)).epsilon(1e-3));
    }
  }
  CHECK(e.hessian(0, 0) == doctest::Approx(-1.0));
  CHECK(std::abs(g.h3(0, 0, 0)) < 1e-4);
}

TEST_CASE("spheroid curvatures on the minor circle")
{
  const double a = 2.0, f = 1.2, b = std::sqrt(a * a - f * f);
  const Spheroid e{Vec3(-f, 0, 0), Vec3(f, 0, 0), 2.0 * a};
  e.validate();
  const auto so = spheroid_shape_operator(e, Vec3(0, b, 0));
  CHECK(so.k1 == doctest::Approx(b / (a * a)).epsilon(1e-7));
  CHECK(so.k2 == doctest::Approx(1.0 / b).epsilon(1e-7));
  const auto pt = spheroid_point(e, Vec3(-f, b, 0).normalized());
  CHECK(e.path_length(pt.point) == doctest::Approx(2.0 * a).epsilon(1e-12));
}

TEST_CASE("bistatic reflector of the unit sphere")
{
  const Scene s = Scene::single_sphere({Vec3::Zero(), 1.0, {}});
  const auto r = bistatic_reflector(s, Vec3(3, 0, 0), Vec3(0, 3, 0));
  const Vec3 x = Vec3(1, 1, 0).normalized();
  CHECK(r.min_path == doctest::Approx(2.0 * (Vec3(3, 0, 0) - x).norm()).epsilon(1e-9));
  REQUIRE(r.points.points.size() == 1);
  CHECK((r.points.points.front() - x).norm() < 1e-6);
}

TEST_CASE("half space reflector is the foot of the perpendicular")
{
  const Scene s = Scene::single(ImplicitObstacle::half_space(Vec3::Zero(), Vec3::UnitZ()));
  CHECK(boundary_distance(s, Vec3(0.3, -0.2, 1.5)) == doctest::Approx(1.5));
  const auto so = shape_operator(s, Vec3(0.3, -0.2, 0));
  CHECK(std::abs(so.k1) < 1e-8);
  CHECK(std::abs(so.k2) < 1e-8);
}
