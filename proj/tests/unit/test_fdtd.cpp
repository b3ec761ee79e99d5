#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "tde/error.hpp"
#include "tde/fdtd.hpp"

using namespace tde;

TEST_CASE("grid respects the CFL bound and covers T")
{
  const Box box{Vec3(-1, -1, -1), Vec3(1, 1, 1)};
  const auto g = make_grid(box, 0.1, 2.05, 0.9);
  CHECK(g.dt <= 0.9 * 0.1 / std::sqrt(3.0) + 1e-15);
  CHECK(g.duration() == doctest::Approx(2.05).epsilon(1e-12));
  CHECK(g.shape()[0] == 21);
  GridSpec bad = g;
  bad.dt = 0.1;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("causal box keeps the outer boundary out of reach")
{
  const Scene s = Scene::single_sphere({Vec3::Zero(), 0.5, {}});
  const Probe p{Vec3(1, 0, 0), 0.25};
  const Box b = causal_box(s, {p}, 3.0, 0.1, false);
  CHECK(b.hi.x() >= 1.0 + 0.25 + 1.5 + 0.1 - 1e-12);
  CHECK(b.lo.y() <= -(0.25 + 1.5 + 0.1) + 1e-12);
}

TEST_CASE("one-dimensional reflection from the impedance face")
{
  for (const SurfaceCoefficients c :
       {SurfaceCoefficients{0.0, 0.0, false}, SurfaceCoefficients{0.5, 0.0, false},
        SurfaceCoefficients{2.0, 0.0, false}, SurfaceCoefficients{0.0, 0.0, true}})
  {
    const auto r = slab_reflection(c);
    CHECK(r.measured == doctest::Approx(r.expected).epsilon(2e-3));
  }
  // Damping 1 absorbs the wave.
  CHECK(std::abs(slab_reflection({1.0, 0.0, false}).measured) < 2e-3);
}

TEST_CASE("energy of a damped scene does not grow")
{
  const Scene s = Scene::single_sphere({Vec3::Zero(), 0.5, {0.5, 0.0, false}});
  const Probe p{Vec3(1, 0, 0), 0.25};
  const double h = 0.25 / 3.0;
  const auto g = make_grid(causal_box(s, {p}, 1.5, 3 * h, false), h, 1.5);
  SimulationOptions o;
  o.energy_every = 1;
  const auto r = simulate(s, {p}, {p}, g, o);
  REQUIRE(r.energy.size() > 10);
  CHECK(max_energy_rise(r.energy) < 1e-3);
  CHECK(r.ghost_count > 0);
}

TEST_CASE("obstacles thinner than the stencil are refused")
{
  const Scene s = Scene::single_sphere({Vec3::Zero(), 0.05, {}});
  const Probe p{Vec3(0.6, 0, 0), 0.2};
  const auto g = make_grid(causal_box(s, {p}, 0.5, 0.3, false), 0.1, 0.5);
  CHECK_THROWS_AS(simulate(s, {p}, {p}, g), Error);
}

TEST_CASE("free-space center trace follows u(p, t) = t inside the ball")
{
  const Probe p{Vec3::Zero(), 1.0};
  const double h = 0.25;
  const auto g = make_grid(causal_box(Scene::empty(), {p}, 2.0, 3 * h), h, 2.0);
  const auto r = simulate(Scene::empty(), {p}, {p}, g);
  double l1 = 0.0;
  for (int n = 0; n <= g.n_steps; ++n)
  {
    const double t = n * g.dt;
    l1 += std::abs(r.center_traces[0][n] - (t < 1.0 ? t : 0.0)) * g.dt;
  }
  CHECK(l1 / 2.0 < 0.12);
}

TEST_CASE("trace files round trip")
{
  WaveRecord rec;
  rec.probe = {Vec3(1, 2, 3), 0.5};
  rec.quadrature = ball_quadrature(rec.probe.center, rec.probe.radius);
  rec.dt = 0.01;
  rec.values = Eigen::MatrixXd::Random(7, static_cast<Eigen::Index>(rec.quadrature.size()));
  const auto path = (std::filesystem::temp_directory_path() / "tde_trace_test.bin").string();
  write_trace(path, rec);
  const auto back = read_trace(path);
  std::remove(path.c_str());
  CHECK(back.dt == rec.dt);
  CHECK(back.probe.radius == rec.probe.radius);
  CHECK((back.values - rec.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.quadrature.nodes[5] - rec.quadrature.nodes[5]).norm() == 0.0);
}
