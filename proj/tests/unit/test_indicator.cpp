#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "tde/error.hpp"
#include "tde/indicator.hpp"
#include "tde/oracle.hpp"

using namespace tde;

TEST_CASE("Simpson rule is exact for cubics on even and odd interval counts")
{
  for (int n : {9, 10})
  {
    std::vector<double> f(n);
    const double dt = 0.1;
    for (int i = 0; i < n; ++i)
    {
      const double t = i * dt;
      f[i] = t * t * t - 2 * t + 1;
    }
    const double T = (n - 1) * dt;
    CHECK(simpson(f, dt) == doctest::Approx(T * T * T * T / 4 - T * T + T).epsilon(1e-13));
  }
  std::vector<double> tiny(4, 1.0);
  CHECK_THROWS_AS(simpson(tiny, 0.1), Error);
}

TEST_CASE("Laplace transform of a linear ramp")
{
  WaveRecord rec;
  rec.probe = {Vec3::Zero(), 0.5};
  rec.quadrature = ball_quadrature(rec.probe.center, rec.probe.radius);
  rec.dt = 1e-3;
  const int nt = 2002;  // odd interval count
  rec.values.resize(nt, static_cast<Eigen::Index>(rec.quadrature.size()));
  for (int n = 0; n < nt; ++n)
  {
    rec.values.row(n).setConstant(n * rec.dt);
  }
  const double tau = 3.0, T = rec.duration();
  const double exact = (1.0 - std::exp(-tau * T) * (1.0 + tau * T)) / (tau * tau);
  const auto w = laplace_transform(rec, tau);
  CHECK(w.values[0] == doctest::Approx(exact).epsilon(1e-11));
  CHECK(w.refinement_change > 0.0);
  CHECK(w.refinement_change < 1e-8);
  CHECK(ball_integral(w.values, rec.quadrature) ==
        doctest::Approx(exact * 4.0 / 3.0 * M_PI * 0.125).epsilon(1e-10));
  CHECK_THROWS_AS(laplace_transform(rec, -1.0), Error);
}

TEST_CASE("monostatic assembly with the closed-form free field gives zero without obstacles")
{
  // A record equal to the free-space field: use u = 0 inside the ball at all times, so the
  // indicator equals minus the incident term, which is negative.
  WaveRecord rec;
  rec.probe = {Vec3::Zero(), 0.5};
  rec.quadrature = ball_quadrature(rec.probe.center, rec.probe.radius);
  rec.dt = 0.01;
  rec.values = Eigen::MatrixXd::Zero(401, static_cast<Eigen::Index>(rec.quadrature.size()));
  const auto s = assemble_monostatic(rec, {2.0, 3.0, 4.0}, &rec);
  for (const auto &v : s.values)
  {
    CHECK(v.is_zero());
  }
  CHECK(s.duration == doctest::Approx(4.0));
  CHECK(s.provenance == Provenance::Fdtd);
}

TEST_CASE("sample files keep sign, magnitude and metadata")
{
  IndicatorSamples s;
  s.taus = {1.0, 2.0, 3.0};
  s.values = {LogValue::from_log(1, -10.0), LogValue::from_log(-1, -900.5), LogValue::zero()};
  s.probe = {Vec3(3, 0, 0), 0.2};
  s.receiver = Probe{Vec3(0, 3, 0), 0.1};
  s.provenance = Provenance::Oracle;
  const auto path = (std::filesystem::temp_directory_path() / "tde_samples_test.csv").string();
  write_samples_csv(path, s, R"({"experiment": "unit"})");
  const auto back = read_samples_csv(path);
  std::remove(path.c_str());
  REQUIRE(back.size() == 3);
  CHECK(back.values[1].sign == -1);
  CHECK(back.values[1].log_abs == -900.5);
  CHECK(back.values[2].is_zero());
  REQUIRE(back.receiver.has_value());
  CHECK(back.receiver->radius == 0.1);
  CHECK(back.provenance == Provenance::Oracle);
}

TEST_CASE("sample validation and windows")
{
  IndicatorSamples s;
  s.taus = {1.0, 3.0, 2.0};
  s.values.resize(3);
  CHECK_THROWS_AS(s.validate(), Error);
  s.taus = tau_grid(1.0, 3.0, 0.5);
  s.values.resize(s.taus.size());
  CHECK(s.window(1.5, 2.5).size() == 3);
  CHECK(tau_grid(5, 40, 0.5).size() == 71);
}
