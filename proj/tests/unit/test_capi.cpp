#include <doctest.h>

#include <string>
#include <vector>

#include "tde/tde.h"

TEST_CASE("errors carry a status and a message")
{
  tde_experiment *e = nullptr;
  const char *bad = R"({"kind": "distance", "scene": {"obstacles": [{"type": "sphere",
      "center": [0, 0, 0], "radius": 1}]}, "probe": {"center": [3, 0, 0], "radius": -1}})";
  CHECK(tde_experiment_parse(bad, &e) == TDE_ERR_CONFIG);
  CHECK(e == nullptr);
  CHECK(std::string(tde_last_error()).find("/probe/radius") != std::string::npos);
  CHECK(tde_experiment_parse("{not json", &e) == TDE_ERR_CONFIG);
  CHECK(tde_experiment_load("/nonexistent/config.json", &e) == TDE_ERR_IO);
  CHECK(tde_experiment_parse(nullptr, &e) == TDE_ERR_INVALID_ARGUMENT);
  CHECK(std::string(tde_status_string(TDE_ERR_MIXED_SIGN)).size() > 0);
}

TEST_CASE("run an experiment through the C interface")
{
  tde_experiment *e = nullptr;
  const char *doc = R"({"kind": "distance", "source": "oracle",
      "scene": {"obstacles": [{"type": "sphere", "center": [0, 0, 0], "radius": 1,
                               "boundary": "dirichlet"}]},
      "probe": {"center": [3, 0, 0], "radius": 0.2}})";
  REQUIRE(tde_experiment_parse(doc, &e) == TDE_OK);
  CHECK(std::string(tde_last_error()).empty());
  CHECK(tde_experiment_set(e, "tau_max", 35.0) == TDE_OK);
  CHECK(tde_experiment_set(e, "bogus", 1.0) == TDE_ERR_CONFIG);
  const char *warnings = nullptr;
  CHECK(tde_experiment_warnings(e, &warnings) == TDE_OK);
  CHECK(std::string(warnings) == "[]");
  tde_result *r = nullptr;
  REQUIRE(tde_experiment_run(e, nullptr, &r) == TDE_OK);
  CHECK(tde_result_exit_code(r) == 0);
  CHECK(std::string(tde_result_json(r)).find("dist_estimate") != std::string::npos);
  tde_result_free(r);

  const double values[] = {30.0, 40.0};
  REQUIRE(tde_experiment_sweep(e, "tau_max", values, 2, 2, nullptr, &r) == TDE_OK);
  CHECK(tde_result_exit_code(r) == 0);
  tde_result_free(r);
  tde_experiment_free(e);
}

TEST_CASE("sphere indicator samples and distance")
{
  const double c[3] = {0, 0, 0}, p[3] = {3, 0, 0};
  std::vector<double> taus;
  for (double t = 5; t <= 40; t += 0.5)
  {
    taus.push_back(t);
  }
  tde_samples *s = nullptr;
  REQUIRE(tde_sphere_indicator(c, 1.0, 1, 0, 0, p, 0.2, taus.data(), taus.size(), &s) == TDE_OK);
  CHECK(tde_samples_size(s) == taus.size());
  double tau = 0, log_abs = 0;
  int sign = 0;
  CHECK(tde_samples_get(s, 0, &tau, &sign, &log_abs) == TDE_OK);
  CHECK(tau == 5.0);
  CHECK(sign == -1);
  CHECK(tde_samples_get(s, 1000, &tau, &sign, &log_abs) == TDE_ERR_INVALID_ARGUMENT);
  double d = 0, lo = 0, hi = 0, res = 0;
  REQUIRE(tde_extract_distance(s, &d, &lo, &hi, &res) == TDE_OK);
  CHECK(d == doctest::Approx(1.8).epsilon(0.01));
  CHECK(hi == 40.0);
  tde_samples_free(s);

  tde_samples *inside = nullptr;
  const double q[3] = {0.5, 0, 0};
  CHECK(tde_sphere_indicator(c, 1.0, 1, 0, 0, q, 0.2, taus.data(), taus.size(), &inside) != TDE_OK);
}

TEST_CASE("oracle self-checks through the C interface")
{
  tde_result *r = nullptr;
  REQUIRE(tde_oracle_validate(7, &r) == TDE_OK);
  CHECK(tde_result_exit_code(r) == 0);
  CHECK(std::string(tde_result_summary(r)).find("addition_theorem") != std::string::npos);
  tde_result_free(r);
}
