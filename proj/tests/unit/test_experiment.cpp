#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tde/error.hpp"
#include "tde/experiment.hpp"

using namespace tde;
using nlohmann::json;

namespace
{

json distance_doc()
{
  return json::parse(R"({
    "kind": "distance",
    "source": "oracle",
    "scene": {"obstacles": [{"type": "sphere", "center": [0, 0, 0], "radius": 1.0,
                             "boundary": "dirichlet"}]},
    "probe": {"center": [3, 0, 0], "radius": 0.2},
    "tau": {"min": 5, "max": 40, "step": 0.5}
  })");
}

std::string config_message(const json &doc)
{
  try
  {
    parse_config(doc);
  }
  catch (const Error &e)
  {
    CHECK(e.code() == ErrorCode::ConfigError);
    return e.what();
  }
  return {};
}

std::filesystem::path scratch(const std::string &name)
{
  const auto p = std::filesystem::temp_directory_path() / ("tde_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("config errors name the offending field")
{
  auto doc = distance_doc();
  doc["probe"]["radius"] = -0.2;
  CHECK(config_message(doc).find("/probe/radius") != std::string::npos);

  doc = distance_doc();
  doc["kind"] = "guess";
  CHECK(config_message(doc).find("/kind") != std::string::npos);

  doc = distance_doc();
  doc["scene"]["obstacles"][0]["radius"] = "one";
  CHECK(config_message(doc).find("/scene/obstacles/0/radius") != std::string::npos);

  doc = distance_doc();
  doc["probe"]["centre"] = json::array({1, 2, 3});
  CHECK(config_message(doc).find("/probe/centre") != std::string::npos);

  doc = distance_doc();
  doc["source"] = "fdtd";
  CHECK(config_message(doc).find("/fdtd") != std::string::npos);

  doc = distance_doc();
  doc["kind"] = "count";
  CHECK(config_message(doc).find("/params") != std::string::npos);

  doc = distance_doc();
  doc["probe"]["center"] = json::array({1.1, 0, 0});
  CHECK(config_message(doc).find("/probe") != std::string::npos);
}

TEST_CASE("distance run writes its artifacts")
{
  const auto out = scratch("distance");
  const auto r = run_experiment(parse_config(distance_doc()), out);
  CHECK(r.exit_code == kExitSuccess);
  CHECK(r.result["dist_estimate"].get<double>() == doctest::Approx(1.8).epsilon(0.01));
  CHECK(r.result["fit"].contains("tau_lo"));
  CHECK(r.result["provenance"]["scene_hash"].get<std::string>().size() == 16);
  CHECK(std::filesystem::exists(out / "indicator.csv"));
  CHECK(std::filesystem::exists(out / "result.json"));
  CHECK(std::filesystem::exists(out / "summary.txt"));

  // Identical configs give identical files.
  const auto again = scratch("distance_again");
  run_experiment(parse_config(distance_doc()), again);
  auto slurp = [](const std::filesystem::path &p)
  {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  };
  CHECK(slurp(out / "indicator.csv") == slurp(again / "indicator.csv"));
  std::filesystem::remove_all(out);
  std::filesystem::remove_all(again);
}

TEST_CASE("inconclusive classification exits with code 2")
{
  auto doc = distance_doc();
  doc["kind"] = "classify";
  doc["scene"]["obstacles"][0] = json::parse(
      R"({"type": "sphere", "center": [0, 0, 0], "radius": 1.0, "damping": 1.0})");
  doc["tau"] = {{"min", 10}, {"max", 40}, {"step", 0.5}};
  const auto r = run_experiment(parse_config(doc), {});
  CHECK(r.exit_code == kExitInconclusive);
  CHECK(r.result["classification"] == "inconclusive");
}

TEST_CASE("parameter overrides and sweeps")
{
  const auto c = parse_config(distance_doc());
  CHECK(with_parameter(c, "tau_max", 30).tau_max == 30.0);
  CHECK(with_parameter(c, "/probe/radius", 0.3).probe.radius == 0.3);
  CHECK_THROWS_AS(with_parameter(c, "nonsense", 1.0), Error);
  CHECK_THROWS_AS(run_sweep(c, "tau_max", {}, 1, {}), Error);

  const auto out = scratch("sweep");
  const auto rows = run_sweep(c, "tau_max", {30.0, 35.0, 40.0}, 2, out);
  REQUIRE(rows.size() == 3);
  for (const auto &row : rows)
  {
    CHECK(row.exit_code == kExitSuccess);
    CHECK(row.result["dist_estimate"].get<double>() == doctest::Approx(1.8).epsilon(0.01));
  }
  CHECK(std::filesystem::exists(out / "sweep.csv"));
  CHECK(std::filesystem::exists(out / "run_002" / "result.json"));
  std::filesystem::remove_all(out);
}

TEST_CASE("time window hypothesis is checked for simulated data")
{
  auto doc = distance_doc();
  doc["source"] = "fdtd";
  doc["fdtd"] = {{"h", 0.05}, {"T", 3.0}};
  auto w = config_warnings(parse_config(doc));
  REQUIRE(w.size() == 1);
  CHECK(w[0].find("T >") != std::string::npos);
  doc["fdtd"]["T"] = 4.5;
  w = config_warnings(parse_config(doc));
  REQUIRE(w.size() == 1);
  CHECK(w[0].find("< 5") != std::string::npos);
  doc["fdtd"]["T"] = 6.0;
  CHECK(config_warnings(parse_config(doc)).empty());
}

TEST_CASE("oracle validation passes")
{
  const auto j = oracle_validation(7);
  for (const auto &[name, entry] : j.items())
  {
    CHECK_MESSAGE(entry["pass"].get<bool>(), name);
  }
}

TEST_CASE("example configs parse")
{
  const std::filesystem::path dir = TDE_SOURCE_DIR "/configs";
  int n = 0;
  for (const auto &entry : std::filesystem::directory_iterator(dir))
  {
    CHECK_NOTHROW(load_config(entry.path()));
    ++n;
  }
  CHECK(n >= 10);
}
