// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tde/extraction.hpp"
#include "tde/forward.hpp"

namespace tde
{

enum class ExperimentKind
{
  Distance,
  Classify,
  ProbeDirection,
  Curvature,
  Count,
  Beta,
  BistaticDistance,
  SpheroidProbe,
  RotationSweep,
  OracleValidate,
};
std::string to_string(ExperimentKind k);

enum class DataSource
{
  Fdtd,
  Oracle,
};
std::string to_string(DataSource s);

struct ExperimentConfig
{
  std::string name;
  ExperimentKind kind = ExperimentKind::Distance;
  DataSource source = DataSource::Oracle;
  Scene scene;
  Probe probe;
  std::optional<Probe> receiver;
  double tau_min = 5.0, tau_max = 40.0, tau_step = 0.5;
  DistanceModel model = DistanceModel::Normalized;
  FdtdSettings fdtd;
  unsigned seed = 7;
  bool write_trace = false;
  // Kind-specific parameters, already checked by parse_config.
  nlohmann::json params = nlohmann::json::object();
  // The document this was parsed from, kept for provenance and sweeps.
  nlohmann::json document;

  std::vector<double> taus() const { return tau_grid(tau_min, tau_max, tau_step); }
};

// Throws ConfigError naming the offending field path (for example /probe/radius).
ExperimentConfig parse_config(const nlohmann::json &document);
ExperimentConfig load_config(const std::filesystem::path &path);

// Hypotheses of the asymptotic theory that the configuration does not meet.
std::vector<std::string> config_warnings(const ExperimentConfig &config);

// 64-bit FNV-1a of the canonical scene JSON, as hex.
std::string scene_hash(const ExperimentConfig &config);

enum ExitCode
{
  kExitSuccess = 0,
  kExitError = 1,
  kExitInconclusive = 2,
};

struct RunOutcome
{
  int exit_code = kExitSuccess;
  nlohmann::json result;
  std::string summary;
  std::vector<std::string> warnings;
};

// Executes the configured pipeline. When out_dir is non-empty, writes indicator CSV files,
// result.json and summary.txt there. Extraction failures that leave the answer open
// (mixed sign, ambiguous count, inconclusive class) give exit code 2; other errors throw.
RunOutcome run_experiment(const ExperimentConfig &config, const std::filesystem::path &out_dir);

// Replaces one scalar and re-parses. Names: tau_max, tau_min, h, T, s, theta, eta, or a
// JSON pointer such as /params/s1.
ExperimentConfig with_parameter(const ExperimentConfig &config, const std::string &parameter,
                                double value);

struct SweepRow
{
  double value = 0.0;
  int exit_code = kExitSuccess;
  nlohmann::json result;
  std::string error;
};

// Runs each value in its own sub-directory of out_dir, up to `workers` at a time, and writes
// sweep.csv with one row per value.
std::vector<SweepRow> run_sweep(const ExperimentConfig &config, const std::string &parameter,
                                const std::vector<double> &values, int workers,
                                const std::filesystem::path &out_dir);

nlohmann::json oracle_validation(unsigned seed);

nlohmann::json to_json(const DistanceFit &f);
nlohmann::json to_json(const AFit &f);
nlohmann::json to_json(const CurvatureReport &r);
nlohmann::json to_json(const MembershipTest &m);
nlohmann::json to_json(const RotationSweep &r);

}  // namespace tde
