// SPDX-License-Identifier: Apache-2.0
#include "tde/tde.h"

#include <string>

#include "tde/error.hpp"
#include "tde/experiment.hpp"
#include "tde/oracle.hpp"

struct tde_experiment
{
  tde::ExperimentConfig config;
  std::string warnings;
};

struct tde_result
{
  int exit_code = 0;
  std::string json;
  std::string summary;
};

struct tde_samples
{
  tde::IndicatorSamples samples;
};

namespace
{

thread_local std::string last_error;

tde_status status_of(tde::ErrorCode code)
{
  return static_cast<tde_status>(static_cast<int>(code));
}

// Runs f, mapping exceptions to status codes and recording the message.
template <class F>
tde_status guarded(F &&f)
{
  try
  {
    last_error.clear();
    f();
    return TDE_OK;
  }
  catch (const tde::Error &e)
  {
    last_error = e.what();
    return status_of(e.code());
  }
  catch (const std::exception &e)
  {
    last_error = e.what();
    return TDE_ERR_INTERNAL;
  }
  catch (...)
  {
    last_error = "unknown exception";
    return TDE_ERR_INTERNAL;
  }
}

void require(bool ok, const char *what)
{
  if (!ok)
  {
    tde::fail(tde::ErrorCode::InvalidArgument, what);
  }
}

tde::Vec3 vec(const double *v) { return tde::Vec3(v[0], v[1], v[2]); }

}  // namespace

extern "C" {

const char *tde_version(void) { return "0.1.0"; }

const char *tde_status_string(tde_status status)
{
  switch (status)
  {
  case TDE_OK:
    return "ok";
  case TDE_ERR_INVALID_ARGUMENT:
    return "invalid argument";
  case TDE_ERR_DOMAIN:
    return "domain error";
  case TDE_ERR_NOT_ON_SURFACE:
    return "point not on surface";
  case TDE_ERR_SINGULAR:
    return "singular system";
  case TDE_ERR_OVERFLOW:
    return "overflow";
  case TDE_ERR_PRECISION_LOSS:
    return "precision loss";
  case TDE_ERR_NON_FINITE_REFLECTOR:
    return "first reflector not finite";
  case TDE_ERR_CFL:
    return "CFL condition violated";
  case TDE_ERR_UNRESOLVABLE:
    return "feature below grid resolution";
  case TDE_ERR_MIXED_SIGN:
    return "indicator changes sign in fit window";
  case TDE_ERR_INCONCLUSIVE:
    return "inconclusive";
  case TDE_ERR_CONFIG:
    return "configuration error";
  case TDE_ERR_IO:
    return "i/o error";
  case TDE_ERR_INTERNAL:
    return "internal error";
  }
  return "unknown status";
}

const char *tde_last_error(void) { return last_error.c_str(); }

tde_status tde_experiment_load(const char *path, tde_experiment **out)
{
  return guarded(
      [&]
      {
        require(path && out, "tde_experiment_load: null argument");
        *out = new tde_experiment{tde::load_config(path), {}};
      });
}

tde_status tde_experiment_parse(const char *json_text, tde_experiment **out)
{
  return guarded(
      [&]
      {
        require(json_text && out, "tde_experiment_parse: null argument");
        nlohmann::json doc;
        try
        {
          doc = nlohmann::json::parse(json_text, nullptr, true, true);
        }
        catch (const nlohmann::json::parse_error &e)
        {
          tde::fail(tde::ErrorCode::ConfigError, std::string("config is not valid JSON: ") + e.what());
        }
        *out = new tde_experiment{tde::parse_config(doc), {}};
      });
}

void tde_experiment_free(tde_experiment *experiment) { delete experiment; }

tde_status tde_experiment_set(tde_experiment *experiment, const char *parameter, double value)
{
  return guarded(
      [&]
      {
        require(experiment && parameter, "tde_experiment_set: null argument");
        experiment->config = tde::with_parameter(experiment->config, parameter, value);
      });
}

tde_status tde_experiment_warnings(tde_experiment *experiment, const char **json_out)
{
  return guarded(
      [&]
      {
        require(experiment && json_out, "tde_experiment_warnings: null argument");
        experiment->warnings = nlohmann::json(tde::config_warnings(experiment->config)).dump();
        *json_out = experiment->warnings.c_str();
      });
}

tde_status tde_experiment_run(const tde_experiment *experiment, const char *out_dir,
                              tde_result **out)
{
  return guarded(
      [&]
      {
        require(experiment && out, "tde_experiment_run: null argument");
        const auto r = tde::run_experiment(experiment->config, out_dir ? out_dir : "");
        *out = new tde_result{r.exit_code, r.result.dump(2), r.summary};
      });
}

tde_status tde_experiment_sweep(const tde_experiment *experiment, const char *parameter,
                                const double *values, size_t count, int workers,
                                const char *out_dir, tde_result **out)
{
  return guarded(
      [&]
      {
        require(experiment && parameter && out && (values || count == 0),
                "tde_experiment_sweep: null argument");
        const auto rows = tde::run_sweep(experiment->config, parameter,
                                         std::vector<double>(values, values + count), workers,
                                         out_dir ? out_dir : "");
        nlohmann::json j = nlohmann::json::array();
        std::string summary;
        int code = tde::kExitSuccess;
        for (const auto &row : rows)
        {
          j.push_back({{"value", row.value},
                       {"exit_code", row.exit_code},
                       {"result", row.result},
                       {"error", row.error}});
          summary += parameter + std::string(" = ") + std::to_string(row.value) + ": exit " +
                     std::to_string(row.exit_code) + (row.error.empty() ? "" : " (" + row.error + ")") +
                     "\n";
          code = std::max(code, row.exit_code == tde::kExitError ? 1 : 0);
        }
        *out = new tde_result{code, j.dump(2), summary};
      });
}

tde_status tde_oracle_validate(unsigned seed, tde_result **out)
{
  return guarded(
      [&]
      {
        require(out, "tde_oracle_validate: null argument");
        const auto checks = tde::oracle_validation(seed);
        std::string summary;
        bool ok = true;
        for (const auto &[k, v] : checks.items())
        {
          ok = ok && v["pass"].get<bool>();
          summary += k + ": max residual " + v["residual"].dump() + " (tolerance " +
                     v["tolerance"].dump() + ")" + (v["pass"].get<bool>() ? "" : " FAILED") + "\n";
        }
        *out = new tde_result{ok ? 0 : 1, checks.dump(2), summary};
      });
}

int tde_result_exit_code(const tde_result *result) { return result ? result->exit_code : 1; }

const char *tde_result_json(const tde_result *result) { return result ? result->json.c_str() : ""; }

const char *tde_result_summary(const tde_result *result)
{
  return result ? result->summary.c_str() : "";
}

void tde_result_free(tde_result *result) { delete result; }

tde_status tde_sphere_indicator(const double center[3], double radius, int dirichlet,
                                double damping, double stiffness, const double probe_center[3],
                                double probe_radius, const double *taus, size_t count,
                                tde_samples **out)
{
  return guarded(
      [&]
      {
        require(center && probe_center && out && (taus || count == 0),
                "tde_sphere_indicator: null argument");
        tde::SphereObstacle sphere{vec(center), radius, {damping, stiffness, dirichlet != 0}};
        tde::OracleForward forward(sphere);
        auto s = forward.monostatic(tde::Probe{vec(probe_center), probe_radius},
                                    std::vector<double>(taus, taus + count));
        *out = new tde_samples{std::move(s)};
      });
}

tde_status tde_samples_read_csv(const char *path, tde_samples **out)
{
  return guarded(
      [&]
      {
        require(path && out, "tde_samples_read_csv: null argument");
        *out = new tde_samples{tde::read_samples_csv(path)};
      });
}

tde_status tde_samples_write_csv(const tde_samples *samples, const char *path)
{
  return guarded(
      [&]
      {
        require(samples && path, "tde_samples_write_csv: null argument");
        tde::write_samples_csv(path, samples->samples);
      });
}

size_t tde_samples_size(const tde_samples *samples) { return samples ? samples->samples.size() : 0; }

tde_status tde_samples_get(const tde_samples *samples, size_t index, double *tau, int *sign,
                           double *log_abs)
{
  return guarded(
      [&]
      {
        require(samples && index < samples->samples.size(), "tde_samples_get: index out of range");
        if (tau)
        {
          *tau = samples->samples.taus[index];
        }
        if (sign)
        {
          *sign = samples->samples.values[index].sign;
        }
        if (log_abs)
        {
          *log_abs = samples->samples.values[index].log_abs;
        }
      });
}

void tde_samples_free(tde_samples *samples) { delete samples; }

tde_status tde_extract_distance(const tde_samples *samples, double *distance, double *tau_lo,
                                double *tau_hi, double *residual)
{
  return guarded(
      [&]
      {
        require(samples && distance, "tde_extract_distance: null argument");
        const auto fit = tde::extract_distance(samples->samples);
        *distance = fit.distance;
        if (tau_lo)
        {
          *tau_lo = fit.tau_lo;
        }
        if (tau_hi)
        {
          *tau_hi = fit.tau_hi;
        }
        if (residual)
        {
          *residual = fit.residual;
        }
      });
}

}  // extern "C"
