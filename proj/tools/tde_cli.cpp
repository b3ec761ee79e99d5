// SPDX-License-Identifier: Apache-2.0
// Command-line driver over the C API.
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tde/tde.h"

namespace
{

int report(tde_status s)
{
  std::fprintf(stderr, "error (%s): %s\n", tde_status_string(s), tde_last_error());
  return 1;
}

struct Overrides
{
  double tau_max = 0.0;
  double resolution = 0.0;
};

tde_status load(const std::string &path, const Overrides &o, tde_experiment **out)
{
  tde_status s = tde_experiment_load(path.c_str(), out);
  if (s != TDE_OK)
  {
    return s;
  }
  if (o.tau_max > 0 && (s = tde_experiment_set(*out, "tau_max", o.tau_max)) != TDE_OK)
  {
    return s;
  }
  if (o.resolution > 0 && (s = tde_experiment_set(*out, "h", o.resolution)) != TDE_OK)
  {
    return s;
  }
  return TDE_OK;
}

void print_warnings(tde_experiment *e)
{
  const char *json = nullptr;
  if (tde_experiment_warnings(e, &json) == TDE_OK && std::string(json) != "[]")
  {
    std::fprintf(stderr, "warnings: %s\n", json);
  }
}

// "lo:hi:count" inclusive, or a comma list.
std::vector<double> parse_values(const std::string &list, const std::string &range)
{
  std::vector<double> v;
  if (!range.empty())
  {
    double lo = 0, hi = 0;
    int n = 0;
    char c1 = 0, c2 = 0;
    std::istringstream in(range);
    if (!(in >> lo >> c1 >> hi >> c2 >> n) || c1 != ':' || c2 != ':' || n < 1)
    {
      throw CLI::ValidationError("--range", "expected lo:hi:count");
    }
    for (int k = 0; k < n; ++k)
    {
      v.push_back(n == 1 ? lo : lo + (hi - lo) * k / (n - 1));
    }
    return v;
  }
  std::istringstream in(list);
  std::string item;
  while (std::getline(in, item, ','))
  {
    if (!item.empty())
    {
      v.push_back(std::stod(item));
    }
  }
  return v;
}

}  // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Time-domain enclosure method experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tde_version()));

  std::string config, out_dir, vary, values, range;
  Overrides overrides;
  int workers = 1;
  unsigned seed = 7;

  auto *run = app.add_subcommand("run", "Run one experiment");
  run->add_option("--config", config, "Experiment config (JSON)")->required();
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--tau-max", overrides.tau_max, "Override the largest tau");
  run->add_option("--resolution", overrides.resolution, "Override the grid spacing h");
  run->add_option("--workers", workers, "Unused for single runs")->check(CLI::PositiveNumber);

  auto *sweep = app.add_subcommand("sweep", "Repeat an experiment over one parameter");
  sweep->add_option("--config", config, "Experiment config (JSON)")->required();
  sweep->add_option("--out", out_dir, "Output directory")->required();
  sweep->add_option("--vary", vary, "tau_max, tau_min, h, T, eta, s, theta or a JSON pointer")
      ->required();
  auto *vals = sweep->add_option("--values", values, "Comma-separated values");
  auto *rng = sweep->add_option("--range", range, "lo:hi:count, inclusive");
  vals->excludes(rng);
  sweep->add_option("--workers", workers, "Concurrent runs")->check(CLI::PositiveNumber);
  sweep->add_option("--tau-max", overrides.tau_max, "Override the largest tau");
  sweep->add_option("--resolution", overrides.resolution, "Override the grid spacing h");

  auto *validate = app.add_subcommand("validate-config", "Check a config without running it");
  validate->add_option("--config", config, "Experiment config (JSON)")->required();

  auto *oracle = app.add_subcommand("oracle-validate", "Run the exact-solution self-checks");
  oracle->add_option("--seed", seed, "Seed for the random check points");
  oracle->add_option("--out", out_dir, "Write checks.json here");

  CLI11_PARSE(app, argc, argv);

  if (*oracle)
  {
    tde_result *r = nullptr;
    if (const tde_status s = tde_oracle_validate(seed, &r); s != TDE_OK)
    {
      return report(s);
    }
    std::fputs(tde_result_summary(r), stdout);
    if (!out_dir.empty())
    {
      if (FILE *f = std::fopen((out_dir + "/checks.json").c_str(), "w"))
      {
        std::fputs(tde_result_json(r), f);
        std::fclose(f);
      }
    }
    const int code = tde_result_exit_code(r);
    tde_result_free(r);
    return code;
  }

  tde_experiment *e = nullptr;
  if (const tde_status s = load(config, overrides, &e); s != TDE_OK)
  {
    tde_experiment_free(e);
    return report(s);
  }

  int code = 0;
  if (*validate)
  {
    std::printf("%s: valid\n", config.c_str());
    print_warnings(e);
  }
  else if (*run)
  {
    print_warnings(e);
    tde_result *r = nullptr;
    if (const tde_status s = tde_experiment_run(e, out_dir.c_str(), &r); s != TDE_OK)
    {
      tde_experiment_free(e);
      return report(s);
    }
    std::fputs(tde_result_summary(r), stdout);
    if (out_dir.empty())
    {
      std::puts(tde_result_json(r));
    }
    code = tde_result_exit_code(r);
    tde_result_free(r);
  }
  else if (*sweep)
  {
    std::vector<double> v;
    try
    {
      v = parse_values(values, range);
    }
    catch (const std::exception &ex)
    {
      tde_experiment_free(e);
      std::fprintf(stderr, "error: %s\n", ex.what());
      return 1;
    }
    tde_result *r = nullptr;
    if (const tde_status s =
            tde_experiment_sweep(e, vary.c_str(), v.data(), v.size(), workers, out_dir.c_str(), &r);
        s != TDE_OK)
    {
      tde_experiment_free(e);
      return report(s);
    }
    std::fputs(tde_result_summary(r), stdout);
    code = tde_result_exit_code(r);
    tde_result_free(r);
  }
  tde_experiment_free(e);
  return code;
}
