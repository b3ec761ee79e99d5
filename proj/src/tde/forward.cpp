// SPDX-License-Identifier: Apache-2.0
#include "tde/forward.hpp"

#include "tde/error.hpp"
#include "tde/oracle.hpp"

namespace tde
{

OracleForward::OracleForward(SphereObstacle sphere) : scene_(Scene::single_sphere(sphere))
{
  scene_.validate();
}

IndicatorSamples OracleForward::monostatic(const Probe &probe, const std::vector<double> &taus)
{
  IndicatorSamples s;
  s.provenance = Provenance::Oracle;
  s.probe = probe;
  for (double tau : taus)
  {
    const SphereScatterModel model(scene_.spheres.front(), tau);
    s.taus.push_back(tau);
    s.values.push_back(indicator_oracle(model, probe));
  }
  s.validate();
  return s;
}

std::vector<IndicatorSamples> OracleForward::bistatic(const Probe &emitter,
                                                      const std::vector<Probe> &receivers,
                                                      const std::vector<double> &taus)
{
  std::vector<IndicatorSamples> out;
  for (const auto &r : receivers)
  {
    IndicatorSamples s;
    s.provenance = Provenance::Oracle;
    s.probe = emitter;
    s.receiver = r;
    out.push_back(std::move(s));
  }
  for (double tau : taus)
  {
    const SphereScatterModel model(scene_.spheres.front(), tau);
    for (std::size_t i = 0; i < receivers.size(); ++i)
    {
      out[i].taus.push_back(tau);
      out[i].values.push_back(bistatic_indicator_oracle(model, emitter, receivers[i]));
    }
  }
  for (const auto &s : out)
  {
    s.validate();
  }
  return out;
}

FdtdForward::FdtdForward(Scene scene, FdtdSettings settings)
    : scene_(std::move(scene)), settings_(settings)
{
  scene_.validate();
  if (!(settings_.h > 0) || !(settings_.T > 0))
  {
    fail(ErrorCode::InvalidArgument, "fdtd: h and T must be positive");
  }
}

std::pair<SimulationResult, SimulationResult> FdtdForward::run(const Probe &emitter,
                                                               const std::vector<Probe> &receivers)
{
  std::vector<Probe> all = receivers;
  all.push_back(emitter);
  const double margin = settings_.margin < 0 ? 3.0 * settings_.h : settings_.margin;
  const Box box = causal_box(scene_, all, settings_.T, margin, false);
  const GridSpec grid = make_grid(box, settings_.h, settings_.T, settings_.cfl);
  auto with = simulate(scene_, SourceSpec{emitter}, receivers, grid, settings_.simulation);
  SimulationResult without;
  if (settings_.free_field_run)
  {
    SimulationOptions plain = settings_.simulation;
    plain.energy_every = 0;
    without = simulate(Scene::empty(), SourceSpec{emitter}, receivers, grid, plain);
  }
  last_records_ = with.records;
  return {std::move(with), std::move(without)};
}

IndicatorSamples FdtdForward::monostatic(const Probe &probe, const std::vector<double> &taus)
{
  auto [with, without] = run(probe, {probe});
  return assemble_monostatic(with.records.front(), taus,
                             settings_.free_field_run ? &without.records.front() : nullptr);
}

std::vector<IndicatorSamples> FdtdForward::bistatic(const Probe &emitter,
                                                    const std::vector<Probe> &receivers,
                                                    const std::vector<double> &taus)
{
  auto [with, without] = run(emitter, receivers);
  std::vector<IndicatorSamples> out;
  for (std::size_t i = 0; i < receivers.size(); ++i)
  {
    out.push_back(assemble_bistatic(with.records[i], emitter, taus,
                                    settings_.free_field_run ? &without.records[i] : nullptr));
  }
  return out;
}

}  // namespace tde
