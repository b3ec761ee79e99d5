// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <vector>

#include "tde/fdtd.hpp"
#include "tde/indicator.hpp"

namespace tde
{

// Source of indicator data. Extraction procedures that need new experiments (moved or
// restricted probes) talk to the obstacle only through this interface.
class ForwardModel
{
public:
  virtual ~ForwardModel() = default;

  virtual IndicatorSamples monostatic(const Probe &probe, const std::vector<double> &taus) = 0;

  // One emission from `emitter`, observed on several receiver balls.
  virtual std::vector<IndicatorSamples> bistatic(const Probe &emitter,
                                                 const std::vector<Probe> &receivers,
                                                 const std::vector<double> &taus) = 0;

  IndicatorSamples bistatic(const Probe &emitter, const Probe &receiver,
                            const std::vector<double> &taus)
  {
    return bistatic(emitter, std::vector<Probe>{receiver}, taus).front();
  }

  // Ground truth, when the caller wants geometric checks; nullptr for opaque sources.
  virtual const Scene *scene() const { return nullptr; }
};

// Exact single-sphere data with T taken as infinite.
class OracleForward : public ForwardModel
{
public:
  explicit OracleForward(SphereObstacle sphere);

  IndicatorSamples monostatic(const Probe &probe, const std::vector<double> &taus) override;
  std::vector<IndicatorSamples> bistatic(const Probe &emitter, const std::vector<Probe> &receivers,
                                         const std::vector<double> &taus) override;
  using ForwardModel::bistatic;
  const Scene *scene() const override { return &scene_; }

private:
  Scene scene_;
};

struct FdtdSettings
{
  double h = 0.05;
  double T = 4.0;
  double cfl = 0.9;
  // Extra distance beyond T/2 between the probes and the outer boundary; negative means 3h.
  double margin = -1.0;
  // Remove the free field with a second run without obstacles (otherwise analytically).
  bool free_field_run = true;
  SimulationOptions simulation;
};

// Finite-difference data for any scene.
class FdtdForward : public ForwardModel
{
public:
  FdtdForward(Scene scene, FdtdSettings settings);

  IndicatorSamples monostatic(const Probe &probe, const std::vector<double> &taus) override;
  std::vector<IndicatorSamples> bistatic(const Probe &emitter, const std::vector<Probe> &receivers,
                                         const std::vector<double> &taus) override;
  using ForwardModel::bistatic;
  const Scene *scene() const override { return &scene_; }
  const FdtdSettings &settings() const { return settings_; }

  // Records of the last experiment, for trace dumps.
  const std::vector<WaveRecord> &last_records() const { return last_records_; }

private:
  // Runs the scene and, when configured, the empty scene on the same grid.
  std::pair<SimulationResult, SimulationResult> run(const Probe &emitter,
                                                    const std::vector<Probe> &receivers);

  Scene scene_;
  FdtdSettings settings_;
  std::vector<WaveRecord> last_records_;
};

}  // namespace tde
