// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tde/fdtd.hpp"
#include "tde/log_value.hpp"

namespace tde
{

// Composite Simpson rule on a uniform grid, closing with the 3/8 rule when the interval
// count is odd. Needs at least 5 samples.
double simpson(std::span<const double> samples, double dt);

struct LaplaceTransform
{
  Eigen::VectorXd values;
  // Largest relative change per node when the rule is evaluated on every other sample.
  double refinement_change = 0.0;
};

// int_0^T exp(-rate t) u(x, t) dt at every receiver node.
LaplaceTransform laplace_transform(const WaveRecord &record, double rate);

// Weighted sum over the ball; the weights must add up to the ball volume within 1e-10.
double ball_integral(const Eigen::VectorXd &values, const BallQuadrature &quadrature);

enum class Provenance
{
  Fdtd,
  Oracle,
  Synthetic,
};

std::string to_string(Provenance p);

struct IndicatorSamples
{
  std::vector<double> taus;
  std::vector<LogValue> values;
  Probe probe;
  // Observation ball for bistatic samples.
  std::optional<Probe> receiver;
  // Record length; infinite for oracle data.
  double duration = std::numeric_limits<double>::infinity();
  Provenance provenance = Provenance::Synthetic;
  // Largest Simpson refinement change over the sweep, for recorded data.
  double refinement_change = 0.0;

  bool bistatic() const { return receiver.has_value(); }
  std::size_t size() const { return taus.size(); }
  // Throws unless taus ascend strictly and sizes agree.
  void validate() const;
  // Sub-range with lo <= tau <= hi.
  IndicatorSamples window(double lo, double hi) const;
};

// Monostatic indicator from a record on the source ball. The free field is removed node by
// node before the ball sum, either from a record of the same run without obstacles or,
// when none is given, from the closed-form incident potential.
IndicatorSamples assemble_monostatic(const WaveRecord &record, const std::vector<double> &taus,
                                     const WaveRecord *free_field = nullptr);

// Bistatic indicator from a record on the receiver ball for the emitter ball. Using the
// symmetry int_B v_g = int_B' v_f, the value is -int_B' (w_f - v_f).
IndicatorSamples assemble_bistatic(const WaveRecord &record, const Probe &emitter,
                                   const std::vector<double> &taus,
                                   const WaveRecord *free_field = nullptr);

// CSV with a leading '#'-prefixed JSON metadata line, then columns tau,sign,log_abs_I.
void write_samples_csv(const std::string &path, const IndicatorSamples &samples,
                       const std::string &metadata_json = "{}");
IndicatorSamples read_samples_csv(const std::string &path);

// Linear grid lo, lo + step, ..., up to hi inclusive.
std::vector<double> tau_grid(double lo, double hi, double step);

}  // namespace tde
