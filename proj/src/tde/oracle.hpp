// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "tde/geometry.hpp"
#include "tde/log_value.hpp"

namespace tde
{

// Laplace-domain field of a ball source of unit density at decay rate `rate`: the radial
// solution inside the ball and (strength / rate^3) exp(-rate r) / r outside.
LogValue incident_potential(const Probe &probe, const Vec3 &x, double rate);

// Exact exterior solution of the modified Helmholtz equation around one sphere with the
// sphere's own surface coefficients, for point sources exp(-rate |x - z|) / |x - z|.
class SphereScatterModel
{
public:
  SphereScatterModel(SphereObstacle sphere, double rate);

  const SphereObstacle &sphere() const { return sphere_; }
  double rate() const { return rate_; }

  // Mode ratios a_n for n = 0..max_order, each scaled by exp(-2 rate radius).
  std::vector<LogValue> solve_modes(int max_order) const;

  struct Response
  {
    LogValue value;
    int terms = 0;
    // Sum of term magnitudes over the magnitude of the sum.
    double cancellation = 1.0;
  };

  // Scattered field at `target` caused by the unit point source at `source`. When
  // radial_derivative is set, returns the derivative along the radius through target.
  // fixed_order >= 0 forces the truncation order instead of the adaptive rule.
  Response point_response(const Vec3 &source, const Vec3 &target, bool radial_derivative = false,
                          int fixed_order = -1) const;

private:
  SphereObstacle sphere_;
  double rate_;
};

// Monostatic indicator: integral over the probe of the scattered field of the probe's own
// ball source.
LogValue indicator_oracle(const SphereScatterModel &model, const Probe &probe);

// Bistatic indicator for emitter ball `emitter` observed on `receiver`.
LogValue bistatic_indicator_oracle(const SphereScatterModel &model, const Probe &emitter,
                                   const Probe &receiver);

// Relative mismatch of the addition-theorem expansion against exp(-rate|x-y|)/|x-y|.
double addition_theorem_residual(double rate, const Vec3 &x, const Vec3 &y);

// Relative mismatch of the ball mean-value identity for exp(-rate|x-z|)/|x-z|, with the ball
// integral by dense product quadrature.
double mean_value_residual(double rate, const Probe &probe, const Vec3 &z);

// Relative mismatch of int_B v_g against int_B' v_f by dense quadrature.
double reciprocity_residual(double rate, const Probe &a, const Probe &b);

// Boundary-condition residual of incident plus scattered field at the given surface points,
// relative to the size of the fields involved.
double boundary_residual(const SphereScatterModel &model, const Probe &probe,
                         const std::vector<Vec3> &surface_points);

// Results of the self-checks run before any scattering computation.
struct OracleSelfCheck
{
  double addition_theorem = 0.0;
  double mean_value = 0.0;
  double reciprocity = 0.0;
  double boundary = 0.0;
  double wronskian = 0.0;
};

OracleSelfCheck run_oracle_self_check(unsigned seed = 7);

}  // namespace tde
