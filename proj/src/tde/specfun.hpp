// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

namespace tde
{

// xi*cosh(xi) - sinh(xi): strength of the field radiated by a ball source of unit density.
double ball_source_strength(double xi);

// exp(-xi) * ball_source_strength(xi), finite for all xi >= 0.
double ball_source_strength_scaled(double xi);

// log(ball_source_strength(xi)) for xi > 0.
double log_ball_source_strength(double xi);

// Modified spherical Bessel functions of the first (i) and second (k) kind, carried with
// the exponential factors removed: i_scaled = exp(-x) i_n(x), k_scaled = exp(x) k_n(x).
struct ScaledBesselPair
{
  int order = 0;
  double x = 0.0;
  double i_scaled = 0.0;
  double k_scaled = 0.0;
  double di_scaled = 0.0;  // exp(-x) i_n'(x)
  double dk_scaled = 0.0;  // exp(x) k_n'(x)
};

// All orders 0..max_order at one argument.
struct ScaledBesselTable
{
  double x = 0.0;
  std::vector<double> i, k, di, dk;

  int max_order() const { return static_cast<int>(i.size()) - 1; }
  ScaledBesselPair at(int n) const { return {n, x, i[n], k[n], di[n], dk[n]}; }
};

ScaledBesselTable mod_sph_bessel_table(int max_order, double x);
ScaledBesselPair mod_sph_bessel(int n, double x);

// Scaled k only; cheaper when the first kind is not needed.
std::vector<double> scaled_k_orders(int max_order, double x);

// Log-domain table for high orders where the scaled values leave double range:
// log_i[n] = log(exp(-x) i_n(x)), i_ratio[n] = i_n'(x) / i_n(x), likewise for k.
struct LogBesselTable
{
  double x = 0.0;
  std::vector<double> log_i, log_k, i_ratio, k_ratio;

  int max_order() const { return static_cast<int>(log_i.size()) - 1; }
};

LogBesselTable mod_sph_bessel_log_table(int max_order, double x);

// Legendre polynomials P_0..P_max_order at c.
std::vector<double> legendre_table(int max_order, double c);

}  // namespace tde
