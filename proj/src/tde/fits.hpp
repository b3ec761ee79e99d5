// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tde/indicator.hpp"

namespace tde
{

using BasisFunction = std::function<double(double)>;

struct LinearFit
{
  Eigen::VectorXd coefficients;
  // Root-mean-square residual over the fitted points.
  double residual = 0.0;
  // Fitted index range [first, last].
  std::size_t first = 0, last = 0;

  std::size_t points() const { return last - first + 1; }
};

// Ordinary least squares of y against the basis over indices [first, last].
LinearFit least_squares(const std::vector<double> &x, const std::vector<double> &y,
                        const std::vector<BasisFunction> &basis, std::size_t first,
                        std::size_t last);

// Trailing-window regression: start from the last half of the samples and extend the window
// backwards one sample at a time while the rms residual keeps decreasing. Samples before
// `earliest` are never used.
LinearFit trailing_window_fit(const std::vector<double> &x, const std::vector<double> &y,
                              const std::vector<BasisFunction> &basis, std::size_t earliest = 0);

// Common bases.
std::vector<BasisFunction> polynomial_in_inverse(int terms);  // 1, 1/x, ..., 1/x^(terms-1)
std::vector<BasisFunction> inverse_powers(int lowest, int count);  // x^-lowest, ...

// Indicator divided by the probe factors, so that only the scattered Green's function of
// the probe centers remains:
//   monostatic  G = I tau^6 / (4 pi phi(tau eta)^2)
//   bistatic    G = -I tau^6 / (4 pi phi(tau eta) phi(tau eta'))
// For the data the paper considers, G ~ exp(-tau L) (g0 + g1/tau + ...), where L is twice the
// surface distance of the probe center (monostatic) or the shortest broken path between the
// two centers (bistatic).
struct NormalizedSamples
{
  std::vector<double> taus;
  std::vector<LogValue> green;
};
NormalizedSamples normalize(const IndicatorSamples &samples);

}  // namespace tde
