// SPDX-License-Identifier: Apache-2.0
#include "tde/fits.hpp"

#include <cmath>
#include <numbers>

#include "tde/error.hpp"
#include "tde/specfun.hpp"

namespace tde
{

LinearFit least_squares(const std::vector<double> &x, const std::vector<double> &y,
                        const std::vector<BasisFunction> &basis, std::size_t first,
                        std::size_t last)
{
  if (x.size() != y.size() || last >= x.size() || first > last)
  {
    fail(ErrorCode::InvalidArgument, "least_squares: bad index range");
  }
  const auto rows = static_cast<Eigen::Index>(last - first + 1);
  const auto cols = static_cast<Eigen::Index>(basis.size());
  if (rows < cols)
  {
    fail(ErrorCode::InvalidArgument, "least_squares: fewer points than basis functions");
  }
  Eigen::MatrixXd m(rows, cols);
  Eigen::VectorXd rhs(rows);
  for (Eigen::Index r = 0; r < rows; ++r)
  {
    const double xi = x[first + r];
    for (Eigen::Index c = 0; c < cols; ++c)
    {
      m(r, c) = basis[c](xi);
    }
    rhs[r] = y[first + r];
  }
  // Column scaling keeps the QR well conditioned when the basis spans many decades.
  Eigen::VectorXd scale = m.colwise().norm().transpose();
  for (Eigen::Index c = 0; c < cols; ++c)
  {
    if (scale[c] == 0)
    {
      fail(ErrorCode::Singular, "least_squares: basis function vanishes on the window");
    }
    m.col(c) /= scale[c];
  }
  const auto qr = m.colPivHouseholderQr();
  if (qr.rank() < cols)
  {
    fail(ErrorCode::Singular, "least_squares: rank-deficient basis on the window");
  }
  LinearFit fit;
  fit.coefficients = qr.solve(rhs).cwiseQuotient(scale);
  const Eigen::VectorXd res = m * fit.coefficients.cwiseProduct(scale) - rhs;
  fit.residual = std::sqrt(res.squaredNorm() / rows);
  fit.first = first;
  fit.last = last;
  return fit;
}

LinearFit trailing_window_fit(const std::vector<double> &x, const std::vector<double> &y,
                              const std::vector<BasisFunction> &basis, std::size_t earliest)
{
  const std::size_t n = x.size();
  if (n == 0 || earliest >= n)
  {
    fail(ErrorCode::InvalidArgument, "trailing_window_fit: no samples");
  }
  const std::size_t available = n - earliest;
  std::size_t first = n - std::max(available / 2, basis.size() + 1);
  if (first < earliest || n - first < basis.size() + 1)
  {
    first = earliest;
  }
  LinearFit best = least_squares(x, y, basis, first, n - 1);
  while (best.first > earliest)
  {
    const LinearFit wider = least_squares(x, y, basis, best.first - 1, n - 1);
    if (!(wider.residual < best.residual))
    {
      break;
    }
    best = wider;
  }
  return best;
}

std::vector<BasisFunction> polynomial_in_inverse(int terms)
{
  std::vector<BasisFunction> b;
  for (int k = 0; k < terms; ++k)
  {
    b.push_back([k](double x) { return std::pow(x, -k); });
  }
  return b;
}

std::vector<BasisFunction> inverse_powers(int lowest, int count)
{
  std::vector<BasisFunction> b;
  for (int k = lowest; k < lowest + count; ++k)
  {
    b.push_back([k](double x) { return std::pow(x, -k); });
  }
  return b;
}

NormalizedSamples normalize(const IndicatorSamples &s)
{
  s.validate();
  NormalizedSamples out;
  out.taus = s.taus;
  const double log4pi = std::log(4.0 * std::numbers::pi);
  for (std::size_t i = 0; i < s.size(); ++i)
  {
    const double tau = s.taus[i];
    const double emit = log_ball_source_strength(tau * s.probe.radius);
    const double recv = s.receiver ? log_ball_source_strength(tau * s.receiver->radius) : emit;
    LogValue g = s.values[i].times_exp(6.0 * std::log(tau) - log4pi - emit - recv);
    if (s.receiver)
    {
      g = -g;
    }
    out.green.push_back(g);
  }
  return out;
}

}  // namespace tde
