// SPDX-License-Identifier: Apache-2.0
#include "tde/specfun.hpp"

#include <cmath>
#include <numbers>

#include "tde/error.hpp"

namespace tde
{

double ball_source_strength(double xi)
{
  if (xi < 0)
  {
    fail(ErrorCode::DomainError, "ball_source_strength: negative argument");
  }
  if (xi < 1e-2)
  {
    // sum_k xi^(2k+1) * 2k / (2k+1)!
    const double x2 = xi * xi;
    return xi * x2 * (1.0 / 3.0 + x2 * (1.0 / 30.0 + x2 * (1.0 / 840.0 + x2 / 45360.0)));
  }
  return xi * std::cosh(xi) - std::sinh(xi);
}

double ball_source_strength_scaled(double xi)
{
  if (xi < 20.0)
  {
    return std::exp(-xi) * ball_source_strength(xi);
  }
  return 0.5 * ((xi - 1.0) + (xi + 1.0) * std::exp(-2.0 * xi));
}

double log_ball_source_strength(double xi)
{
  if (xi <= 0)
  {
    fail(ErrorCode::DomainError, "log_ball_source_strength: argument must be positive");
  }
  return std::log(ball_source_strength_scaled(xi)) + xi;
}

std::vector<double> scaled_k_orders(int max_order, double x)
{
  if (!(x > 0))
  {
    fail(ErrorCode::DomainError, "mod_sph_bessel: argument must be positive");
  }
  std::vector<double> k(max_order + 1);
  k[0] = std::numbers::pi / (2.0 * x);
  if (max_order >= 1)
  {
    k[1] = k[0] * (1.0 + 1.0 / x);
  }
  for (int n = 1; n < max_order; ++n)
  {
    k[n + 1] = k[n - 1] + (2.0 * n + 1.0) / x * k[n];
    if (!std::isfinite(k[n + 1]))
    {
      fail(ErrorCode::Overflow, "mod_sph_bessel: scaled k overflows at order " +
                                    std::to_string(n + 1) + ", x=" + std::to_string(x));
    }
  }
  return k;
}

namespace
{

// Miller's downward recurrence for exp(-x) i_n(x), n = 0..top.
std::vector<double> scaled_i_orders(int top, double x)
{
  const int start = top + 32 + static_cast<int>(std::ceil(7.0 * std::sqrt(x)));
  std::vector<double> f(start + 2, 0.0);
  f[start] = 1e-300;
  for (int n = start; n >= 1; --n)
  {
    f[n - 1] = f[n + 1] + (2.0 * n + 1.0) / x * f[n];
    if (std::abs(f[n - 1]) > 1e250)
    {
      for (int m = n - 1; m <= start; ++m)
      {
        f[m] *= 1e-250;
      }
    }
  }
  const double i0 = -std::expm1(-2.0 * x) / (2.0 * x);
  const double scale = i0 / f[0];
  std::vector<double> out(top + 1);
  for (int n = 0; n <= top; ++n)
  {
    out[n] = f[n] * scale;
  }
  return out;
}

}  // namespace

ScaledBesselTable mod_sph_bessel_table(int max_order, double x)
{
  if (max_order < 0)
  {
    fail(ErrorCode::DomainError, "mod_sph_bessel: negative order");
  }
  if (!(x > 0))
  {
    fail(ErrorCode::DomainError, "mod_sph_bessel: argument must be positive");
  }
  ScaledBesselTable t;
  t.x = x;
  auto i = scaled_i_orders(max_order + 1, x);
  auto k = scaled_k_orders(max_order + 1, x);
  t.i.assign(i.begin(), i.end() - 1);
  t.k.assign(k.begin(), k.end() - 1);
  t.di.resize(max_order + 1);
  t.dk.resize(max_order + 1);
  t.di[0] = i[1];
  t.dk[0] = -k[1];
  for (int n = 1; n <= max_order; ++n)
  {
    t.di[n] = i[n - 1] - (n + 1.0) / x * i[n];
    t.dk[n] = -k[n - 1] - (n + 1.0) / x * k[n];
  }
  return t;
}

ScaledBesselPair mod_sph_bessel(int n, double x)
{
  return mod_sph_bessel_table(n, x).at(n);
}

LogBesselTable mod_sph_bessel_log_table(int max_order, double x)
{
  if (max_order < 0)
  {
    fail(ErrorCode::DomainError, "mod_sph_bessel: negative order");
  }
  if (!(x > 0))
  {
    fail(ErrorCode::DomainError, "mod_sph_bessel: argument must be positive");
  }
  LogBesselTable t;
  t.x = x;
  t.log_i.resize(max_order + 1);
  t.log_k.resize(max_order + 1);
  t.i_ratio.resize(max_order + 1);
  t.k_ratio.resize(max_order + 1);

  // i_{n+1}/i_n from the continued fraction implied by the downward recurrence.
  const int start = max_order + 32 + static_cast<int>(std::ceil(7.0 * std::sqrt(x)));
  std::vector<double> up(start + 1, 0.0);
  for (int n = start; n >= 1; --n)
  {
    up[n - 1] = 1.0 / (up[n] + (2.0 * n + 1.0) / x);
  }
  t.log_i[0] = std::log(-std::expm1(-2.0 * x) / (2.0 * x));
  for (int n = 1; n <= max_order; ++n)
  {
    t.log_i[n] = t.log_i[n - 1] + std::log(up[n - 1]);
  }
  t.i_ratio[0] = up[0];
  for (int n = 1; n <= max_order; ++n)
  {
    t.i_ratio[n] = 1.0 / up[n - 1] - (n + 1.0) / x;
  }

  // k_{n+1}/k_n by the upward recurrence, which is stable for k.
  std::vector<double> kr(max_order + 1);
  kr[0] = 1.0 + 1.0 / x;
  for (int n = 1; n <= max_order; ++n)
  {
    kr[n] = 1.0 / kr[n - 1] + (2.0 * n + 1.0) / x;
  }
  t.log_k[0] = std::log(std::numbers::pi / (2.0 * x));
  for (int n = 1; n <= max_order; ++n)
  {
    t.log_k[n] = t.log_k[n - 1] + std::log(kr[n - 1]);
  }
  t.k_ratio[0] = -kr[0];
  for (int n = 1; n <= max_order; ++n)
  {
    t.k_ratio[n] = -1.0 / kr[n - 1] - (n + 1.0) / x;
  }
  return t;
}

std::vector<double> legendre_table(int max_order, double c)
{
  std::vector<double> p(max_order + 1);
  p[0] = 1.0;
  if (max_order >= 1)
  {
    p[1] = c;
  }
  for (int n = 1; n < max_order; ++n)
  {
    p[n + 1] = ((2.0 * n + 1.0) * c * p[n] - n * p[n - 1]) / (n + 1.0);
  }
  return p;
}

}  // namespace tde
