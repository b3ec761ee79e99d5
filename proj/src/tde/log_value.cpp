// SPDX-License-Identifier: Apache-2.0
#include "tde/log_value.hpp"

#include <algorithm>

namespace tde
{

LogValue LogValue::from_double(double x)
{
  if (x == 0.0 || std::isnan(x))
  {
    return {};
  }
  return {x > 0 ? 1 : -1, std::log(std::abs(x))};
}

LogValue LogValue::from_log(int sign, double log_abs)
{
  if (sign == 0 || log_abs == -std::numeric_limits<double>::infinity())
  {
    return {};
  }
  return {sign > 0 ? 1 : -1, log_abs};
}

double LogValue::to_double() const
{
  return sign == 0 ? 0.0 : sign * std::exp(log_abs);
}

LogValue LogValue::operator*(const LogValue &o) const
{
  if (sign == 0 || o.sign == 0)
  {
    return {};
  }
  return {sign * o.sign, log_abs + o.log_abs};
}

LogValue LogValue::operator/(const LogValue &o) const
{
  if (o.sign == 0)
  {
    return {sign, std::numeric_limits<double>::infinity()};
  }
  if (sign == 0)
  {
    return {};
  }
  return {sign * o.sign, log_abs - o.log_abs};
}

LogValue LogValue::scaled(double factor) const
{
  return *this * from_double(factor);
}

LogValue LogValue::times_exp(double exponent) const
{
  if (sign == 0)
  {
    return {};
  }
  return {sign, log_abs + exponent};
}

LogValue operator+(const LogValue &a, const LogValue &b)
{
  if (a.sign == 0)
  {
    return b;
  }
  if (b.sign == 0)
  {
    return a;
  }
  const LogValue &big = a.log_abs >= b.log_abs ? a : b;
  const LogValue &small = a.log_abs >= b.log_abs ? b : a;
  const double ratio = std::exp(small.log_abs - big.log_abs);
  const double m = big.sign == small.sign ? 1.0 + ratio : 1.0 - ratio;
  if (m == 0.0)
  {
    return {};
  }
  return {big.sign, big.log_abs + std::log(m)};
}

LogValue log_sum(std::span<const LogValue> terms)
{
  double top = -std::numeric_limits<double>::infinity();
  for (const auto &t : terms)
  {
    if (t.sign != 0)
    {
      top = std::max(top, t.log_abs);
    }
  }
  if (top == -std::numeric_limits<double>::infinity())
  {
    return {};
  }
  // Kahan summation of the rescaled mantissas.
  double sum = 0.0, carry = 0.0;
  for (const auto &t : terms)
  {
    if (t.sign == 0)
    {
      continue;
    }
    const double y = t.sign * std::exp(t.log_abs - top) - carry;
    const double s = sum + y;
    carry = (s - sum) - y;
    sum = s;
  }
  return LogValue::from_double(sum).times_exp(top);
}

}  // namespace tde
