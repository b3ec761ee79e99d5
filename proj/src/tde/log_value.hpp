// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <limits>
#include <span>

namespace tde
{

// Signed real stored as sign * exp(log_abs). Indicator values routinely sit far below the
// smallest normal double.
struct LogValue
{
  int sign = 0;
  double log_abs = -std::numeric_limits<double>::infinity();

  static LogValue zero() { return {}; }
  static LogValue from_double(double x);
  static LogValue from_log(int sign, double log_abs);

  bool is_zero() const { return sign == 0; }
  double to_double() const;

  LogValue operator-() const { return {-sign, log_abs}; }
  LogValue operator*(const LogValue &o) const;
  LogValue operator/(const LogValue &o) const;
  LogValue scaled(double factor) const;
  LogValue times_exp(double exponent) const;

  bool operator==(const LogValue &o) const = default;
};

LogValue operator+(const LogValue &a, const LogValue &b);
inline LogValue operator-(const LogValue &a, const LogValue &b) { return a + (-b); }

// Compensated sum of many signed terms.
LogValue log_sum(std::span<const LogValue> terms);

}  // namespace tde
