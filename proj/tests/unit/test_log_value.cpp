#include <doctest.h>

#include <cmath>
#include <vector>

#include "tde/log_value.hpp"

using namespace tde;

TEST_CASE("round trip through the log representation")
{
  for (double x : {-3.5, -1e-300, 0.0, 2.0, 7e200})
  {
    CHECK(LogValue::from_double(x).to_double() == doctest::Approx(x).epsilon(1e-14));
  }
  CHECK(LogValue::from_double(0.0).is_zero());
}

TEST_CASE("values far below the double range keep their arithmetic")
{
  const LogValue a = LogValue::from_log(1, -2000.0);
  const LogValue b = LogValue::from_log(-1, -2000.0 + std::log(0.25));
  const LogValue s = a + b;
  CHECK(s.sign == 1);
  CHECK(s.log_abs == doctest::Approx(-2000.0 + std::log(0.75)));
  CHECK((a * b).log_abs == doctest::Approx(-4000.0 + std::log(0.25)));
  CHECK((a / b).to_double() == doctest::Approx(-4.0));
  CHECK(a.times_exp(2000.0).to_double() == doctest::Approx(1.0));
  CHECK(a.scaled(-2.0).sign == -1);
  CHECK((a - a).is_zero());
}

TEST_CASE("compensated sum of many terms")
{
  std::vector<LogValue> terms;
  for (int k = 0; k < 1000; ++k)
  {
    terms.push_back(LogValue::from_double(k % 2 ? -1.0 : 1.0 + 1e-3));
  }
  CHECK(log_sum(terms).to_double() == doctest::Approx(0.5).epsilon(1e-12));
}
