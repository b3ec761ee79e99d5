// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace tde
{

enum class ErrorCode
{
  InvalidArgument = 1,
  DomainError,
  NotOnSurface,
  Singular,
  Overflow,
  PrecisionLoss,
  NonFiniteReflector,
  CflViolation,
  Unresolvable,
  MixedSign,
  Inconclusive,
  ConfigError,
  IoError,
};

class Error : public std::runtime_error
{
public:
  Error(ErrorCode code, const std::string &what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string &what)
{
  throw Error(code, what);
}

}  // namespace tde
