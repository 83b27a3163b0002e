#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace ym {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Failure modes that experiments are expected to detect and report.
enum class ErrorCode {
  NoConvergence,
  NonCommuting,
  DidNotConverge,
  StepRejected,
  AmbiguousKernel,
  InsufficientDecay,
  DegenerateRay,
  NotNearFlat,
  BadArgument,
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NonCommuting: return "NonCommuting";
    case ErrorCode::DidNotConverge: return "DidNotConverge";
    case ErrorCode::StepRejected: return "StepRejected";
    case ErrorCode::AmbiguousKernel: return "AmbiguousKernel";
    case ErrorCode::InsufficientDecay: return "InsufficientDecay";
    case ErrorCode::DegenerateRay: return "DegenerateRay";
    case ErrorCode::NotNearFlat: return "NotNearFlat";
    case ErrorCode::BadArgument: return "BadArgument";
  }
  return "Unknown";
}

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, std::string(to_string(code)) + ": " + msg);
}

}  // namespace ym
