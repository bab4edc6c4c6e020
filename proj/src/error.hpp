#pragma once

#include <stdexcept>
#include <string>

namespace sflow {

enum class Err {
  Syntax,
  UnknownIdentifier,
  Domain,
  Dimension,
  Schema,
  Io,
  NonFinite,
  AlreadyAutonomous,
  NotAutonomous,
  ProjectionDiverged,
  JacobianRankDeficient,
  OffManifold,
  StepRejected,
  TooFewSamples,
  InvalidArgument,
  NotSolved,
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Err code() const { return code_; }

 private:
  Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace sflow
