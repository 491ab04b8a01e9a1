#pragma once

#include <stdexcept>
#include <string>

namespace dcm {

enum class ErrorCode {
  NonManifold,
  InconsistentOrientation,
  BoundaryEdge,
  UnflippableConfiguration,
  DegenerateTriangle,
  NonConvexQuad,
  FlipCapExceeded,
  BadTargetSum,
  BadTarget,
  NotDelaunayAtStart,
  NotCocircular,
  SwitchCapExceeded,
  SingularBeyondNullspace,
  MaxIterExceeded,
  DegenerateIntersection,
  PointNotLocated,
  NoBoundary,
  SymmetryViolation,
  TopologyMismatch,
  NotOnSphere,
  EmptyInclusion,
  ParseError,
  NonTriangleFace,
  IndexOutOfRange,
  IOError,
};

const char* error_name(ErrorCode c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dcm
