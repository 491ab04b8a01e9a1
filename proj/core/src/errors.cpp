#include "dcm/errors.hpp"

namespace dcm {

const char* error_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::NonManifold: return "NonManifold";
    case ErrorCode::InconsistentOrientation: return "InconsistentOrientation";
    case ErrorCode::BoundaryEdge: return "BoundaryEdge";
    case ErrorCode::UnflippableConfiguration: return "UnflippableConfiguration";
    case ErrorCode::DegenerateTriangle: return "DegenerateTriangle";
    case ErrorCode::NonConvexQuad: return "NonConvexQuad";
    case ErrorCode::FlipCapExceeded: return "FlipCapExceeded";
    case ErrorCode::BadTargetSum: return "BadTargetSum";
    case ErrorCode::BadTarget: return "BadTarget";
    case ErrorCode::NotDelaunayAtStart: return "NotDelaunayAtStart";
    case ErrorCode::NotCocircular: return "NotCocircular";
    case ErrorCode::SwitchCapExceeded: return "SwitchCapExceeded";
    case ErrorCode::SingularBeyondNullspace: return "SingularBeyondNullspace";
    case ErrorCode::MaxIterExceeded: return "MaxIterExceeded";
    case ErrorCode::DegenerateIntersection: return "DegenerateIntersection";
    case ErrorCode::PointNotLocated: return "PointNotLocated";
    case ErrorCode::NoBoundary: return "NoBoundary";
    case ErrorCode::SymmetryViolation: return "SymmetryViolation";
    case ErrorCode::TopologyMismatch: return "TopologyMismatch";
    case ErrorCode::NotOnSphere: return "NotOnSphere";
    case ErrorCode::EmptyInclusion: return "EmptyInclusion";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NonTriangleFace: return "NonTriangleFace";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::IOError: return "IOError";
  }
  return "Unknown";
}

}  // namespace dcm
