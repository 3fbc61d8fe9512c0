#pragma once

#include <stdexcept>
#include <string>

namespace cgo2d {

enum class Err {
  SyntaxError,
  UnknownIdentifier,
  EvalError,
  DegenerateStencil,
  EmptyRegion,
  MeshMismatch,
  EllipticityViolation,
  NonRealVectorField,
  MetricNotIdentity,
  NonPositiveBeta,
  NonDiffeomorphism,
  IncompatibleDifferences,
  MultiplyConnected,
  SingularPrincipalPart,
  SolveFailure,
  BasisMismatch,
  CorrectionFailure,
  OscillationUnresolved,
  DegenerateRequest,
  ConstantWeight,
  BoundaryConditionUnachievable,
  CertificationFailure,
  IllConditionedBasis,
  InfeasibleConstraints,
  InterpolationFailure,
  MissingCriticalPoint,
  MissingCertificates,
  AmplitudeNotVanishing,
  CauchyDataMismatch,
  ConfigError,
};

const char* err_name(Err e);

class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& what)
      : std::runtime_error(std::string(err_name(code)) + ": " + what), code_(code) {}
  Err code() const { return code_; }

 private:
  Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& what) { throw Error(code, what); }

}  // namespace cgo2d
