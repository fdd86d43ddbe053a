#pragma once

#include <stdexcept>
#include <string>

namespace msvf {

/// Failure categories raised by the library. Each maps to one documented
/// error contract; the CLI maps them onto process exit codes.
enum class Errc {
  NonFiniteInput,
  AtCutLocus,
  KindMismatch,
  NotAGroup,
  OutsideChart,
  SingularJacobian,
  NoConvergence,
  ShapeMismatch,
  GraphNotScalar,
  FrameMismatch,
  NonFiniteLoss,
  EmptyDataset,
  InvalidConfig,
  SchemaError,
  KindUnknown,
  CurveTooLarge,
  ConsecutiveAntipodal,
  JointLimit,
  UnsupportedGridKind,
  IoError,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace msvf
