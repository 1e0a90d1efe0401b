#pragma once

#include <stdexcept>
#include <string>

namespace piac {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PIAC_DEFINE_ERROR(Name)             \
  class Name : public Error {               \
   public:                                  \
    using Error::Error;                     \
  }

PIAC_DEFINE_ERROR(DisconnectedNetwork);
PIAC_DEFINE_ERROR(ShapeError);
PIAC_DEFINE_ERROR(InvalidNetwork);
PIAC_DEFINE_ERROR(GainError);
PIAC_DEFINE_ERROR(NoControllers);
PIAC_DEFINE_ERROR(DegenerateModel);
PIAC_DEFINE_ERROR(UnsupportedForLinearPath);
PIAC_DEFINE_ERROR(UnsupportedForModalPath);
PIAC_DEFINE_ERROR(NotDeflatable);
PIAC_DEFINE_ERROR(UnstableSystem);
PIAC_DEFINE_ERROR(SolverAccuracyError);
PIAC_DEFINE_ERROR(DomainError);
PIAC_DEFINE_ERROR(DAESolveError);
PIAC_DEFINE_ERROR(NumericalBlowup);
PIAC_DEFINE_ERROR(InsufficientHorizon);

#undef PIAC_DEFINE_ERROR

/// Case-file parse or schema failure; carries the offending line and field.
class CaseFormatError : public Error {
 public:
  CaseFormatError(int line, std::string field, const std::string& what)
      : Error("line " + std::to_string(line) + " [" + field + "]: " + what),
        line_(line),
        field_(std::move(field)) {}

  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  int line_;
  std::string field_;
};

}  // namespace piac
