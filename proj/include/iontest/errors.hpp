#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace iontest {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments: invalid device size, label, coupling, repetition count, spare qubit.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A syndrome with both (i,0) and (i,1) failing; single-fault decoding does not apply.
class MultiFaultError : public Error {
 public:
  using Error::Error;
};

/// Raised when fewer than two free bits remain and no adaptive test is needed.
class NoTestNeeded : public Error {
 public:
  using Error::Error;
};

class DecodeFailure : public Error {
 public:
  using Error::Error;
};

class IncompletePlan : public Error {
 public:
  using Error::Error;
};

class TooManyFaults : public Error {
 public:
  using Error::Error;
};

class UnsupportedBackend : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Fidelity requested from zero recorded shots.
class UndefinedFidelity : public Error {
 public:
  using Error::Error;
};

/// Contrast scan with no sin(2 phi) support.
class Unfittable : public Error {
 public:
  using Error::Error;
};

/// Mode-coupling table lacks an entry needed by the fidelity formula.
class IncompleteModel : public Error {
 public:
  using Error::Error;
};

/// A replay session lacks records for the listed test ids.
class MissingRecord : public Error {
 public:
  MissingRecord(const std::string& what, std::vector<std::string> ids)
      : Error(what), missing_(std::move(ids)) {}
  const std::vector<std::string>& missing() const noexcept { return missing_; }

 private:
  std::vector<std::string> missing_;
};

}  // namespace iontest
