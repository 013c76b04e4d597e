#ifndef OTDP_ERROR_HPP_
#define OTDP_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace otdp {

/// Base of all library errors. `module()` names the component that raised it
/// (e.g. "linprog", "ground-dp") so the CLI can surface it with a tag.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& what)
      : std::runtime_error(what), module_(std::move(module)) {}
  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

/// Argument outside an operation's domain (shape mismatch, undefined map, non-PSD input, ...).
class DomainError : public Error {
  using Error::Error;
};

/// A table or enumeration would exceed a configured size cap.
class CapacityError : public Error {
  using Error::Error;
};

/// Operation invoked in the wrong mode (e.g. reference-dependent costs in simplified DP).
class ModeError : public Error {
  using Error::Error;
};

/// The problem has no finite-cost solution from the requested start.
class InfeasibleError : public Error {
 public:
  InfeasibleError(std::string module, const std::string& what, long stage = -1)
      : Error(std::move(module), what), stage_(stage) {}
  long stage() const noexcept { return stage_; }

 private:
  long stage_;
};

/// Numerical breakdown (iteration cap, singular system).
class SolverFailure : public Error {
  using Error::Error;
};

/// Scenario file does not match the schema. `pointer()` is a JSON pointer to the offending node.
class ValidationError : public Error {
 public:
  ValidationError(std::string pointer, const std::string& what)
      : Error("scenario", pointer + ": " + what), pointer_(std::move(pointer)) {}
  const std::string& pointer() const noexcept { return pointer_; }

 private:
  std::string pointer_;
};

}  // namespace otdp

#endif  // OTDP_ERROR_HPP_
