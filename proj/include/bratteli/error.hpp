#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bratteli {

// Base of every library failure. kind() is the machine-readable tag used by the CLI.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& message) : std::runtime_error(message) {}
  virtual const char* kind() const noexcept { return "Error"; }
  // True when the failure is numeric rather than caused by bad input.
  virtual bool numeric() const noexcept { return false; }
};

#define BRATTELI_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                         \
   public:                                                            \
    explicit Name(const std::string& message) : Error(message) {}     \
    const char* kind() const noexcept override { return #Name; }      \
  };

BRATTELI_DEFINE_ERROR(SchemaError)
BRATTELI_DEFINE_ERROR(StructureError)
BRATTELI_DEFINE_ERROR(ArgumentError)
BRATTELI_DEFINE_ERROR(ParamError)
BRATTELI_DEFINE_ERROR(RankError)
BRATTELI_DEFINE_ERROR(PrimitivityError)
BRATTELI_DEFINE_ERROR(PartitionError)
BRATTELI_DEFINE_ERROR(InvarianceError)
BRATTELI_DEFINE_ERROR(InfiniteExtensionError)
BRATTELI_DEFINE_ERROR(NotProlongableError)
BRATTELI_DEFINE_ERROR(WindowError)
BRATTELI_DEFINE_ERROR(RarityError)
BRATTELI_DEFINE_ERROR(MaximalPathError)

#undef BRATTELI_DEFINE_ERROR

class DepthError : public Error {
 public:
  DepthError(const std::string& message, std::size_t level)
      : Error(message), level_(level) {}
  const char* kind() const noexcept override { return "DepthError"; }
  std::size_t level() const noexcept { return level_; }

 private:
  std::size_t level_;
};

class SingularError : public Error {
 public:
  SingularError(const std::string& message, std::size_t level)
      : Error(message), level_(level) {}
  const char* kind() const noexcept override { return "SingularError"; }
  std::size_t level() const noexcept { return level_; }

 private:
  std::size_t level_;
};

class InconclusiveError : public Error {
 public:
  explicit InconclusiveError(const std::string& message) : Error(message) {}
  const char* kind() const noexcept override { return "InconclusiveError"; }
  bool numeric() const noexcept override { return true; }
};

class ConvergenceError : public Error {
 public:
  explicit ConvergenceError(const std::string& message) : Error(message) {}
  const char* kind() const noexcept override { return "ConvergenceError"; }
  bool numeric() const noexcept override { return true; }
};

}  // namespace bratteli
