#pragma once

#include <stdexcept>
#include <string>

namespace bidrank {

// Invalid inputs, malformed configs, violated preconditions. CLI maps this to exit 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An internal resource guard tripped (enumeration limits and the like). CLI maps this
// to exit 2 and names the guard.
class GuardError : public std::runtime_error {
 public:
  GuardError(std::string guard, const std::string& message)
      : std::runtime_error("guard:" + guard + ": " + message), guard_(std::move(guard)) {}

  const std::string& guard() const noexcept { return guard_; }

 private:
  std::string guard_;
};

}  // namespace bidrank
