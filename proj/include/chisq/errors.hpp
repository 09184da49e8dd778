#pragma once

#include <stdexcept>
#include <string>

namespace chisq {

// Exit-code classes used by the command line tool:
// input errors -> 1, inapplicable/inadmissible -> 2, numerical failures -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  [[nodiscard]] virtual int exit_code() const noexcept { return 1; }
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ConfigurationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t position, const std::string& unit = "position")
      : Error(msg + " at " + unit + " " + std::to_string(position)), position_(position) {}
  [[nodiscard]] std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class NotApplicable : public Error {
 public:
  using Error::Error;
  [[nodiscard]] int exit_code() const noexcept override { return 2; }
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
  [[nodiscard]] int exit_code() const noexcept override { return 3; }
};

}  // namespace chisq
