#pragma once

#include <stdexcept>
#include <string>

namespace ctst {

// Root of all library errors. Subclasses map onto CLI exit codes in pipeline.cpp.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: malformed corpus bytes, missing files, invalid config.
class InputError : public Error {
 public:
  using Error::Error;
};

// A backend (or fixture) returned data that breaks a documented invariant.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// Non-2xx response from a backend after the retry budget is spent.
class BackendError : public Error {
 public:
  BackendError(int status, std::string body_excerpt);

  int status() const noexcept { return status_; }
  const std::string& body_excerpt() const noexcept { return body_excerpt_; }

 private:
  int status_;
  std::string body_excerpt_;
};

class TimeoutError : public Error {
 public:
  using Error::Error;
};

// Judge output without an extractable score.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Metric inputs for which the quantity is undefined (zero vectors, empty spans).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

}  // namespace ctst
