#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace xke {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Problems with user-supplied input: missing files, bad configs, malformed
// data. The CLI maps these to exit code 2.
class UserError : public Error {
 public:
  using Error::Error;
};

class IoError : public UserError {
 public:
  using UserError::UserError;
};

class ParseError : public UserError {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : UserError(path + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace xke
