#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace flipbench {

// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed user input: InitSpec text, config files, trace files, flags.
class InputError : public Error {
 public:
  using Error::Error;
};

// A trace or config line that could not be parsed. Carries the 1-based line.
class ParseError : public InputError {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : InputError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class FrequencyReadError : public Error {
 public:
  using Error::Error;
};

class PinError : public Error {
 public:
  using Error::Error;
};

}  // namespace flipbench
