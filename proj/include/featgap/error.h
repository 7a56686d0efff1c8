#ifndef FEATGAP_ERROR_H_
#define FEATGAP_ERROR_H_

#include <stdexcept>
#include <string>

namespace featgap {

// Base for every error the library raises. CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor / layer shapes do not chain, or an output dimension is not integral.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A numeric argument is outside its mathematical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A file or string could not be parsed into the expected structure.
class ParseError : public Error {
 public:
  using Error::Error;
};

// An encoded stream is malformed.
class DecodeError : public Error {
 public:
  using Error::Error;
};

}  // namespace featgap

#endif  // FEATGAP_ERROR_H_
