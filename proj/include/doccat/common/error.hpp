#pragma once

#include <stdexcept>
#include <string>

namespace doccat {

// Base of every error raised by the library. Callers that only care about
// "something in doccat failed" can catch this one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor or matrix dimensions do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A caller-supplied value violates a documented precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A file or stream could not be parsed, or carries an unsupported version.
class FormatError : public Error {
 public:
  using Error::Error;
};

// The requested entity does not exist.
class NotFoundError : public Error {
 public:
  using Error::Error;
};

// A uniqueness rule or a state precondition was violated.
class ConflictError : public Error {
 public:
  using Error::Error;
};

// Underlying storage (database, file system) failed.
class StorageError : public Error {
 public:
  using Error::Error;
};

// Work was cancelled before completion.
class InterruptedError : public Error {
 public:
  using Error::Error;
};

}  // namespace doccat
