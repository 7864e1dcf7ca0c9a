#pragma once

#include <stdexcept>
#include <string>

namespace vps {

// Base class for every error raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A file could not be decoded. The process maps these to exit code 3.
class IoError : public Error {
 public:
  using Error::Error;
};

class BadMagic : public IoError {
 public:
  using IoError::IoError;
};

class TruncatedFile : public IoError {
 public:
  using IoError::IoError;
};

class UnsupportedVersion : public IoError {
 public:
  using IoError::IoError;
};

class UnknownClassId : public IoError {
 public:
  using IoError::IoError;
};

class DimensionOverflow : public IoError {
 public:
  using IoError::IoError;
};

// Structurally valid encoding whose payload breaks a documented invariant.
class MalformedFile : public IoError {
 public:
  using IoError::IoError;
};

// Logic errors below map to exit code 4 when they escape the process.
class EmptyMask : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class IdMisalignment : public Error {
 public:
  using Error::Error;
};

class EmptySupervision : public Error {
 public:
  using Error::Error;
};

class SpecOutOfBounds : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

}  // namespace vps
