#pragma once

#include <stdexcept>
#include <string>

namespace mdl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration, arguments or dataset contents.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite model output, training divergence or an unencodable label.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The receiver pass disagreed with the sender: the coding protocol is broken.
class VerificationError : public Error {
 public:
  using Error::Error;
};

/// Failure reading or parsing an input file.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mdl
