#pragma once

#include <stdexcept>
#include <string>

namespace hgp {

/// Requested configuration is valid input but outside what the library supports
/// (e.g. multi-dimensional regular Fourier features). CLI exit code 2.
class UnsupportedError : public std::runtime_error {
 public:
  explicit UnsupportedError(const std::string& what) : std::runtime_error(what) {}
};

/// File IO or parse failure. CLI exit code 3.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hgp
