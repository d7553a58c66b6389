#pragma once

#include <stdexcept>
#include <string>

namespace patchgauss {

/// Every failure raised by the library. The message is a one-line diagnostic
/// suitable for printing verbatim by the command-line tool.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed bytes handed to one of the binary decoders.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(what) {}
};

}  // namespace patchgauss
