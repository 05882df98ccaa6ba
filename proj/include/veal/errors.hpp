#pragma once

#include <stdexcept>
#include <string>

namespace veal {

// Root of every error raised by the library. The CLI maps subclasses to exit
// codes (UsageError / ConfigError / CapacityError -> 2, everything else -> 1).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error { using Error::Error; };
class NumericError : public Error { using Error::Error; };
class DegenerateVectorError : public Error { using Error::Error; };
class GradientAccumulationError : public Error { using Error::Error; };
class CapacityError : public Error { using Error::Error; };
class FormatError : public Error { using Error::Error; };
class IntegrityError : public Error { using Error::Error; };
class LookupError : public Error { using Error::Error; };
class LabelError : public Error { using Error::Error; };
class LengthError : public Error { using Error::Error; };
class EmptyInputError : public Error { using Error::Error; };
class ProtocolError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class UsageError : public Error { using Error::Error; };

}  // namespace veal
