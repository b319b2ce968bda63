#pragma once

#include <stdexcept>
#include <string>

namespace oran_sec {

// Root of every error thrown by the library. Subclasses map onto the
// failure classes callers need to tell apart (framing vs auth vs replay...).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EncodingError : public Error { using Error::Error; };
class FramingError : public Error { using Error::Error; };
class ProtocolError : public Error { using Error::Error; };

class AuthError : public Error { using Error::Error; };
class ReplayError : public Error { using Error::Error; };
class ChannelExpiredError : public Error { using Error::Error; };
class CalibrationError : public Error { using Error::Error; };

class ParameterError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class InputError : public Error { using Error::Error; };
class TrainingError : public Error { using Error::Error; };

}  // namespace oran_sec
