#pragma once

#include <stdexcept>
#include <string>

namespace sigver {

// Base class for every error raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// --- signal model ---
class EmptyRecord : public Error { public: using Error::Error; };
class KindMismatch : public Error { public: using Error::Error; };

// --- ingestion ---
class MalformedLine : public Error {
public:
    MalformedLine(std::size_t line_no, const std::string& what)
        : Error("line " + std::to_string(line_no) + ": " + what), line_no(line_no) {}
    std::size_t line_no;
};
class CountMismatch : public Error { public: using Error::Error; };
class EmptyFile : public Error { public: using Error::Error; };
class InvalidParams : public Error { public: using Error::Error; };

// --- rendering ---
class ConfigInvalid : public Error { public: using Error::Error; };
class EncodeFailure : public Error { public: using Error::Error; };
class SizeMismatch : public Error { public: using Error::Error; };

// --- VLM client ---
class TransportError : public Error { public: using Error::Error; };
class CassetteMiss : public Error { public: using Error::Error; };
class ResponseMalformed : public Error { public: using Error::Error; };
class SafetyRefusal : public Error { public: using Error::Error; };
class LogprobsUnavailable : public Error { public: using Error::Error; };
class TokenNotFound : public Error { public: using Error::Error; };

// --- scoring ---
class UnknownToken : public Error { public: using Error::Error; };
class RangeError : public Error { public: using Error::Error; };

// --- DTW baseline ---
class TooShort : public Error { public: using Error::Error; };
class EmptySeries : public Error { public: using Error::Error; };

// --- evaluation ---
class DegenerateSet : public Error { public: using Error::Error; };

} // namespace sigver
