#pragma once

#include <stdexcept>
#include <string>

namespace pale {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input bytes do not follow the declared format (bad magic, wrong tag).
class FormatError : public Error {
public:
    using Error::Error;
};

// Payload shorter than its header declares.
class LengthError : public Error {
public:
    LengthError(std::size_t expected, std::size_t actual)
        : Error("truncated payload: expected " + std::to_string(expected) +
                " bytes, got " + std::to_string(actual)),
          expected_(expected),
          actual_(actual) {}

    std::size_t expected() const noexcept { return expected_; }
    std::size_t actual() const noexcept { return actual_; }

private:
    std::size_t expected_;
    std::size_t actual_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    IoError(const std::string& what, std::size_t offset)
        : Error(what + " at byte offset " + std::to_string(offset)), offset_(offset) {}
    explicit IoError(const std::string& what) : Error(what), offset_(0) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class ParameterError : public Error {
public:
    using Error::Error;
};

class InsufficientSamplesError : public Error {
public:
    using Error::Error;
};

class EmptySequenceError : public Error {
public:
    using Error::Error;
};

class StateError : public Error {
public:
    using Error::Error;
};

class DegenerateLabelsError : public Error {
public:
    using Error::Error;
};

// Network failure or HTTP 429/5xx. Retryable by the caller.
class TransportError : public Error {
public:
    TransportError(const std::string& what, int status) : Error(what), status_(status) {}

    // 0 when no HTTP response was received.
    int status() const noexcept { return status_; }

private:
    int status_;
};

// HTTP 4xx other than 429. Never retried.
class RequestError : public Error {
public:
    RequestError(const std::string& what, int status) : Error(what), status_(status) {}

    int status() const noexcept { return status_; }

private:
    int status_;
};

// Response body is not a well-formed chat completion.
class ProtocolError : public Error {
public:
    using Error::Error;
};

class GenerationError : public Error {
public:
    using Error::Error;
};

class EmptyGenerationError : public GenerationError {
public:
    using GenerationError::GenerationError;
};

class FilterError : public Error {
public:
    using Error::Error;
};

class JudgeParseError : public Error {
public:
    using Error::Error;
};

}  // namespace pale
