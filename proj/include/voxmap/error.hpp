#pragma once

#include <stdexcept>
#include <string>

namespace voxmap {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OutOfBoundsError : Error {
    using Error::Error;
};

struct InvalidConfigError : Error {
    using Error::Error;
};

struct PoseInvalidError : Error {
    using Error::Error;
};

struct ConfigMismatchError : Error {
    using Error::Error;
};

struct CorruptStreamError : Error {
    using Error::Error;
};

struct OutOfOrderError : Error {
    OutOfOrderError(const std::string& msg, uint64_t expected_, uint64_t got_)
        : Error(msg), expected(expected_), got(got_) {}
    uint64_t expected;
    uint64_t got;
};

struct CorruptFrameError : Error {
    using Error::Error;
};

struct PoseParseError : Error {
    using Error::Error;
};

struct CountMismatchError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct UnknownSlotError : Error {
    using Error::Error;
};

struct LengthMismatchError : Error {
    using Error::Error;
};

/// Text parse failure with a byte offset into the input, for caret-positioned reporting.
struct ParseError : Error {
    ParseError(const std::string& msg, size_t position_) : Error(msg), position(position_) {}
    size_t position;
};

}  // namespace voxmap
