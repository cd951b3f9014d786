#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace saddle {

enum class ErrorKind {
    SingularBlock,
    Overflow,
    IndexOutOfRange,
    DimensionMismatch,
    ZeroDiagonal,
    NotDivisible,
    EmptySelection,
    ZeroPivot,
    ZeroRow,
    SetupFailure,
    ParseError,
    UnsupportedField,
    IoError,
    InvalidSize,
    InvalidArgument,
};

constexpr std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::SingularBlock:     return "SingularBlock";
        case ErrorKind::Overflow:          return "Overflow";
        case ErrorKind::IndexOutOfRange:   return "IndexOutOfRange";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::ZeroDiagonal:      return "ZeroDiagonal";
        case ErrorKind::NotDivisible:      return "NotDivisible";
        case ErrorKind::EmptySelection:    return "EmptySelection";
        case ErrorKind::ZeroPivot:         return "ZeroPivot";
        case ErrorKind::ZeroRow:           return "ZeroRow";
        case ErrorKind::SetupFailure:      return "SetupFailure";
        case ErrorKind::ParseError:        return "ParseError";
        case ErrorKind::UnsupportedField:  return "UnsupportedField";
        case ErrorKind::IoError:           return "IoError";
        case ErrorKind::InvalidSize:       return "InvalidSize";
        case ErrorKind::InvalidArgument:   return "InvalidArgument";
    }
    return "Unknown";
}

/// Exception type thrown by every component of the library.
class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string &what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string &what) {
    throw Error(kind, what);
}

inline void precondition(bool cond, ErrorKind kind, const char *what) {
    if (!cond) fail(kind, what);
}

} // namespace saddle
