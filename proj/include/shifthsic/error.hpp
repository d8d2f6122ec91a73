#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace shifthsic {

enum class ErrorKind {
    InvalidInput,
    DegenerateSeries,
    TooLarge,
    InvalidShift,
    GeneratorStall,
    NonStationary,
    ParseError,
    OrderError,
    EmptyInput,
    TooShort,
    NoOverlap,
    SingularDesign,
    InvalidSpec,
    Io,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidInput: return "InvalidInput";
        case ErrorKind::DegenerateSeries: return "DegenerateSeries";
        case ErrorKind::TooLarge: return "TooLarge";
        case ErrorKind::InvalidShift: return "InvalidShift";
        case ErrorKind::GeneratorStall: return "GeneratorStall";
        case ErrorKind::NonStationary: return "NonStationary";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::OrderError: return "OrderError";
        case ErrorKind::EmptyInput: return "EmptyInput";
        case ErrorKind::TooShort: return "TooShort";
        case ErrorKind::NoOverlap: return "NoOverlap";
        case ErrorKind::SingularDesign: return "SingularDesign";
        case ErrorKind::InvalidSpec: return "InvalidSpec";
        case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the kinds above so
/// callers (the CLI in particular) can branch without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace shifthsic
